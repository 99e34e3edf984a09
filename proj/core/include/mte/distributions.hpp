#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/common.hpp"

namespace mte {

// One-dimensional marginal attached to a latent standard-normal driver z.
//
// Families:
//   constant   value
//   normal     mean, sd           ->  mean + sd * z
//   lognormal  meanlog, sdlog     ->  exp(meanlog + sdlog * z)
//   uniform    low, high          ->  low + (high-low) * Phi(z)
//   twopoint   a, b, p            ->  a with prob p, else b (via Phi(z) < p)
//   table      (u, value) knots   ->  piecewise-linear transport map applied
//                                     to u = Phi(z); the map need not be
//                                     monotone, which is what lets correlated
//                                     parameters trace arbitrary joint curves.
struct MarginalSpec {
    enum class Family { Constant, Normal, Lognormal, Uniform, TwoPoint, Table };

    Family family = Family::Constant;
    double a = 0.0;  // value / mean / meanlog / low / point a
    double b = 1.0;  // sd / sdlog / high / point b
    double p = 0.5;  // twopoint probability of a
    std::vector<std::pair<double, double>> table;  // (u, value), u ascending

    static MarginalSpec constant(double value);
    static MarginalSpec normal(double mean, double sd);
    static MarginalSpec lognormal(double meanlog, double sdlog);
    static MarginalSpec uniform(double low, double high);
    static MarginalSpec twopoint(double a, double b, double p = 0.5);
    static MarginalSpec from_table(std::vector<std::pair<double, double>> knots);

    void validate(const std::string& what) const;
    double transform(double z) const;
};

// Joint draw of the four structural parameters (theta1, theta2, theta3, nu)
// through a Gaussian copula. The correlation matrix only needs to be positive
// semi-definite; it is factored through a clipped eigendecomposition so
// comonotone (corr = 1) blocks are allowed.
class CopulaSampler {
public:
    CopulaSampler(std::vector<MarginalSpec> marginals, Eigen::MatrixXd correlation);

    std::size_t dim() const { return marginals_.size(); }
    // Draws one joint sample; engine advances by dim() normals.
    Eigen::VectorXd draw(std::mt19937_64& engine) const;

private:
    std::vector<MarginalSpec> marginals_;
    Eigen::MatrixXd factor_;  // correlation = factor * factor'
};

}  // namespace mte
