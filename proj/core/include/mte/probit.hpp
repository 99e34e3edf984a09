#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/dataset.hpp"
#include "mte/features.hpp"

namespace mte {

// First-stage participation probit P(participates = 1 | X, Z) = Phi(X*eta + Z*delta).
// The feature recipes travel with the model so predictions can be made on any
// conformable rows (bootstrap resamples, ineligible samples, reform scenarios).
struct FirstStageModel {
    std::vector<Feature> x_features;  // includes the intercept
    std::vector<Feature> z_features;  // instrument index and its interactions
    Eigen::VectorXd eta;              // coefficients on x_features
    Eigen::VectorXd delta;            // coefficients on z_features
    double log_likelihood = 0.0;
    int iterations = 0;
    std::vector<double> x_means;      // sample means of the X block

    Eigen::VectorXd coefficients() const;  // [eta; delta]
    std::vector<std::string> coefficient_names() const;
};

struct ProbitOptions {
    int max_iterations = 100;
    double gradient_tol = 1e-8;     // max-norm convergence criterion
    double divergence_norm = 1e4;   // coefficient norm treated as separation
};

// Newton-Raphson probit MLE with analytic gradient and Hessian, with
// step-halving whenever a full step lowers the likelihood. Rank-deficient
// designs raise RankError naming the collinear columns; coefficient
// divergence (perfect separation) raises FitError.
FirstStageModel probit_fit(const Dataset& data, const std::vector<Feature>& x_features,
                           const std::vector<Feature>& z_features,
                           const ProbitOptions& options = {});

// Phi(X*eta + Z*delta) clamped to [1e-6, 1 - 1e-6].
std::vector<double> probit_predict(const FirstStageModel& model, const Dataset& rows);

// Linear index X*eta + Z*delta (no clamp), for diagnostics.
std::vector<double> probit_index(const FirstStageModel& model, const Dataset& rows);

}  // namespace mte
