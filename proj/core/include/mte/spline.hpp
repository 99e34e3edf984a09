#pragma once

#include <vector>

#include "mte/common.hpp"

namespace mte {

// Natural cubic spline basis on J knots inside (0,1):
//   [1, F, S3, ..., SJ],  S_{k+2} = d_k - d_{J-1},
//   d_k(F) = [max(0, F - pi_k)^3 - max(0, F - pi_J)^3] / (pi_J - pi_k).
// The function it spans is linear below the first knot and beyond the last,
// with continuous first and second derivatives at every knot.
class SplineBasis {
public:
    explicit SplineBasis(std::vector<double> knots);

    // J equally spaced knots with endpoints at the window bounds.
    static SplineBasis equally_spaced(int knot_count, double lo, double hi);

    int size() const { return static_cast<int>(knots_.size()); }  // = basis dimension J
    const std::vector<double>& knots() const { return knots_; }

    // Basis values and first derivatives at F (defined for all F in [0,1]).
    void evaluate(double f, std::vector<double>& values, std::vector<double>& derivs) const;

    // g(F) = sum_j coeffs[j] * basis_j(F) and its derivative.
    double g(double f, const std::vector<double>& coeffs) const;
    double g_prime(double f, const std::vector<double>& coeffs) const;

private:
    std::vector<double> knots_;
};

}  // namespace mte
