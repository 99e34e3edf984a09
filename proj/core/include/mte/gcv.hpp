#pragma once

#include <vector>

#include "mte/second_stage.hpp"

namespace mte {

// Generalized cross-validation over knot counts:
//   GCV(J) = (RSS/n) / (1 - p/n)^2,  p = second-stage parameter count.
struct GcvCandidate {
    int knots = 0;
    double rss = 0.0;
    std::size_t parameters = 0;
    double gcv = 0.0;
    bool skipped = false;  // p >= n
};

struct GcvReport {
    std::vector<GcvCandidate> candidates;
    int selected_knots = 0;
};

double gcv_score(double rss, std::size_t n, std::size_t p);

GcvReport gcv_select(const Dataset& data, const std::vector<double>& f_hat,
                     const std::vector<Feature>& x_beta, const std::vector<Feature>& x_lambda,
                     const std::vector<int>& knot_candidates, double window_lo = 0.25,
                     double window_hi = 0.66);

}  // namespace mte
