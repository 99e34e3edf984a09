#include "mte/gcv.hpp"

#include <cmath>
#include <limits>

namespace mte {

double gcv_score(double rss, std::size_t n, std::size_t p) {
    if (p >= n) throw ConfigError("gcv: parameter count must be below n");
    const double shrink = 1.0 - static_cast<double>(p) / static_cast<double>(n);
    return (rss / static_cast<double>(n)) / (shrink * shrink);
}

GcvReport gcv_select(const Dataset& data, const std::vector<double>& f_hat,
                     const std::vector<Feature>& x_beta, const std::vector<Feature>& x_lambda,
                     const std::vector<int>& knot_candidates, double window_lo, double window_hi) {
    if (knot_candidates.empty()) throw ConfigError("gcv: no knot candidates");
    GcvReport report;
    double best = std::numeric_limits<double>::infinity();
    for (int j : knot_candidates) {
        GcvCandidate cand;
        cand.knots = j;
        const SplineBasis basis = SplineBasis::equally_spaced(j, window_lo, window_hi);
        const std::size_t p = x_beta.size() + x_lambda.size() + static_cast<std::size_t>(j);
        cand.parameters = p;
        if (p >= data.n()) {
            cand.skipped = true;
            report.candidates.push_back(cand);
            continue;
        }
        const SecondStageModel fit =
            second_stage_fit(data, f_hat, x_beta, x_lambda, basis, window_lo, window_hi);
        cand.rss = fit.rss;
        cand.gcv = gcv_score(fit.rss, data.n(), fit.parameter_count());
        report.candidates.push_back(cand);
        if (cand.gcv < best) {
            best = cand.gcv;
            report.selected_knots = j;
        }
    }
    if (report.selected_knots == 0) throw FitError("gcv: every candidate was skipped (p >= n)");
    return report;
}

}  // namespace mte
