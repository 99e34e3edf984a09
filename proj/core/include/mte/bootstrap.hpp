#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mte/pipeline.hpp"

namespace mte {

struct BootstrapResult {
    int replicates_requested = 0;
    std::vector<double> f_grid;
    // One row per converged replicate, aligned with f_grid.
    std::vector<std::vector<double>> curves;
    // Per-replicate second-stage models for re-evaluation at other points
    // (reform scenarios), aligned with `curves`.
    std::vector<SecondStageModel> models;
    std::vector<double> lo95, hi95;
    std::vector<std::string> failures;  // replicate index: reason
    // Grid points where the full-sample point estimate escapes the band;
    // informational (flagged, not fatal).
    int point_outside_band = 0;

    int converged() const { return static_cast<int>(curves.size()); }
};

// State-level block bootstrap of the whole pipeline (wage equation included):
// clusters are resampled with replacement to the original cluster count and
// the full estimation is rerun per replicate. Percentile 2.5/97.5 bands.
// Deterministic given seed, independent of worker count; more than 20%
// failed replicates aborts with a diagnostic.
BootstrapResult block_bootstrap(const Dataset& data, const EstimatorSpec& spec, int replicates,
                                std::uint64_t seed, const MTECurve& point_curve,
                                int workers = 0);

// Resamples whole clusters (with replacement, original cluster count) using
// the given engine; drawn blocks get fresh sequential cluster ids.
Dataset resample_clusters(const Dataset& data, std::mt19937_64& engine);

// Generic cluster bootstrap of a scalar statistic.
struct ScalarBootstrap {
    double estimate = 0.0;
    double std_error = 0.0;
    std::vector<double> replicates;
    std::vector<std::string> failures;
};

ScalarBootstrap bootstrap_scalar(const Dataset& data, int replicates, std::uint64_t seed,
                                 const std::function<double(const Dataset&)>& statistic,
                                 int workers = 0);

// Joint Wald test that all spline coefficients beyond the constant (g2..gJ)
// are zero, i.e. that g' vanishes everywhere and responses are homogeneous.
// The covariance comes from the bootstrap replicates; the statistic is
// compared with the chi-square 95% critical value.
struct HomogeneityTest {
    double wald = 0.0;
    int df = 0;
    double critical_95 = 0.0;
    bool reject = false;
};

HomogeneityTest homogeneity_test(const SecondStageModel& fit, const BootstrapResult& boot);

}  // namespace mte
