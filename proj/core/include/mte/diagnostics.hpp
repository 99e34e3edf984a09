#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mte/bootstrap.hpp"
#include "mte/pipeline.hpp"

namespace mte {

// ---------------------------------------------------------------------------
// Instrument strength by propensity-score segment
// ---------------------------------------------------------------------------

enum class Segmentation { Terciles, Quartiles, Custom };

struct SegmentStat {
    double f_lo = 0.0, f_hi = 0.0;  // segment bounds in F-hat
    std::size_t n = 0;
    double f_stat = 0.0;            // homoskedastic joint F for the z terms
    std::optional<double> wald_cluster;  // cluster-robust Wald/q, when computable
    int df1 = 0;                    // instrument-term count
    long df2 = 0;
    bool underpowered = false;      // n < 10 * df1
    bool degenerate_instruments = false;  // z terms constant within segment
};

struct SegmentStrength {
    Segmentation segmentation = Segmentation::Terciles;
    std::vector<SegmentStat> segments;
    std::size_t total_n = 0;
};

// Within each F-hat segment, a linear probability model of participation on
// [X | z terms]; reports the joint F statistic for the z terms. Segments
// partition the sample by construction.
SegmentStrength segment_f_stats(const Dataset& data, const std::vector<double>& f_hat,
                                const std::vector<Feature>& x_features,
                                const std::vector<Feature>& z_features,
                                Segmentation segmentation,
                                const std::vector<double>& custom_breaks = {},
                                bool cluster_robust = false);

// ---------------------------------------------------------------------------
// Generalized propensity score balance (continuous instrument)
// ---------------------------------------------------------------------------

struct GpsBalanceCell {
    std::string covariate;
    int z_interval = 0;    // percentile interval of Z (0-based)
    double t_raw = 0.0;    // interval vs rest, unadjusted
    double t_adjusted = 0.0;  // blocked on GPS quintiles
};

struct GpsBalanceReport {
    int significant_raw = 0;       // |t| > 1.96 counts
    int significant_adjusted = 0;
    int tests = 0;
    std::vector<GpsBalanceCell> cells;
    double z_model_sigma2 = 0.0;
};

// Models Z | X as normal with a polynomial mean index and constant variance,
// computes the implied density at the observed Z (the GPS), and t-tests each
// covariate mean across Z-percentile intervals before and after blocking on
// GPS quintiles.
GpsBalanceReport gps_balance(const Dataset& data, const std::string& z_col,
                             const std::vector<std::string>& x_cols, int poly_degree = 1,
                             int z_intervals = 3, int gps_blocks = 5);

// ---------------------------------------------------------------------------
// Falsification on an ineligible sample
// ---------------------------------------------------------------------------

struct FalsificationResult {
    EstimationResult eligible_fit;   // pipeline on the eligible sample
    SecondStageModel second_stage;   // hours equation on the ineligible sample
    MTECurve curve;                  // MTE on the ineligible sample
};

// First stage estimated on the eligible sample; propensity scores predicted
// from the ineligible sample's covariates; hours equation and MTE estimated
// on the ineligible sample. Under instrument validity the curve should be
// indistinguishable from zero.
FalsificationResult falsification_run(const Dataset& eligible, const Dataset& ineligible,
                                      const EstimatorSpec& spec);

// Joint state-level bootstrap of the falsification pipeline (both samples
// resampled on the shared cluster ids) giving bands for the ineligible curve.
BootstrapResult falsification_bootstrap(const Dataset& eligible, const Dataset& ineligible,
                                        const EstimatorSpec& spec, int replicates,
                                        std::uint64_t seed, int workers = 0);

}  // namespace mte
