#include "mte/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "mte/linalg.hpp"

namespace mte {

// ---------------------------------------------------------------------------
// segment_f_stats
// ---------------------------------------------------------------------------

namespace {

std::vector<double> segment_breaks(const std::vector<double>& f_hat, Segmentation seg,
                                   const std::vector<double>& custom) {
    switch (seg) {
        case Segmentation::Terciles:
            return {quantile(f_hat, 1.0 / 3.0), quantile(f_hat, 2.0 / 3.0)};
        case Segmentation::Quartiles:
            return {quantile(f_hat, 0.25), quantile(f_hat, 0.50), quantile(f_hat, 0.75)};
        case Segmentation::Custom: {
            if (custom.empty()) throw ConfigError("segment_f_stats: custom breaks are empty");
            std::vector<double> b = custom;
            std::sort(b.begin(), b.end());
            return b;
        }
    }
    return {};
}

}  // namespace

SegmentStrength segment_f_stats(const Dataset& data, const std::vector<double>& f_hat,
                                const std::vector<Feature>& x_features,
                                const std::vector<Feature>& z_features,
                                Segmentation segmentation, const std::vector<double>& custom_breaks,
                                bool cluster_robust) {
    if (f_hat.size() != data.n()) throw SchemaError("segment_f_stats: F-hat length mismatch");
    if (z_features.empty()) throw ConfigError("segment_f_stats: no instrument terms");

    const std::vector<double> breaks = segment_breaks(f_hat, segmentation, custom_breaks);
    SegmentStrength out;
    out.segmentation = segmentation;
    out.total_n = data.n();

    const int q = static_cast<int>(z_features.size());
    const std::size_t segments = breaks.size() + 1;
    for (std::size_t s = 0; s < segments; ++s) {
        const double lo = s == 0 ? -std::numeric_limits<double>::infinity() : breaks[s - 1];
        const double hi = s == breaks.size() ? std::numeric_limits<double>::infinity() : breaks[s];
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < f_hat.size(); ++i) {
            // half-open [lo, hi) with the last segment closed above
            if ((f_hat[i] >= lo || s == 0) && (f_hat[i] < hi || s == breaks.size())) rows.push_back(i);
        }
        SegmentStat stat;
        stat.f_lo = lo;
        stat.f_hi = hi;
        stat.n = rows.size();
        stat.df1 = q;
        stat.underpowered = rows.size() < static_cast<std::size_t>(10 * q);

        const Dataset seg_data = data.take(rows);
        const auto& part = seg_data.col("participates");
        Eigen::VectorXd y(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = part[i];

        // Restricted design: X only, pruned to the segment sample.
        std::vector<Feature> x_kept = prune_features(seg_data, x_features, nullptr);
        const Eigen::MatrixXd xr = build_design(seg_data, x_kept);
        if (xr.rows() <= xr.cols() + q) {
            stat.degenerate_instruments = true;
            out.segments.push_back(stat);
            continue;
        }
        const LeastSquares restricted = lstsq(xr, y, nullptr, true);

        Eigen::MatrixXd xu(xr.rows(), xr.cols() + q);
        xu.leftCols(xr.cols()) = xr;
        const Eigen::MatrixXd zdes = build_design(seg_data, z_features);
        xu.rightCols(q) = zdes;
        const LeastSquares unrestricted = lstsq(xu, y, nullptr, true);

        // Instrument terms that X absorbs entirely (constants within the
        // segment) contribute nothing; flag when the whole block is inert.
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xu);
        qr.setThreshold(1e-10);
        const long p_u = static_cast<long>(qr.rank());
        stat.degenerate_instruments = restricted.rss - unrestricted.rss <= 1e-12 * (restricted.rss + 1.0);
        stat.df2 = static_cast<long>(rows.size()) - p_u;
        if (stat.df2 > 0 && !stat.degenerate_instruments) {
            const double num = std::max(0.0, restricted.rss - unrestricted.rss) / q;
            const double den = unrestricted.rss / static_cast<double>(stat.df2);
            stat.f_stat = den > 0.0 ? num / den : 0.0;
        }

        if (cluster_robust && !stat.degenerate_instruments) {
            // Cluster-robust Wald on the z-term coefficients / q.
            const Eigen::MatrixXd xtx_inv =
                (xu.transpose() * xu).ldlt().solve(Eigen::MatrixXd::Identity(xu.cols(), xu.cols()));
            const std::vector<int> ids = seg_data.cluster_ids();
            std::map<int, Eigen::VectorXd> score;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const Eigen::VectorXd xi = xu.row(static_cast<Eigen::Index>(i)).transpose() *
                                           unrestricted.residuals[static_cast<Eigen::Index>(i)];
                auto [it, inserted] = score.try_emplace(ids[i], Eigen::VectorXd::Zero(xu.cols()));
                it->second += xi;
            }
            if (score.size() > 1) {
                Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(xu.cols(), xu.cols());
                for (const auto& [id, s] : score) meat += s * s.transpose();
                const Eigen::MatrixXd vcov = xtx_inv * meat * xtx_inv;
                const Eigen::MatrixXd vz = vcov.bottomRightCorner(q, q);
                const Eigen::VectorXd bz = unrestricted.coef.tail(q);
                Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(vz);
                if (eig.eigenvalues().minCoeff() > 1e-14) {
                    stat.wald_cluster = bz.dot(vz.ldlt().solve(bz)) / q;
                }
            }
        }
        out.segments.push_back(stat);
    }

    std::size_t total = 0;
    for (const auto& s : out.segments) total += s.n;
    if (total != data.n()) throw Error("segment_f_stats: segments do not partition the sample");
    return out;
}

// ---------------------------------------------------------------------------
// gps_balance
// ---------------------------------------------------------------------------

namespace {

// Stratified two-sample t statistic: block-size-weighted mean difference
// between group and complement, skipping blocks lacking either side.
double blocked_t(const std::vector<double>& x, const std::vector<bool>& in_group,
                 const std::vector<int>& block) {
    std::map<int, std::array<double, 6>> acc;  // n1, sum1, ss1, n0, sum0, ss0
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto& a = acc[block[i]];
        if (in_group[i]) {
            a[0] += 1.0; a[1] += x[i]; a[2] += x[i] * x[i];
        } else {
            a[3] += 1.0; a[4] += x[i]; a[5] += x[i] * x[i];
        }
    }
    double weight_total = 0.0, diff = 0.0, var = 0.0;
    for (const auto& [id, a] : acc) {
        if (a[0] < 2 || a[3] < 2) continue;
        const double m1 = a[1] / a[0], m0 = a[4] / a[3];
        const double v1 = std::max(0.0, (a[2] - a[0] * m1 * m1) / (a[0] - 1.0));
        const double v0 = std::max(0.0, (a[5] - a[3] * m0 * m0) / (a[3] - 1.0));
        const double w = a[0] + a[3];
        weight_total += w;
        diff += w * (m1 - m0);
        var += w * w * (v1 / a[0] + v0 / a[3]);
    }
    if (weight_total <= 0.0 || var <= 0.0) return 0.0;
    return (diff / weight_total) / (std::sqrt(var) / weight_total);
}

double welch_t(const std::vector<double>& x, const std::vector<bool>& in_group) {
    double n1 = 0, s1 = 0, ss1 = 0, n0 = 0, s0 = 0, ss0 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (in_group[i]) { n1 += 1; s1 += x[i]; ss1 += x[i] * x[i]; }
        else { n0 += 1; s0 += x[i]; ss0 += x[i] * x[i]; }
    }
    if (n1 < 2 || n0 < 2) return 0.0;
    const double m1 = s1 / n1, m0 = s0 / n0;
    const double v1 = std::max(0.0, (ss1 - n1 * m1 * m1) / (n1 - 1.0));
    const double v0 = std::max(0.0, (ss0 - n0 * m0 * m0) / (n0 - 1.0));
    const double se = std::sqrt(v1 / n1 + v0 / n0);
    return se > 0.0 ? (m1 - m0) / se : 0.0;
}

}  // namespace

GpsBalanceReport gps_balance(const Dataset& data, const std::string& z_col,
                             const std::vector<std::string>& x_cols, int poly_degree,
                             int z_intervals, int gps_blocks) {
    if (poly_degree < 1 || poly_degree > 3) throw ConfigError("gps_balance: poly_degree must be 1..3");
    if (z_intervals < 2 || gps_blocks < 2) throw ConfigError("gps_balance: need >= 2 intervals/blocks");
    const auto& z = data.col(z_col);
    const std::size_t n = data.n();

    // Z | X model: polynomial mean index, constant variance.
    std::size_t p = 1 + x_cols.size() * static_cast<std::size_t>(poly_degree);
    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    std::size_t c = 1;
    for (const auto& col : x_cols) {
        const auto& x = data.col(col);
        for (int d = 1; d <= poly_degree; ++d, ++c) {
            for (std::size_t i = 0; i < n; ++i) design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = std::pow(x[i], d);
        }
    }
    Eigen::VectorXd zy(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) zy[static_cast<Eigen::Index>(i)] = z[i];
    const LeastSquares zfit = lstsq(design, zy, nullptr, true);
    const double sigma2 = zfit.rss / std::max<double>(1.0, static_cast<double>(n) - static_cast<double>(zfit.rank));
    std::vector<double> zvec(zy.data(), zy.data() + zy.size());
    if (!(sigma2 > 1e-12 * (sample_variance(zvec) + 1e-12)))
        throw FitError("gps_balance: degenerate GPS (zero residual variance in the Z model)");

    std::vector<double> gps(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double resid = zfit.residuals[static_cast<Eigen::Index>(i)];
        gps[i] = std::exp(-0.5 * resid * resid / sigma2) / std::sqrt(2.0 * M_PI * sigma2);
    }

    // Percentile intervals of Z. Blocking follows Hirano-Imbens: for each
    // interval, the score is re-evaluated at the interval's median Z, which
    // makes the blocks a function of the covariate index alone (blocking on
    // the density at the observed Z would leak the fitted Z-model noise into
    // the blocks and break the null calibration of the t statistics).
    auto bucket_of = [](const std::vector<double>& v, int buckets, double value) {
        for (int b = 1; b < buckets; ++b) {
            if (value < quantile(v, static_cast<double>(b) / buckets)) return b - 1;
        }
        return buckets - 1;
    };
    std::vector<int> z_bucket(n);
    for (std::size_t i = 0; i < n; ++i) z_bucket[i] = bucket_of(z, z_intervals, z[i]);

    GpsBalanceReport report;
    report.z_model_sigma2 = sigma2;
    std::vector<std::vector<int>> block_of_interval(static_cast<std::size_t>(z_intervals));
    for (int k = 0; k < z_intervals; ++k) {
        std::vector<double> z_in;
        for (std::size_t i = 0; i < n; ++i) {
            if (z_bucket[i] == k) z_in.push_back(z[i]);
        }
        const double z_star = quantile(z_in, 0.5);
        std::vector<double> score(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double dev = z_star - zfit.fitted[static_cast<Eigen::Index>(i)];
            score[i] = std::exp(-0.5 * dev * dev / sigma2) / std::sqrt(2.0 * M_PI * sigma2);
        }
        auto& blocks = block_of_interval[static_cast<std::size_t>(k)];
        blocks.resize(n);
        for (std::size_t i = 0; i < n; ++i) blocks[i] = bucket_of(score, gps_blocks, score[i]);
    }
    for (const auto& col : x_cols) {
        const auto& x = data.col(col);
        for (int k = 0; k < z_intervals; ++k) {
            std::vector<bool> in_group(n);
            for (std::size_t i = 0; i < n; ++i) in_group[i] = z_bucket[i] == k;
            GpsBalanceCell cell;
            cell.covariate = col;
            cell.z_interval = k;
            cell.t_raw = welch_t(x, in_group);
            cell.t_adjusted = blocked_t(x, in_group, block_of_interval[static_cast<std::size_t>(k)]);
            report.significant_raw += std::abs(cell.t_raw) > 1.96;
            report.significant_adjusted += std::abs(cell.t_adjusted) > 1.96;
            ++report.tests;
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// falsification
// ---------------------------------------------------------------------------

namespace {

void check_schema_match(const Dataset& eligible, const Dataset& ineligible) {
    if (ineligible.n() == 0) throw SchemaError("falsification: ineligible sample is empty");
    std::string missing;
    for (const auto& name : eligible.names()) {
        if (name.rfind("oracle_", 0) == 0) continue;
        if (!ineligible.has(name)) {
            if (!missing.empty()) missing += ", ";
            missing += name;
        }
    }
    if (!missing.empty())
        throw SchemaError("falsification: ineligible sample is missing columns: " + missing);
}

}  // namespace

FalsificationResult falsification_run(const Dataset& eligible, const Dataset& ineligible,
                                      const EstimatorSpec& spec) {
    check_schema_match(eligible, ineligible);
    FalsificationResult out;
    out.eligible_fit = run_first_stage(eligible, spec);

    Dataset scored = prepare_for_prediction(ineligible, out.eligible_fit);
    const std::vector<double> f_hat = probit_predict(out.eligible_fit.first_stage, scored);

    std::vector<std::string> dropped;
    const std::vector<Feature> x_beta = prune_features(scored, default_x_beta(), &dropped);
    std::vector<Feature> x_lambda;
    for (const auto& f : default_x_lambda(spec)) {
        const std::vector<double> col = evaluate_feature(scored, f);
        if (!std::all_of(col.begin(), col.end(), [&](double v) { return v == col.front(); })) {
            x_lambda.push_back(f);
        }
    }
    const SplineBasis basis = SplineBasis::equally_spaced(spec.knots, spec.window_lo, spec.window_hi);
    out.second_stage = second_stage_fit(scored, f_hat, x_beta, x_lambda, basis,
                                        spec.window_lo, spec.window_hi);
    out.curve = mte_curve(out.second_stage, spec.grid_points);
    return out;
}

BootstrapResult falsification_bootstrap(const Dataset& eligible, const Dataset& ineligible,
                                        const EstimatorSpec& spec, int replicates,
                                        std::uint64_t seed, int workers) {
    check_schema_match(eligible, ineligible);
    const FalsificationResult point = falsification_run(eligible, ineligible, spec);

    BootstrapResult result;
    result.replicates_requested = replicates;
    result.f_grid = point.curve.f;

    struct Slot {
        bool ok = false;
        std::vector<double> curve;
        SecondStageModel model;
        std::string failure;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
        auto engine = make_engine(seed, 211, b);
        Slot& slot = slots[b];
        try {
            const Dataset e = resample_clusters(eligible, engine);
            const Dataset i = resample_clusters(ineligible, engine);
            FalsificationResult rep = falsification_run(e, i, spec);
            slot.curve = rep.curve.mte;
            slot.model = std::move(rep.second_stage);
            slot.ok = true;
        } catch (const std::exception& e) {
            slot.failure = "replicate " + std::to_string(b) + ": " + e.what();
        }
    }, workers);

    for (auto& slot : slots) {
        if (slot.ok) {
            result.curves.push_back(std::move(slot.curve));
            result.models.push_back(std::move(slot.model));
        } else {
            result.failures.push_back(slot.failure);
        }
    }
    if (result.failures.size() * 5 > static_cast<std::size_t>(replicates))
        throw FitError("falsification_bootstrap: more than 20% of replicates failed");

    const std::size_t grid = result.f_grid.size();
    result.lo95.resize(grid);
    result.hi95.resize(grid);
    std::vector<double> column(result.curves.size());
    for (std::size_t k = 0; k < grid; ++k) {
        for (std::size_t b = 0; b < result.curves.size(); ++b) column[b] = result.curves[b][k];
        result.lo95[k] = quantile(column, 0.025);
        result.hi95[k] = quantile(column, 0.975);
        if (point.curve.mte[k] < result.lo95[k] || point.curve.mte[k] > result.hi95[k]) {
            ++result.point_outside_band;
        }
    }
    return result;
}

}  // namespace mte
