#include "mte/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mte/linalg.hpp"

namespace mte {

namespace {
constexpr std::uint64_t kBootstrapStream = 101;
}

Dataset resample_clusters(const Dataset& data, std::mt19937_64& engine) {
    const std::vector<int> ids = data.cluster_ids();
    const std::vector<int> distinct = data.distinct_clusters();
    std::map<int, std::vector<std::size_t>> rows_of;
    for (std::size_t i = 0; i < ids.size(); ++i) rows_of[ids[i]].push_back(i);

    std::uniform_int_distribution<std::size_t> pick(0, distinct.size() - 1);
    std::vector<std::size_t> rows;
    rows.reserve(data.n());
    std::vector<double> new_ids;
    new_ids.reserve(data.n());
    for (std::size_t b = 0; b < distinct.size(); ++b) {
        const int chosen = distinct[pick(engine)];
        for (std::size_t r : rows_of[chosen]) {
            rows.push_back(r);
            new_ids.push_back(static_cast<double>(b));
        }
    }
    Dataset out = data.take(rows);
    out.set("cluster_id", std::move(new_ids));
    return out;
}

BootstrapResult block_bootstrap(const Dataset& data, const EstimatorSpec& spec, int replicates,
                                std::uint64_t seed, const MTECurve& point_curve, int workers) {
    if (replicates < 1) throw ConfigError("bootstrap: replicates must be >= 1");
    BootstrapResult result;
    result.replicates_requested = replicates;
    result.f_grid = point_curve.f;

    struct Slot {
        bool ok = false;
        std::vector<double> curve;
        SecondStageModel model;
        std::string failure;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(replicates));

    parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
        auto engine = make_engine(seed, kBootstrapStream, b);
        Slot& slot = slots[b];
        try {
            const Dataset resampled = resample_clusters(data, engine);
            EstimationResult est = run_estimation(resampled, spec);
            slot.curve.resize(result.f_grid.size());
            for (std::size_t k = 0; k < result.f_grid.size(); ++k) {
                slot.curve[k] = mte_eval(est.second_stage, result.f_grid[k]);
            }
            slot.model = std::move(est.second_stage);
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
    if (result.failures.size() * 5 > static_cast<std::size_t>(replicates)) {
        std::string diag = "bootstrap: " + std::to_string(result.failures.size()) + "/" +
                           std::to_string(replicates) + " replicates failed";
        for (std::size_t k = 0; k < std::min<std::size_t>(3, result.failures.size()); ++k) {
            diag += "; " + result.failures[k];
        }
        throw FitError(diag);
    }

    const std::size_t grid = result.f_grid.size();
    result.lo95.resize(grid);
    result.hi95.resize(grid);
    std::vector<double> column(result.curves.size());
    for (std::size_t k = 0; k < grid; ++k) {
        for (std::size_t b = 0; b < result.curves.size(); ++b) column[b] = result.curves[b][k];
        result.lo95[k] = quantile(column, 0.025);
        result.hi95[k] = quantile(column, 0.975);
        if (k < point_curve.mte.size() &&
            (point_curve.mte[k] < result.lo95[k] || point_curve.mte[k] > result.hi95[k])) {
            ++result.point_outside_band;
        }
    }
    return result;
}

ScalarBootstrap bootstrap_scalar(const Dataset& data, int replicates, std::uint64_t seed,
                                 const std::function<double(const Dataset&)>& statistic,
                                 int workers) {
    if (replicates < 1) throw ConfigError("bootstrap: replicates must be >= 1");
    struct Slot {
        bool ok = false;
        double value = 0.0;
        std::string failure;
    };
    std::vector<Slot> slots(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), [&](std::size_t b) {
        auto engine = make_engine(seed, kBootstrapStream, b);
        try {
            slots[b].value = statistic(resample_clusters(data, engine));
            slots[b].ok = true;
        } catch (const std::exception& e) {
            slots[b].failure = "replicate " + std::to_string(b) + ": " + e.what();
        }
    }, workers);

    ScalarBootstrap out;
    for (const auto& slot : slots) {
        if (slot.ok) {
            out.replicates.push_back(slot.value);
        } else {
            out.failures.push_back(slot.failure);
        }
    }
    if (out.failures.size() * 5 > static_cast<std::size_t>(replicates))
        throw FitError("bootstrap_scalar: more than 20% of replicates failed");
    out.estimate = statistic(data);
    out.std_error = std::sqrt(sample_variance(out.replicates));
    return out;
}

HomogeneityTest homogeneity_test(const SecondStageModel& fit, const BootstrapResult& boot) {
    const int j_count = static_cast<int>(fit.g_coeffs.size());
    const int df = j_count - 1;  // g2..gJ
    if (df < 1 || df > 10) throw ConfigError("homogeneity_test: unsupported knot count");
    if (boot.models.size() < 10) throw FitError("homogeneity_test: too few converged replicates");

    Eigen::MatrixXd reps(static_cast<Eigen::Index>(boot.models.size()), df);
    for (std::size_t b = 0; b < boot.models.size(); ++b) {
        const auto& g = boot.models[b].g_coeffs;
        if (static_cast<int>(g.size()) != j_count)
            throw FitError("homogeneity_test: replicate knot count mismatch");
        for (int j = 0; j < df; ++j) reps(static_cast<Eigen::Index>(b), j) = g[static_cast<std::size_t>(j + 1)];
    }
    const Eigen::RowVectorXd mean = reps.colwise().mean();
    const Eigen::MatrixXd centered = reps.rowwise() - mean;
    Eigen::MatrixXd cov = centered.transpose() * centered /
                          static_cast<double>(boot.models.size() - 1);

    Eigen::VectorXd point(df);
    for (int j = 0; j < df; ++j) point[j] = fit.g_coeffs[static_cast<std::size_t>(j + 1)];

    // Pseudo-inverse via clipped eigendecomposition keeps near-singular
    // bootstrap covariances from blowing the statistic up.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const double floor = std::max(eig.eigenvalues().maxCoeff(), 0.0) * 1e-10 +
                         std::numeric_limits<double>::min();
    Eigen::VectorXd inv_ev(df);
    for (int j = 0; j < df; ++j) {
        inv_ev[j] = eig.eigenvalues()[j] > floor ? 1.0 / eig.eigenvalues()[j] : 0.0;
    }
    const Eigen::MatrixXd cov_inv =
        eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();

    HomogeneityTest test;
    test.df = df;
    test.wald = point.dot(cov_inv * point);
    test.critical_95 = chi2_crit_95(df);
    test.reject = test.wald > test.critical_95;
    return test;
}

}  // namespace mte
