#include <doctest.h>

#include <cmath>
#include <random>

#include "mte/common.hpp"
#include "mte/probit.hpp"
#include "testutil.hpp"

using namespace mte;

TEST_CASE("normal helpers: tail stability and known constants") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5));
    CHECK(norm_cdf(1.96) == doctest::Approx(0.9750021).epsilon(1e-6));
    CHECK(inv_mills(0.0) == doctest::Approx(0.7978845608).epsilon(1e-8));
    CHECK(log_norm_cdf(-40.0) == doctest::Approx(-0.5 * 1600.0 - std::log(40.0) -
                                                 0.5 * std::log(2.0 * M_PI)).epsilon(1e-3));
    CHECK(std::isfinite(inv_mills(-300.0)));
}

TEST_CASE("constant instrument column raises a rank error naming it") {
    Dataset d = testutil::blank_dataset(200);
    std::vector<double> y(200, 0.0);
    for (std::size_t i = 0; i < 80; ++i) y[i] = 1.0;
    d.set("participates", std::move(y));
    try {
        probit_fit(d, {Feature::intercept()}, {Feature::raw("z1")});
        FAIL("expected RankError");
    } catch (const RankError& e) {
        CHECK(std::string(e.what()).find("z1") != std::string::npos);
    }
}

TEST_CASE("intercept-only MLE equals Phi^{-1}(share)") {
    const std::size_t n = 10000;
    Dataset d = testutil::blank_dataset(n);
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < 3700; ++i) y[i] = 1.0;
    d.set("participates", std::move(y));
    const FirstStageModel model = probit_fit(d, {Feature::intercept()}, {});
    CHECK(std::abs((model.eta[0]) - (-0.3319)) < 2e-4);
    CHECK(model.iterations < 20);
}

TEST_CASE("simulated probit recovers the truth within 3 asymptotic standard errors") {
    std::mt19937_64 eng(101);
    const std::size_t n = 100000;
    Dataset d = testutil::blank_dataset(n);
    const std::vector<double> x1 = testutil::draw_normal(n, eng);
    const std::vector<double> x2 = testutil::draw_bernoulli(n, eng, 0.4);
    const std::vector<double> z = testutil::draw_normal(n, eng, 1.0, 0.7);
    // truth: eta = (0.3, 0.5, -0.4), delta = 0.8 on log z... z used raw here
    std::vector<double> y(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double idx = 0.3 + 0.5 * x1[i] - 0.4 * x2[i] + 0.8 * z[i] - 0.8;
        y[i] = u(eng) < norm_cdf(idx) ? 1.0 : 0.0;
    }
    d.set("age", x1);  // reuse schema slots as generic regressors
    d.set("black", x2);
    d.set("unemp_rate", z);
    d.set("participates", std::move(y));

    const std::vector<Feature> xf = {Feature::intercept(), Feature::raw("age"), Feature::raw("black")};
    const std::vector<Feature> zf = {Feature::raw("unemp_rate")};
    const FirstStageModel model = probit_fit(d, xf, zf);

    // asymptotic covariance from the analytic Hessian at the estimate
    Eigen::MatrixXd design = build_design(d, {xf[0], xf[1], xf[2], zf[0]});
    Eigen::VectorXd beta = model.coefficients();
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(4, 4);
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        const double xb = design.row(i).dot(beta);
        const double lam1 = inv_mills(xb), lam0 = inv_mills(-xb);
        const double w = norm_cdf(xb) * lam1 * (lam1 + xb) + norm_cdf(-xb) * lam0 * (lam0 - xb);
        info += w * design.row(i).transpose() * design.row(i);
    }
    const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(4, 4));
    const Eigen::Vector4d truth(0.3 - 0.8, 0.5, -0.4, 0.8);
    for (int k = 0; k < 4; ++k) {
        CHECK(std::abs(beta[k] - truth[k]) < 3.0 * std::sqrt(cov(k, k)));
    }

    SUBCASE("prediction clamps and matches the normal CDF") {
        const std::vector<double> f = probit_predict(model, d);
        for (double v : f) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            CHECK(v >= 1e-6);
            CHECK(v <= 1.0 - 1e-6);
        }
    }
}

TEST_CASE("probit score vanishes at the MLE and the Hessian is negative definite") {
    std::mt19937_64 eng(103);
    const std::size_t n = 5000;
    Dataset d = testutil::blank_dataset(n);
    const std::vector<double> x = testutil::draw_normal(n, eng);
    std::vector<double> y(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = u(eng) < norm_cdf(0.2 + 0.6 * x[i]) ? 1.0 : 0.0;
    d.set("age", x);
    d.set("participates", std::move(y));
    const FirstStageModel model = probit_fit(d, {Feature::intercept(), Feature::raw("age")}, {});

    // numeric gradient of the log likelihood at the estimate
    auto loglik = [&](const Eigen::Vector2d& b) {
        double ll = 0.0;
        const auto& part = d.col("participates");
        const auto& age = d.col("age");
        for (std::size_t i = 0; i < n; ++i) {
            const double xb = b[0] + b[1] * age[i];
            ll += part[i] > 0.5 ? log_norm_cdf(xb) : log_norm_cdf(-xb);
        }
        return ll;
    };
    const Eigen::Vector2d at(model.eta[0], model.eta[1]);
    for (int k = 0; k < 2; ++k) {
        Eigen::Vector2d hi = at, lo = at;
        hi[k] += 1e-6;
        lo[k] -= 1e-6;
        CHECK(std::abs((loglik(hi) - loglik(lo)) / 2e-6) < 1e-2);  // scaled by n this is ~1e-6/obs
    }
    // concavity along random directions
    std::normal_distribution<double> dir(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::Vector2d v(dir(eng), dir(eng));
        v.normalize();
        const double f0 = loglik(at);
        const double fp = loglik(at + 1e-3 * v);
        const double fm = loglik(at - 1e-3 * v);
        CHECK(fp + fm - 2.0 * f0 < 0.0);
    }
}

TEST_CASE("perfect separation is reported as divergence") {
    const std::size_t n = 400;
    Dataset d = testutil::blank_dataset(n);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = i < n / 2 ? -1.0 - 0.001 * i : 1.0 + 0.001 * i;
        y[i] = i < n / 2 ? 0.0 : 1.0;
    }
    d.set("age", std::move(x));
    d.set("participates", std::move(y));
    CHECK_THROWS_AS(probit_fit(d, {Feature::intercept(), Feature::raw("age")}, {}), FitError);
}

TEST_CASE("missing model columns raise schema errors on prediction") {
    Dataset d = testutil::blank_dataset(100);
    std::vector<double> y(100, 0.0);
    for (std::size_t i = 0; i < 40; ++i) y[i] = 1.0;
    d.set("participates", std::move(y));
    std::mt19937_64 eng(9);
    d.set("age", testutil::draw_normal(100, eng, 35.0, 5.0));
    const FirstStageModel model = probit_fit(d, {Feature::intercept(), Feature::raw("age")}, {});
    Dataset other = d;
    // probit_predict rebuilds features; a dataset without the column fails
    Dataset incomplete;
    incomplete.set("hours", std::vector<double>(10, 1.0));
    CHECK_THROWS_AS(probit_predict(model, incomplete), SchemaError);
}
