#include <doctest.h>

#include <cmath>
#include <random>

#include "mte/bootstrap.hpp"
#include "mte/instrument.hpp"
#include "mte/linalg.hpp"
#include "mte/pipeline.hpp"
#include "mte/second_stage.hpp"
#include "mte/wage.hpp"
#include "testutil.hpp"
#include "worlds.hpp"

using namespace mte;

// ---------------------------------------------------------------------------
// instrument index
// ---------------------------------------------------------------------------

TEST_CASE("instrument index: single column is its log") {
    Dataset d = testutil::blank_dataset(50);
    std::vector<double> z(50);
    for (std::size_t i = 0; i < 50; ++i) z[i] = 1.0 + i;
    d.set("z1", z);
    const InstrumentIndex idx = instrument_index(d, {"z1"}, IndexWeighting::InverseVariance, false);
    for (std::size_t i = 0; i < 50; ++i) CHECK(idx.values[i] == doctest::Approx(std::log(z[i])));
    CHECK(idx.weights[0] == 1.0);
}

TEST_CASE("instrument index: inverse-variance weights 0.8/0.2 for variances 1 and 4") {
    std::mt19937_64 eng(41);
    const std::size_t n = 60000;
    Dataset d = testutil::blank_dataset(n);
    // log z1 ~ N(0,1), log z2 ~ N(0,4): weights ~ (1/1)/(1/1+1/4) = 0.8 and 0.2
    std::vector<double> z1(n), z2(n);
    const auto l1 = testutil::draw_normal(n, eng, 0.0, 1.0);
    const auto l2 = testutil::draw_normal(n, eng, 0.0, 2.0);
    for (std::size_t i = 0; i < n; ++i) {
        z1[i] = std::exp(l1[i]);
        z2[i] = std::exp(l2[i]);
    }
    d.set("z1", z1);
    d.set("z2", z2);
    const InstrumentIndex idx = instrument_index(d, {"z1", "z2"}, IndexWeighting::InverseVariance, false);
    CHECK(idx.weights[0] == doctest::Approx(0.8).epsilon(0.02));
    CHECK(idx.weights[1] == doctest::Approx(0.2).epsilon(0.05));

    const InstrumentIndex simple = instrument_index(d, {"z1", "z2"}, IndexWeighting::Simple, false);
    CHECK(simple.weights[0] == 0.5);
    // equal variances -> inverse variance collapses to the simple average
    Dataset e = testutil::blank_dataset(n);
    std::vector<double> za(n), zb(n);
    const auto la = testutil::draw_normal(n, eng, 0.0, 1.0);
    const auto lb = testutil::draw_normal(n, eng, 0.5, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        za[i] = std::exp(la[i]);
        zb[i] = std::exp(lb[i]);
    }
    e.set("z1", za);
    e.set("z2", zb);
    const InstrumentIndex equal = instrument_index(e, {"z1", "z2"}, IndexWeighting::InverseVariance, false);
    CHECK(equal.weights[0] == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("instrument index: nonpositive entries name the column") {
    Dataset d = testutil::blank_dataset(10);
    std::vector<double> z = d.col("z1");
    z[3] = 0.0;
    d.set("z1", z);
    try {
        instrument_index(d, {"z1"}, IndexWeighting::Simple, false);
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("z1") != std::string::npos);
        CHECK(std::string(e.what()).find("row 4") != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// wage equation
// ---------------------------------------------------------------------------

namespace {

// Wage DGP with tunable selection: log w = 1.8 + 0.02 age + eps; employment
// depends on the excluded kids_under6 covariate and, when selection != 0, on
// the wage noise itself.
Dataset wage_sim(std::size_t n, double selection, std::mt19937_64& eng) {
    Dataset d = testutil::blank_dataset(n);
    std::vector<double> age = testutil::draw_normal(n, eng, 35.0, 8.0);
    // continuous excluded employment shifter: rich Mills variation
    std::vector<double> kids = testutil::draw_normal(n, eng, 1.0, 0.8);
    std::vector<double> lw(n), hours(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double eps = 0.5 * testutil::draw_normal(1, eng)[0];
        const double wage = 1.8 + 0.02 * (age[i] - 35.0) + eps;
        const double emp_index = 1.2 - 1.5 * kids[i] + 0.02 * (age[i] - 35.0) +
                                 selection * eps + 0.5 * testutil::draw_normal(1, eng)[0];
        const bool works = emp_index > 0.0;
        hours[i] = works ? 30.0 : 0.0;
        lw[i] = works ? wage : std::numeric_limits<double>::quiet_NaN();
    }
    d.set("age", std::move(age));
    d.set("kids_under6", std::move(kids));
    d.set("hours", std::move(hours));
    d.set("log_wage", std::move(lw));
    return d;
}

const std::vector<Feature> kWageX = {Feature::intercept(), Feature::raw("age")};
const std::vector<Feature> kSelX = {Feature::intercept(), Feature::raw("age"),
                                    Feature::raw("kids_under6")};

}  // namespace

TEST_CASE("wage fit: OLS and selection-adjusted agree when there is no selection") {
    std::mt19937_64 eng(43);
    const Dataset d = wage_sim(8000, 0.0, eng);
    const WageModel ols = wage_fit(d, WageMode::Ols, kWageX, kSelX);
    const WageModel adj = wage_fit(d, WageMode::SelectionAdjusted, kWageX, kSelX);
    const double se_scale = std::sqrt(ols.sigma2 / 8000.0);
    CHECK(std::abs(ols.gamma[1] - adj.gamma[1]) < 10.0 * se_scale);
    CHECK(std::abs(ols.gamma[1] - 0.02) < 3.0 * se_scale * 10.0);
}

TEST_CASE("wage fit: strong selection biases OLS; the adjusted fit recovers the truth") {
    std::mt19937_64 eng(47);
    // positive selection on the wage noise: OLS intercept biased upward.
    // In the [1, age] parameterization the true intercept is 1.8 - 0.02*35.
    const double true_b0 = 1.8 - 0.02 * 35.0;
    const Dataset d = wage_sim(20000, 2.0, eng);
    const WageModel ols = wage_fit(d, WageMode::Ols, kWageX, kSelX);
    const WageModel adj = wage_fit(d, WageMode::SelectionAdjusted, kWageX, kSelX);
    CHECK_FALSE(adj.selection_fallback);
    // theoretical Mills loading: cov(eps, 2eps+0.5eta)/sd = 0.5/1.118
    CHECK(adj.mills_coefficient == doctest::Approx(0.447).epsilon(0.15));
    CHECK(ols.gamma[0] > adj.gamma[0] + 0.02);     // OLS intercept biased in the built direction
    CHECK(std::abs(adj.gamma[0] - true_b0) < 0.05);
    CHECK(std::abs(ols.gamma[0] - true_b0) > 0.15);
    CHECK(std::abs(adj.gamma[1] - 0.02) < std::abs(ols.gamma[1] - 0.02));
}

TEST_CASE("wage fit: needs 30 workers") {
    std::mt19937_64 eng(53);
    Dataset d = testutil::blank_dataset(40);
    std::vector<double> lw(40, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < 20; ++i) lw[i] = 2.0;
    d.set("log_wage", std::move(lw));
    CHECK_THROWS_AS(wage_fit(d, WageMode::Ols, kWageX, kSelX), FitError);
}

TEST_CASE("imputation fills exactly the missing cells with X*gamma") {
    std::mt19937_64 eng(59);
    Dataset d = wage_sim(2000, 0.0, eng);
    const WageModel model = wage_fit(d, WageMode::Ols, kWageX, kSelX);
    const Dataset filled = impute_wages(d, model);
    const auto& before = d.col("log_wage");
    const auto& after = filled.col("log_wage");
    const auto& age = d.col("age");
    std::size_t imputed = 0;
    for (std::size_t i = 0; i < d.n(); ++i) {
        if (std::isnan(before[i])) {
            ++imputed;
            CHECK(after[i] == doctest::Approx(model.gamma[0] + model.gamma[1] * age[i]).epsilon(1e-12));
        } else {
            CHECK(after[i] == before[i]);
        }
    }
    CHECK(imputed > 0);
    // no missing wages -> dataset unchanged
    const Dataset again = impute_wages(filled, model);
    for (std::size_t i = 0; i < d.n(); ++i) CHECK(again.col("log_wage")[i] == after[i]);
}

// ---------------------------------------------------------------------------
// second stage
// ---------------------------------------------------------------------------

namespace {

// Hours DGP directly in reduced form: H = b0 + b1*x + [lam*xl_c + g(F)]*F + e.
struct ReducedForm {
    Dataset data;
    std::vector<double> f;
};

ReducedForm reduced_form_sim(std::size_t n, double lam, std::mt19937_64& eng,
                             double (*g_fn)(double), double noise_sd = 1.0) {
    Dataset d = testutil::blank_dataset(n, 30);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> f(n), hours(n);
    std::vector<double> x = testutil::draw_normal(n, eng, 0.0, 1.0);
    std::vector<double> xl = testutil::draw_normal(n, eng, 2.0, 1.5);
    double xl_mean = 0.0;
    for (double v : xl) xl_mean += v;
    xl_mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = u(eng);
        hours[i] = 30.0 + 2.0 * x[i] + (lam * (xl[i] - xl_mean) + g_fn(f[i])) * f[i] +
                   noise_sd * testutil::draw_normal(1, eng)[0];
    }
    d.set("age", std::move(x));
    d.set("nonlabor_income", std::move(xl));  // reuse as the lambda covariate
    d.set("hours", std::move(hours));
    return {std::move(d), std::move(f)};
}

const std::vector<Feature> kBetaX = {Feature::intercept(), Feature::raw("age")};
const std::vector<Feature> kLambdaX = {Feature::raw("nonlabor_income")};

}  // namespace

TEST_CASE("second stage recovers a constant g = -8 with zero lambda") {
    std::mt19937_64 eng(61);
    auto rf = reduced_form_sim(40000, 0.0, eng, [](double) { return -8.0; });
    const SplineBasis basis = SplineBasis::equally_spaced(5, 0.25, 0.66);
    const SecondStageModel fit =
        second_stage_fit(rf.data, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);
    CHECK(fit.beta[0] == doctest::Approx(30.0).epsilon(0.02));
    CHECK(fit.beta[1] == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::abs(fit.lambda[0]) < 0.1);
    for (double fv : {0.3, 0.45, 0.6}) {
        CHECK(std::abs((mte_eval(fit, fv)) - (-8.0)) < 0.6);
    }
}

TEST_CASE("second stage: linear g gives MTE = g1 + 2 g2 F") {
    std::mt19937_64 eng(67);
    auto rf = reduced_form_sim(60000, 0.0, eng, [](double f) { return -2.0 - 10.0 * f; });
    const SplineBasis basis = SplineBasis::equally_spaced(4, 0.25, 0.66);
    const SecondStageModel fit =
        second_stage_fit(rf.data, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);
    for (double fv : {0.3, 0.5, 0.65}) {
        CHECK(std::abs((mte_eval(fit, fv)) - (-2.0 - 20.0 * fv)) < 0.8);
    }
}

TEST_CASE("constant F-hat is a rank error naming the spline block") {
    Dataset d = testutil::blank_dataset(500);
    std::mt19937_64 eng(71);
    d.set("age", testutil::draw_normal(500, eng));
    const std::vector<double> f(500, 0.5);
    const SplineBasis basis = SplineBasis::equally_spaced(3, 0.25, 0.66);
    CHECK_THROWS_AS(second_stage_fit(d, f, kBetaX, {}, basis, 0.25, 0.66), RankError);
}

TEST_CASE("orthogonal F-hat noise sends lambda and g to zero") {
    std::mt19937_64 eng(73);
    const std::size_t n = 60000;
    Dataset d = testutil::blank_dataset(n, 30);
    std::vector<double> x = testutil::draw_normal(n, eng);
    std::vector<double> hours(n);
    for (std::size_t i = 0; i < n; ++i) {
        hours[i] = 10.0 + 3.0 * x[i] + 0.5 * testutil::draw_normal(1, eng)[0];
    }
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> f(n);
    for (double& v : f) v = u(eng);
    d.set("age", std::move(x));
    d.set("hours", std::move(hours));
    d.set("nonlabor_income", testutil::draw_normal(n, eng, 60.0, 15.0));
    const SplineBasis basis = SplineBasis::equally_spaced(4, 0.25, 0.66);
    const SecondStageModel fit = second_stage_fit(d, f, kBetaX, kLambdaX, basis, 0.25, 0.66);
    for (double fv : {0.3, 0.5, 0.6}) CHECK(std::abs(mte_eval(fit, fv)) < 0.5);
    CHECK(std::abs(fit.lambda[0]) < 0.05);
}

TEST_CASE("mte_eval refuses extrapolation outside the window") {
    std::mt19937_64 eng(79);
    auto rf = reduced_form_sim(2000, 0.0, eng, [](double) { return -5.0; });
    const SplineBasis basis = SplineBasis::equally_spaced(3, 0.25, 0.66);
    const SecondStageModel fit = second_stage_fit(rf.data, rf.f, kBetaX, {}, basis, 0.25, 0.66);
    CHECK_THROWS_AS(mte_eval(fit, 0.1), SupportError);
    CHECK_THROWS_AS(mte_eval(fit, 0.7), SupportError);
}

TEST_CASE("mte_eval equals the numeric derivative of the fitted conditional mean") {
    std::mt19937_64 eng(83);
    auto rf = reduced_form_sim(20000, 1.5, eng, [](double f) { return -4.0 - 8.0 * f * f; });
    const SplineBasis basis = SplineBasis::equally_spaced(5, 0.25, 0.66);
    const SecondStageModel fit =
        second_stage_fit(rf.data, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);
    for (double fv : {0.30, 0.45, 0.60}) {
        const double h = 1e-6;
        const double fd = (conditional_mean_at_f(fit, fv + h) - conditional_mean_at_f(fit, fv - h)) / (2.0 * h);
        CHECK(std::abs((mte_eval(fit, fv)) - (fd)) < 1e-6);
    }
}

TEST_CASE("centering: rescaling a lambda covariate leaves the mean curve unchanged") {
    std::mt19937_64 eng(89);
    auto rf = reduced_form_sim(20000, 2.0, eng, [](double f) { return -3.0 - 6.0 * f; });
    const SplineBasis basis = SplineBasis::equally_spaced(4, 0.25, 0.66);
    const SecondStageModel fit =
        second_stage_fit(rf.data, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);

    Dataset scaled = rf.data;
    std::vector<double> xl = scaled.col("nonlabor_income");
    for (double& v : xl) v *= 100.0;  // change of units
    scaled.set("nonlabor_income", std::move(xl));
    const SecondStageModel fit2 =
        second_stage_fit(scaled, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);
    for (double fv : {0.27, 0.4, 0.55, 0.65}) {
        CHECK(std::abs((mte_eval(fit, fv)) - (mte_eval(fit2, fv))) < 1e-10);
    }
}

TEST_CASE("exact-NLS equivalence: generic Levenberg-Marquardt from random starts reaches the same SSR") {
    std::mt19937_64 eng(97);
    auto rf = reduced_form_sim(4000, 1.0, eng, [](double f) { return -5.0 - 4.0 * f; });
    const SplineBasis basis = SplineBasis::equally_spaced(4, 0.25, 0.66);
    const SecondStageModel fit =
        second_stage_fit(rf.data, rf.f, kBetaX, kLambdaX, basis, 0.25, 0.66);

    // generic residual function: rebuilds the model prediction from raw
    // parameters, unaware that the problem is linear
    const std::size_t p = fit.parameter_count();
    const auto& hours = rf.data.col("hours");
    const auto& age = rf.data.col("age");
    const auto& xl = rf.data.col("nonlabor_income");
    const double xl_mean = fit.lambda_means[0];
    auto residuals = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& r) {
        std::vector<double> v, dv;
        for (std::size_t i = 0; i < rf.data.n(); ++i) {
            const double f = rf.f[i];
            basis.evaluate(f, v, dv);
            double g = 0.0;
            for (int j = 0; j < basis.size(); ++j) g += theta[3 + j] * v[static_cast<std::size_t>(j)];
            const double pred = theta[0] + theta[1] * age[i] +
                                (theta[2] * (xl[i] - xl_mean) + g) * f;
            r[static_cast<Eigen::Index>(i)] = hours[i] - pred;
        }
    };
    std::normal_distribution<double> start(0.0, 5.0);
    for (int rep = 0; rep < 3; ++rep) {
        Eigen::VectorXd theta(p);
        for (std::size_t k = 0; k < p; ++k) theta[static_cast<Eigen::Index>(k)] = start(eng);
        // Levenberg-Marquardt with numeric Jacobian
        Eigen::VectorXd r(rf.data.n());
        residuals(theta, r);
        double ssr = r.squaredNorm();
        double mu = 1e-3;
        for (int it = 0; it < 80; ++it) {
            Eigen::MatrixXd jac(rf.data.n(), p);
            Eigen::VectorXd r0(rf.data.n()), r1(rf.data.n());
            residuals(theta, r0);
            for (std::size_t k = 0; k < p; ++k) {
                Eigen::VectorXd th = theta;
                th[static_cast<Eigen::Index>(k)] += 1e-6;
                residuals(th, r1);
                jac.col(static_cast<Eigen::Index>(k)) = (r1 - r0) / 1e-6;
            }
            const Eigen::MatrixXd jtj = jac.transpose() * jac;
            const Eigen::VectorXd jtr = jac.transpose() * r0;
            const Eigen::VectorXd step =
                (jtj + mu * Eigen::MatrixXd::Identity(p, p)).ldlt().solve(-jtr);
            Eigen::VectorXd trial = theta + step;
            residuals(trial, r1);
            if (r1.squaredNorm() < ssr) {
                theta = trial;
                ssr = r1.squaredNorm();
                mu = std::max(mu * 0.3, 1e-12);
            } else {
                mu *= 10.0;
            }
            if (step.norm() < 1e-10) break;
        }
        CHECK(ssr == doctest::Approx(fit.rss).epsilon(1e-8));
    }
}

// ---------------------------------------------------------------------------
// homogeneous IV and outcome decomposition
// ---------------------------------------------------------------------------

TEST_CASE("homogeneous IV on a constant-effect reduced form") {
    std::mt19937_64 eng(101);
    auto rf = reduced_form_sim(30000, 0.0, eng, [](double) { return -8.0; });
    const HomogeneousIvFit fit = homogeneous_iv_fit(rf.data, rf.f, kBetaX);
    CHECK(std::abs(fit.effect + 8.0) < 3.0 * fit.std_error);
    CHECK(fit.std_error > 0.0);
}

TEST_CASE("outcome-class MTE curves sum to zero pointwise") {
    std::mt19937_64 eng(103);
    const std::size_t n = 20000;
    Dataset d = testutil::blank_dataset(n, 25);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> f(n), hours(n);
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = u(eng);
        const double roll = u(eng);
        hours[i] = roll < 0.3 + 0.4 * f[i] ? 0.0 : (roll < 0.7 ? 20.0 : 40.0);
    }
    d.set("hours", std::move(hours));
    std::mt19937_64 eng2(12);
    d.set("age", testutil::draw_normal(n, eng2));
    const SplineBasis basis = SplineBasis::equally_spaced(4, 0.25, 0.66);

    const MTECurve nonwork = mte_by_outcome(d, f, kBetaX, {}, basis, HoursOutcome::NonWork);
    const MTECurve part = mte_by_outcome(d, f, kBetaX, {}, basis, HoursOutcome::PartTime);
    const MTECurve full = mte_by_outcome(d, f, kBetaX, {}, basis, HoursOutcome::FullTime);
    for (std::size_t k = 0; k < nonwork.f.size(); ++k) {
        CHECK(std::abs(nonwork.mte[k] + part.mte[k] + full.mte[k]) < 1e-8);
    }
    CHECK_FALSE(nonwork.degenerate_outcome);
}

TEST_CASE("all-workers dataset: nonwork curve is identically zero and flagged") {
    std::mt19937_64 eng(107);
    auto rf = reduced_form_sim(4000, 0.0, eng, [](double) { return -3.0; });
    // every simulated hour draw in this reduced form is far above zero
    const SplineBasis basis = SplineBasis::equally_spaced(3, 0.25, 0.66);
    const MTECurve nonwork =
        mte_by_outcome(rf.data, rf.f, kBetaX, {}, basis, HoursOutcome::NonWork);
    CHECK(nonwork.degenerate_outcome);
    for (double v : nonwork.mte) CHECK(std::abs((v) - (0.0)) < 1e-9);
}

TEST_CASE("full pipeline on the u-world: negative full-time MTE, positive nonwork MTE") {
    PopulationSpec spec = worlds::u_world(109, 40, 1000);
    const Dataset data = simulate_population(spec);
    EstimatorSpec est;
    est.interactions.clear();
    const EstimationResult res = run_estimation(data, est);
    // participation moves people from H_off in [10,70] to H_on in [5,35]:
    // full-time (>=35) falls, nonwork stays flat at zero here (H_on >= 5 > 0)
    const SplineBasis basis = SplineBasis::equally_spaced(5, 0.25, 0.66);
    const std::vector<Feature> x_beta = {Feature::intercept()};
    const MTECurve full = mte_by_outcome(res.imputed, res.f_hat, x_beta, {}, basis,
                                         HoursOutcome::FullTime, 0.25, 0.66, 21);
    // on the U's rising slope the margin moves people out of full-time work
    // (H_off = 2|Delta| >= 35 while H_on = |Delta| < 35)
    CHECK(full.mte[3] < -0.2);
}
