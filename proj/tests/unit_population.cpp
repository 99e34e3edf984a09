#include <doctest.h>

#include <cmath>

#include "mte/population.hpp"
#include "worlds.hpp"

using namespace mte;

TEST_CASE("simulation is deterministic in the seed and worker count") {
    PopulationSpec spec = worlds::homogeneous_world(42, 8, 50);
    const Dataset a = simulate_population(spec, 1);
    const Dataset b = simulate_population(spec, 4);
    REQUIRE(a.n() == b.n());
    REQUIRE(a.names() == b.names());
    for (const auto& name : a.names()) {
        const auto& ca = a.col(name);
        const auto& cb = b.col(name);
        for (std::size_t i = 0; i < a.n(); ++i) {
            if (std::isnan(ca[i])) {
                CHECK(std::isnan(cb[i]));
            } else {
                CHECK(ca[i] == cb[i]);  // bit identical
            }
        }
    }
    PopulationSpec other = spec;
    other.seed = 43;
    const Dataset c = simulate_population(other, 1);
    bool any_difference = false;
    for (std::size_t i = 0; i < c.n(); ++i) {
        any_difference |= c.col("hours")[i] != a.col("hours")[i];
    }
    CHECK(any_difference);
}

TEST_CASE("prohibitive costs give zero participation") {
    PopulationSpec spec = worlds::homogeneous_world(1, 5, 100);
    spec.kappa0 = 1e9;
    const PopulationMoments m = population_moments(spec);
    CHECK(m.participation_rate == 0.0);
    CHECK_FALSE(m.treatment_on_treated.has_value());
    CHECK(m.mean_effect == 0.0);
}

TEST_CASE("free pure transfer gives full participation") {
    PopulationSpec spec = worlds::homogeneous_world(2, 5, 100);
    spec.nu = MarginalSpec::constant(0.0);
    spec.kappa0 = -1e6;  // phi clamps to 0
    spec.program = {120.0, 120.0, 0.0, 0.0, 0.0, 0.0};  // g > 0, t = r = 0: dV = g > 0
    const PopulationMoments m = population_moments(spec);
    CHECK(m.participation_rate == 1.0);
}

TEST_CASE("sampled participation share matches an independent Monte Carlo integral") {
    const int states = 150, per_state = 80;  // n = 12,000
    PopulationSpec spec = worlds::homogeneous_world(3, states, per_state);
    const PopulationMoments m = population_moments(spec);

    // Independent oracle: the participation integral evaluated by direct
    // Monte Carlo over the model primitives (fresh draws, fresh seed). The
    // barrier is drawn once per state in the simulator, so the share's
    // sampling variance has a cluster component tracked alongside.
    std::mt19937_64 eng(987654321);
    std::normal_distribution<double> snorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const long draws = 1000000;
    long joined = 0;
    double sum_q = 0.0, sum_q2 = 0.0;  // P(join | Z) moments across barrier draws
    for (long i = 0; i < draws; ++i) {
        const double logz = spec.instrument.meanlog + spec.instrument.sdlog * snorm(eng);
        const double nu = 300.0 * unif(eng);
        Agent a;
        a.prefs = {0.0, 0.625, 0.0};
        a.budget = {10.0, 0.0, 300.0, 0.5, 0.0};
        a.hours_cap = spec.hours_cap;
        a.cost = {std::exp(logz), spec.kappa0, spec.kappa1, nu};
        joined += participate(a);
        const double q = std::clamp((240.0 - spec.kappa0 - spec.kappa1 * logz) / 300.0, 0.0, 1.0);
        sum_q += q;
        sum_q2 += q * q;
    }
    const double oracle_p = static_cast<double>(joined) / draws;
    const double var_q = sum_q2 / draws - (sum_q / draws) * (sum_q / draws);
    const double var_share = var_q / states +
                             oracle_p * (1.0 - oracle_p) / (states * per_state) +
                             oracle_p * (1.0 - oracle_p) / draws;
    CHECK(std::abs(m.participation_rate - oracle_p) < 3.0 * std::sqrt(var_share) + 1e-12);
}

TEST_CASE("moment identity: mean effect equals TOT times participation, exactly on paired draws") {
    PopulationSpec spec = worlds::u_world(7, 10, 300);
    const Dataset data = simulate_population(spec);
    const auto& part = data.col("participates");
    const auto& del = data.col("oracle_delta");
    double sum_dp = 0.0, sum_p = 0.0, sum_d_given_p = 0.0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        sum_p += part[i];
        sum_dp += del[i] * part[i];
        if (part[i] == 1.0) sum_d_given_p += del[i];
    }
    const double n = static_cast<double>(data.n());
    const PopulationMoments m = population_moments(spec);
    CHECK(m.mean_effect == doctest::Approx(sum_dp / n).epsilon(1e-12));
    REQUIRE(m.treatment_on_treated.has_value());
    // identity: mean_effect = TOT * P with the same draws
    CHECK(m.mean_effect ==
          doctest::Approx(*m.treatment_on_treated * m.participation_rate).epsilon(1e-12));
}

TEST_CASE("homogeneous Delta = -8: mean effect is -8 of the participation share") {
    PopulationSpec spec = worlds::homogeneous_world(5, 10, 400);
    const PopulationMoments m = population_moments(spec);
    REQUIRE(m.treatment_on_treated.has_value());
    CHECK(*m.treatment_on_treated == doctest::Approx(-8.0).epsilon(1e-9));
    CHECK(m.mean_effect == doctest::Approx(-8.0 * m.participation_rate).epsilon(1e-9));
}

TEST_CASE("analytic half participation: dV = 5 with phi ~ U(0,10)") {
    PopulationSpec spec;
    spec.states = 40;
    spec.agents_per_state = 2500;
    spec.seed = 9;
    spec.theta2 = MarginalSpec::constant(1.0);
    spec.nu = MarginalSpec::uniform(0.0, 10.0);
    spec.program = {5.0, 5.0, 0.0, 0.0, 0.0, 0.0};  // pure transfer: dV = 5
    spec.wage.intercept = worlds::kLogWage10;
    spec.nonlabor.p_zero = 1.0;
    spec.kappa0 = 0.0;
    spec.kappa1 = 0.0;
    const PopulationMoments m = population_moments(spec);
    CHECK(m.participation_rate == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("true MTE curve: homogeneous world is flat at -8") {
    PopulationSpec spec = worlds::homogeneous_world(11, 30, 1000);
    const std::vector<double> grid = {0.3, 0.4, 0.5, 0.6};
    const TrueMteCurve curve = true_mte_curve(spec, grid);
    for (double v : curve.mte) CHECK(v == doctest::Approx(-8.0).epsilon(1e-9));
}

TEST_CASE("true MTE curve: no program means no response") {
    PopulationSpec spec = worlds::homogeneous_world(13, 10, 500);
    spec.program.g_low = spec.program.g_high = 0.0;
    spec.program.t_low = spec.program.t_high = 0.0;  // dV = 0, everyone indifferent
    spec.nu = MarginalSpec::constant(0.0);
    spec.kappa0 = -10.0;  // phi = 0: ties participate
    const std::vector<double> grid = {0.3, 0.5, 0.7};
    const TrueMteCurve curve = true_mte_curve(spec, grid);
    for (double v : curve.mte) CHECK(std::abs((v) - (0.0)) < 1e-12);
}

TEST_CASE("true MTE curve: two-type world steps from -5 to -20 across P = 0.5") {
    PopulationSpec spec = worlds::two_type_world(17);
    const std::vector<double> grid = {0.30, 0.40, 0.60, 0.70};
    const TrueMteCurve curve = true_mte_curve(spec, grid, 0.05);
    CHECK(curve.mte[0] == doctest::Approx(-5.0).epsilon(0.02));
    CHECK(curve.mte[1] == doctest::Approx(-5.0).epsilon(0.02));
    CHECK(curve.mte[2] == doctest::Approx(-20.0).epsilon(0.02));
    CHECK(curve.mte[3] == doctest::Approx(-20.0).epsilon(0.02));
}

TEST_CASE("true MTE curve: out-of-support requests name the achievable range") {
    PopulationSpec spec = worlds::two_type_world(19, 10, 500);
    CHECK_THROWS_AS(true_mte_curve(spec, {0.999}, 0.02), SupportError);
    CHECK_THROWS_AS(true_mte_curve(spec, {0.0001}, 0.02), SupportError);
}

TEST_CASE("simulated datasets carry missing wages only for nonworkers") {
    PopulationSpec spec = worlds::homogeneous_world(21, 6, 200);
    spec.theta1 = MarginalSpec::normal(-8.0, 6.0);  // some corners at H = 0
    const Dataset data = simulate_population(spec);
    const auto& hours = data.col("hours");
    const auto& lw = data.col("log_wage");
    bool any_missing = false;
    for (std::size_t i = 0; i < data.n(); ++i) {
        CHECK(std::isnan(lw[i]) == (hours[i] == 0.0));
        any_missing |= std::isnan(lw[i]);
    }
    CHECK(any_missing);
}

TEST_CASE("u-world oracle traces the designed U shape") {
    PopulationSpec spec = worlds::u_world(23, 40, 2500);  // n = 100,000
    std::vector<double> grid;
    for (int k = 0; k <= 10; ++k) grid.push_back(0.25 + 0.41 * k / 10.0);
    const TrueMteCurve curve = true_mte_curve(spec, grid, 0.01);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(std::abs(curve.mte[k] - worlds::u_world_true_mte(grid[k])) < 1.2);
    }
}
