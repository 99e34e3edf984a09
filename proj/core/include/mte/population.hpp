#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "mte/dataset.hpp"
#include "mte/distributions.hpp"
#include "mte/structural.hpp"

namespace mte {

// Synthetic-population generating process. States carry the program
// parameters and the barrier instrument; agents carry preferences, costs,
// covariates, and the wage/nonlabor-income draws.
struct CovariateProcess {
    double age_low = 20.0, age_high = 55.0;
    double black_p = 0.4;
    int family_size_max = 5;        // uniform integer 1..max
    double kids_p = 0.35;           // Binomial(2, p) children under 6
    double unemp_low = 3.0, unemp_high = 10.0;  // state-level rate
    double fs_base = 50.0, fs_per_member = 30.0;
};

// log W = intercept + age_coef*(age-35) + black_coef*black
//         + famsize_coef*family_size + sd * eps
struct WageProcess {
    double intercept = 2.30;
    double age_coef = 0.0;
    double black_coef = 0.0;
    double famsize_coef = 0.0;
    double sd = 0.0;
};

struct NonlaborProcess {
    double p_zero = 1.0;  // probability of zero nonlabor income
    double meanlog = 3.0, sdlog = 0.5;
};

// Per-state uniform draws of the program parameters.
struct ProgramProcess {
    double g_low = 300.0, g_high = 300.0;
    double t_low = 0.5, t_high = 0.5;
    double r_low = 0.0, r_high = 0.0;
};

// Latent per-state barrier index plus noisy measured columns z1..zK.
struct InstrumentProcess {
    double meanlog = 0.0, sdlog = 1.0;
    int measures = 1;
    double measure_sd = 0.0;
};

struct PopulationSpec {
    int states = 50;
    int agents_per_state = 1000;
    double hours_cap = 60.0;
    std::uint64_t seed = 1;

    MarginalSpec theta1 = MarginalSpec::constant(0.0);
    MarginalSpec theta2 = MarginalSpec::constant(1.0);
    MarginalSpec theta3 = MarginalSpec::constant(0.0);
    MarginalSpec nu = MarginalSpec::constant(0.0);
    // Gaussian-copula correlation among (theta1, theta2, theta3, nu).
    Eigen::MatrixXd correlation = Eigen::MatrixXd::Identity(4, 4);

    double kappa0 = 0.0;  // cost-index intercept
    double kappa1 = 0.0;  // loading on the logged barrier index

    InstrumentProcess instrument;
    ProgramProcess program;
    WageProcess wage;
    NonlaborProcess nonlabor;
    CovariateProcess covariates;

    void validate() const;
};

// One drawn unit with its latent outcome; the building block for both the
// emitted Dataset and the oracle computations.
struct AgentDraw {
    Agent agent;
    SimOutcome outcome;
    int state = 0;
    double log_z_latent = 0.0;
    double age = 0.0, black = 0.0, family_size = 1.0, kids_under6 = 0.0;
    double unemp_rate = 0.0, fs_guarantee = 0.0;
    std::vector<double> z_measures;
};

// Draws the full population. Deterministic given spec.seed and independent of
// worker scheduling (per-unit engines keyed by (seed, state, index)).
std::vector<AgentDraw> draw_population(const PopulationSpec& spec, int workers = 0);

// Dataset emission: observed columns plus oracle_delta/oracle_dv/oracle_phi.
// Nonworkers (hours == 0) get a missing log_wage.
Dataset simulate_population(const PopulationSpec& spec, int workers = 0);

struct PopulationMoments {
    double participation_rate = 0.0;              // P = E[P_i]
    std::optional<double> treatment_on_treated;   // E[Delta | P=1]; empty when P=0
    double mean_effect = 0.0;                     // E[Delta * P]
};

PopulationMoments population_moments(const PopulationSpec& spec, int workers = 0);

struct TrueMteCurve {
    std::vector<double> p;    // participation-rate grid
    std::vector<double> mte;  // dE[Delta*P]/dP by centered differences
    double p_min = 0.0, p_max = 0.0;  // achievable participation range
    double half_window = 0.0;         // differencing half-width actually used
};

// Ground-truth marginal response: sweeps the cost intercept kappa0 with
// common random numbers and differentiates mean_effect with respect to the
// participation rate. half_window <= 0 picks a width at which Monte Carlo
// noise stays under 10% of the curve's range.
TrueMteCurve true_mte_curve(const PopulationSpec& spec, const std::vector<double>& p_grid,
                            double half_window = 0.0, int workers = 0);

}  // namespace mte
