#include "mte/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mte {

namespace {

enum Stream : std::uint64_t { kStateStream = 11, kAgentStream = 23 };

struct StateDraw {
    double log_z = 0.0;
    double g = 0.0, t = 0.0, r = 0.0;
    double unemp = 0.0;
    std::vector<double> z_measures;
};

StateDraw draw_state(const PopulationSpec& spec, int s) {
    auto eng = make_engine(spec.seed, kStateStream, static_cast<std::uint64_t>(s));
    std::normal_distribution<double> snorm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    StateDraw d;
    d.log_z = spec.instrument.meanlog + spec.instrument.sdlog * snorm(eng);
    d.g = spec.program.g_low + (spec.program.g_high - spec.program.g_low) * unif(eng);
    d.t = spec.program.t_low + (spec.program.t_high - spec.program.t_low) * unif(eng);
    d.r = spec.program.r_low + (spec.program.r_high - spec.program.r_low) * unif(eng);
    d.unemp = spec.covariates.unemp_low +
              (spec.covariates.unemp_high - spec.covariates.unemp_low) * unif(eng);
    d.z_measures.resize(spec.instrument.measures);
    for (double& z : d.z_measures) {
        z = std::exp(d.log_z + spec.instrument.measure_sd * snorm(eng));
    }
    return d;
}

}  // namespace

void PopulationSpec::validate() const {
    if (states < 1 || agents_per_state < 1)
        throw ConfigError("population: states and agents_per_state must be >= 1");
    if (!(hours_cap > 0.0)) throw ConfigError("population: hours_cap must be > 0");
    theta1.validate("theta1");
    theta2.validate("theta2");
    theta3.validate("theta3");
    nu.validate("nu");
    if (correlation.rows() != 4 || correlation.cols() != 4)
        throw ConfigError("population: correlation must be 4x4");
    if (!(instrument.sdlog >= 0.0) || instrument.measures < 1)
        throw ConfigError("population: instrument needs sdlog >= 0 and measures >= 1");
    if (instrument.measure_sd < 0.0) throw ConfigError("population: measure_sd must be >= 0");
    auto range_ok = [](double lo, double hi) { return std::isfinite(lo) && hi >= lo; };
    if (!range_ok(program.g_low, program.g_high) || program.g_low < 0.0)
        throw ConfigError("population: bad guarantee range");
    if (!range_ok(program.t_low, program.t_high) || program.t_low < 0.0 || program.t_high > 1.0)
        throw ConfigError("population: earnings tax range must lie in [0,1]");
    if (!range_ok(program.r_low, program.r_high) || program.r_low < 0.0 || program.r_high > 1.0)
        throw ConfigError("population: unearned tax range must lie in [0,1]");
    if (wage.sd < 0.0 || nonlabor.sdlog < 0.0)
        throw ConfigError("population: wage/nonlabor scales must be >= 0");
    if (nonlabor.p_zero < 0.0 || nonlabor.p_zero > 1.0)
        throw ConfigError("population: nonlabor p_zero must be in [0,1]");
    if (covariates.age_high < covariates.age_low || covariates.family_size_max < 1)
        throw ConfigError("population: bad covariate process");
}

std::vector<AgentDraw> draw_population(const PopulationSpec& spec, int workers) {
    spec.validate();
    const CopulaSampler copula({spec.theta1, spec.theta2, spec.theta3, spec.nu}, spec.correlation);

    std::vector<StateDraw> states(spec.states);
    for (int s = 0; s < spec.states; ++s) states[s] = draw_state(spec, s);

    const std::size_t per = static_cast<std::size_t>(spec.agents_per_state);
    std::vector<AgentDraw> out(static_cast<std::size_t>(spec.states) * per);

    parallel_for(static_cast<std::size_t>(spec.states), [&](std::size_t si) {
        const StateDraw& st = states[si];
        for (std::size_t j = 0; j < per; ++j) {
            const std::size_t idx = si * per + j;
            auto eng = make_engine(spec.seed, kAgentStream, idx);
            std::normal_distribution<double> snorm(0.0, 1.0);
            std::uniform_real_distribution<double> unif(0.0, 1.0);

            AgentDraw d;
            d.state = static_cast<int>(si);
            d.log_z_latent = st.log_z;
            d.z_measures = st.z_measures;
            d.unemp_rate = st.unemp;

            const CovariateProcess& cv = spec.covariates;
            d.age = cv.age_low + (cv.age_high - cv.age_low) * unif(eng);
            d.black = unif(eng) < cv.black_p ? 1.0 : 0.0;
            d.family_size =
                1.0 + std::floor(unif(eng) * cv.family_size_max * (1.0 - 1e-12));
            d.kids_under6 = (unif(eng) < cv.kids_p ? 1.0 : 0.0) + (unif(eng) < cv.kids_p ? 1.0 : 0.0);
            d.fs_guarantee = cv.fs_base + cv.fs_per_member * d.family_size;

            const double log_w = spec.wage.intercept + spec.wage.age_coef * (d.age - 35.0) +
                                 spec.wage.black_coef * d.black +
                                 spec.wage.famsize_coef * d.family_size +
                                 spec.wage.sd * snorm(eng);
            const double nonlabor =
                unif(eng) < spec.nonlabor.p_zero
                    ? 0.0
                    : std::exp(spec.nonlabor.meanlog + spec.nonlabor.sdlog * snorm(eng));

            const Eigen::VectorXd theta = copula.draw(eng);

            Agent& a = d.agent;
            a.budget.w = std::exp(log_w);
            a.budget.n = nonlabor;
            a.budget.g = st.g;
            a.budget.t = st.t;
            a.budget.r = st.r;
            a.hours_cap = spec.hours_cap;

            a.prefs.theta1 = theta[0];
            a.prefs.theta2 = std::max(theta[1], 1e-4);
            // theta3 is capped so the marginal utility of income stays
            // positive over the attainable budget set; the nonpositivity of
            // Delta is a theorem only on that domain.
            const double y_max = std::max(a.budget.w * spec.hours_cap + a.budget.n,
                                          a.budget.w * (1.0 - a.budget.t) * spec.hours_cap +
                                              a.budget.g + (1.0 - a.budget.r) * a.budget.n);
            a.prefs.theta3 = std::clamp(theta[2], 0.0, y_max > 0.0 ? 1.0 / y_max : 0.0);

            a.cost.z = std::exp(d.log_z_latent);
            a.cost.kappa0 = spec.kappa0;
            a.cost.kappa1 = spec.kappa1;
            a.cost.nu = std::max(theta[3], 0.0);

            d.outcome = simulate_agent(a);
            out[idx] = std::move(d);
        }
    }, workers);
    return out;
}

Dataset simulate_population(const PopulationSpec& spec, int workers) {
    const std::vector<AgentDraw> draws = draw_population(spec, workers);
    const std::size_t n = draws.size();
    const int nz = spec.instrument.measures;

    Dataset data;
    auto fill = [&](const char* name, auto&& get) {
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = get(draws[i]);
        data.set(name, std::move(v));
    };
    fill("hours", [](const AgentDraw& d) { return d.outcome.hours; });
    fill("participates", [](const AgentDraw& d) { return d.outcome.participates ? 1.0 : 0.0; });
    fill("log_wage", [](const AgentDraw& d) {
        return d.outcome.hours > 0.0 ? std::log(d.agent.budget.w)
                                     : std::numeric_limits<double>::quiet_NaN();
    });
    fill("nonlabor_income", [](const AgentDraw& d) { return d.agent.budget.n; });
    fill("guarantee", [](const AgentDraw& d) { return d.agent.budget.g; });
    fill("tax_t", [](const AgentDraw& d) { return d.agent.budget.t; });
    fill("tax_r", [](const AgentDraw& d) { return d.agent.budget.r; });
    fill("age", [](const AgentDraw& d) { return d.age; });
    fill("black", [](const AgentDraw& d) { return d.black; });
    fill("family_size", [](const AgentDraw& d) { return d.family_size; });
    fill("kids_under6", [](const AgentDraw& d) { return d.kids_under6; });
    fill("unemp_rate", [](const AgentDraw& d) { return d.unemp_rate; });
    fill("region1", [](const AgentDraw& d) { return d.state % 4 == 1 ? 1.0 : 0.0; });
    fill("region2", [](const AgentDraw& d) { return d.state % 4 == 2 ? 1.0 : 0.0; });
    fill("region3", [](const AgentDraw& d) { return d.state % 4 == 3 ? 1.0 : 0.0; });
    fill("fs_guarantee", [](const AgentDraw& d) { return d.fs_guarantee; });
    for (int k = 0; k < nz; ++k) {
        fill(("z" + std::to_string(k + 1)).c_str(),
             [k](const AgentDraw& d) { return d.z_measures[static_cast<std::size_t>(k)]; });
    }
    fill("cluster_id", [](const AgentDraw& d) { return static_cast<double>(d.state); });
    fill("oracle_delta", [](const AgentDraw& d) { return d.outcome.delta; });
    fill("oracle_dv", [](const AgentDraw& d) { return d.outcome.utility_gain; });
    fill("oracle_phi", [](const AgentDraw& d) { return d.outcome.phi; });
    data.validate();
    return data;
}

PopulationMoments population_moments(const PopulationSpec& spec, int workers) {
    const std::vector<AgentDraw> draws = draw_population(spec, workers);
    double sum_p = 0.0, sum_dp = 0.0;
    std::size_t n1 = 0;
    for (const AgentDraw& d : draws) {
        if (d.outcome.participates) {
            ++n1;
            sum_dp += d.outcome.delta;
        }
        sum_p += d.outcome.participates ? 1.0 : 0.0;
    }
    const double n = static_cast<double>(draws.size());
    PopulationMoments m;
    m.participation_rate = sum_p / n;
    m.mean_effect = sum_dp / n;
    if (n1 > 0) m.treatment_on_treated = sum_dp / static_cast<double>(n1);
    return m;
}

TrueMteCurve true_mte_curve(const PopulationSpec& spec, const std::vector<double>& p_grid,
                            double half_window, int workers) {
    if (p_grid.empty()) throw ConfigError("true_mte_curve: empty p grid");
    const std::vector<AgentDraw> draws = draw_population(spec, workers);
    const double n = static_cast<double>(draws.size());

    // Participation under a swept cost intercept k0, holding the barrier term
    // at a common reference so the whole threshold shifts uniformly (the
    // margin traced this way is the same selection-rank margin the LIV
    // estimator identifies; state-level barrier dispersion would instead
    // average margins across states). An agent with dV >= 0 joins iff
    // k0 <= c_i = dV - nu (the clamp at phi = 0 folds in because dV >= 0).
    // Sorting by c turns the sweep into order statistics computed on common
    // random numbers.
    struct Margin { double c; double delta; };
    std::vector<Margin> margins;
    margins.reserve(draws.size());
    for (const AgentDraw& d : draws) {
        if (d.outcome.utility_gain >= 0.0 && d.agent.budget.eligible()) {
            margins.push_back({d.outcome.utility_gain - d.agent.cost.nu, d.outcome.delta});
        }
    }
    std::sort(margins.begin(), margins.end(),
              [](const Margin& a, const Margin& b) { return a.c > b.c; });

    TrueMteCurve curve;
    curve.p_min = 0.0;
    curve.p_max = static_cast<double>(margins.size()) / n;

    // Prefix sums of Delta over the join order: mean_effect(P = k/n) = cum[k]/n.
    std::vector<double> cum(margins.size() + 1, 0.0);
    for (std::size_t k = 0; k < margins.size(); ++k) cum[k + 1] = cum[k] + margins[k].delta;

    auto eval = [&](double h) {
        std::vector<double> mte(p_grid.size());
        for (std::size_t i = 0; i < p_grid.size(); ++i) {
            const double p = p_grid[i];
            if (!(p - h >= 0.0) || !(p + h <= curve.p_max)) {
                throw SupportError(
                    "true_mte_curve: requested P=" + std::to_string(p) +
                    " outside achievable range [" + std::to_string(h) + ", " +
                    std::to_string(curve.p_max - h) + "]");
            }
            const auto k_lo = static_cast<std::size_t>(std::llround((p - h) * n));
            const auto k_hi = static_cast<std::size_t>(std::llround((p + h) * n));
            if (k_hi <= k_lo) throw ConfigError("true_mte_curve: half_window too small for population size");
            mte[i] = (cum[k_hi] - cum[k_lo]) / static_cast<double>(k_hi - k_lo);
        }
        return mte;
    };

    const auto [gmin_it, gmax_it] = std::minmax_element(p_grid.begin(), p_grid.end());
    const double h_feasible = std::min(*gmin_it, curve.p_max - *gmax_it);
    double h = half_window;
    if (h <= 0.0) {
        if (!(h_feasible > 0.0)) {
            throw SupportError("true_mte_curve: p grid touches the achievable range (0, " +
                               std::to_string(curve.p_max) + ")");
        }
        // Widen the window until the Monte Carlo standard error of the local
        // mean stays below 10% of the provisional curve range.
        h = std::min(0.02, h_feasible);
        std::vector<double> deltas(margins.size());
        for (std::size_t k = 0; k < margins.size(); ++k) deltas[k] = margins[k].delta;
        const double sd = std::sqrt(sample_variance(deltas));
        for (int pass = 0; pass < 6; ++pass) {
            const std::vector<double> mte = eval(h);
            const auto [lo, hi] = std::minmax_element(mte.begin(), mte.end());
            const double range = *hi - *lo;
            const double se = sd / std::sqrt(std::max(1.0, 2.0 * h * n));
            if (range <= 0.0 || se < 0.1 * range || h >= h_feasible) break;
            h = std::min(h * 1.6, h_feasible);
        }
    }
    curve.half_window = h;
    curve.mte = eval(h);
    curve.p = p_grid;
    return curve;
}

}  // namespace mte
