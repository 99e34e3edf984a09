#include "mte/counterfactual.hpp"

#include <cmath>

namespace mte {

namespace {

// Participation rates are reported on a 2^-32 grid: differences and sums of
// grid values up to magnitude 4 are exact in double precision, which makes
// the decomposition identity hold bitwise rather than to rounding error.
double snap(double p) { return std::round(p * 4294967296.0) / 4294967296.0; }

double mean_fhat(const FirstStageModel& model, const Dataset& rows) {
    const std::vector<double> f = probit_predict(model, rows);
    return mean(f);
}

}  // namespace

Dataset scenario_rows(const EstimationResult& fitted, const Dataset& base,
                      const ReformScenario& scenario, bool apply_program) {
    Dataset rows = scenario.sample ? *scenario.sample : base;

    if (!scenario.sample && !scenario.covariate_means.empty()) {
        for (const auto& [col, target] : scenario.covariate_means) {
            if (!rows.has(col)) throw SchemaError("scenario '" + scenario.label + "': no covariate column '" + col + "'");
            auto& v = rows.col(col);
            const double shift = target - mean(v);
            for (double& x : v) x += shift;
        }
    }
    if (apply_program) {
        if (scenario.guarantee) {
            rows.set("guarantee", std::vector<double>(rows.n(), *scenario.guarantee));
        }
        if (scenario.tax_t) {
            rows.set("tax_t", std::vector<double>(rows.n(), *scenario.tax_t));
        }
    } else if (scenario.sample) {
        // Demographic step of a replacement sample: hold the program
        // parameters at the base-sample means.
        rows.set("guarantee", std::vector<double>(rows.n(), mean(base.col("guarantee"))));
        rows.set("tax_t", std::vector<double>(rows.n(), mean(base.col("tax_t"))));
    }
    return prepare_for_prediction(rows, fitted);
}

ParticipationDecomposition participation_decomposition(const EstimationResult& fitted,
                                                       const Dataset& base,
                                                       const ReformScenario& scenario) {
    const Dataset base_scored = prepare_for_prediction(base, fitted);
    const double p_base = snap(mean_fhat(fitted.first_stage, base_scored));

    const Dataset demo = scenario_rows(fitted, base, scenario, /*apply_program=*/false);
    const double p_demo = snap(mean_fhat(fitted.first_stage, demo));

    const Dataset full = scenario_rows(fitted, base, scenario, /*apply_program=*/true);
    const double p_full = snap(mean_fhat(fitted.first_stage, full));

    ParticipationDecomposition out;
    out.label = scenario.label;
    out.base = p_base;
    out.p_target = snap(scenario.p_target);
    out.d_demographics = p_demo - p_base;
    out.d_program = p_full - p_demo;
    out.d_residual = out.p_target - p_full;
    return out;
}

ReformEffect mte_at_reform(const EstimationResult& fitted, const Dataset& base,
                           const ReformScenario& scenario, const BootstrapResult* boot) {
    const SecondStageModel& model = fitted.second_stage;
    if (!(scenario.p_target >= model.window_lo && scenario.p_target <= model.window_hi)) {
        throw SupportError("mte_at_reform: scenario '" + scenario.label + "' target P=" +
                           std::to_string(scenario.p_target) + " outside support window [" +
                           std::to_string(model.window_lo) + ", " +
                           std::to_string(model.window_hi) + "]; no extrapolation");
    }
    // Scenario covariate means on the lambda block (program overrides applied,
    // since the interaction covariates include the budget variables).
    const Dataset rows = scenario_rows(fitted, base, scenario, /*apply_program=*/true);
    std::vector<double> lambda_at(model.x_lambda.size());
    for (std::size_t j = 0; j < model.x_lambda.size(); ++j) {
        lambda_at[j] = mean(evaluate_feature(rows, model.x_lambda[j]));
    }

    ReformEffect eff;
    eff.label = scenario.label;
    eff.p_target = scenario.p_target;
    eff.mte = mte_eval(model, scenario.p_target, lambda_at);
    if (boot && !boot->models.empty()) {
        std::vector<double> reps;
        reps.reserve(boot->models.size());
        for (const auto& m : boot->models) {
            std::vector<double> at(m.x_lambda.size());
            for (std::size_t j = 0; j < m.x_lambda.size(); ++j) {
                at[j] = mean(evaluate_feature(rows, m.x_lambda[j]));
            }
            reps.push_back(mte_eval(m, scenario.p_target, at));
        }
        eff.lo95 = quantile(reps, 0.025);
        eff.hi95 = quantile(reps, 0.975);
    }
    return eff;
}

}  // namespace mte
