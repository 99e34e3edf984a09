#include "mte/pipeline.hpp"

#include <algorithm>
#include <cmath>

namespace mte {

void EstimatorSpec::validate() const {
    if (knots < 3 || knots > 8) throw ConfigError("estimator: knots must be in [3,8]");
    if (!(window_lo > 0.0 && window_hi < 1.0 && window_hi > window_lo))
        throw ConfigError("estimator: window must satisfy 0 < lo < hi < 1");
    if (grid_points < 2) throw ConfigError("estimator: grid_points must be >= 2");
}

std::vector<Feature> default_first_stage_x() {
    return {
        Feature::intercept(),
        Feature::raw("log_wage"),          // log W (dataset stores the log)
        Feature::log_net_wage(),           // log W(1-t)
        Feature::log_shift("guarantee", 1.0),
        Feature::log_shift("nonlabor_income", 10.0),
        Feature::raw("age"),
        Feature::raw("black"),
        Feature::raw("family_size"),
        Feature::raw("kids_under6"),
        Feature::raw("unemp_rate"),
        Feature::raw("region1"),
        Feature::raw("region2"),
        Feature::raw("region3"),
        Feature::raw("fs_guarantee"),
    };
}

std::vector<Feature> default_x_beta() {
    // Off-welfare labor supply: wages, nonlabor income and demographics, but
    // never the program parameters.
    return {
        Feature::intercept(),
        Feature::raw("log_wage"),
        Feature::log_shift("nonlabor_income", 10.0),
        Feature::raw("age"),
        Feature::raw("black"),
        Feature::raw("family_size"),
        Feature::raw("kids_under6"),
        Feature::raw("unemp_rate"),
        Feature::raw("region1"),
        Feature::raw("region2"),
        Feature::raw("region3"),
        Feature::raw("fs_guarantee"),
    };
}

std::vector<Feature> default_x_lambda(const EstimatorSpec& spec) {
    std::vector<Feature> out = {
        Feature::log_net_wage(),
        Feature::log_shift("guarantee", 1.0),
        Feature::log_shift("nonlabor_income", 10.0),
    };
    for (const auto& col : spec.extra_lambda_cols) out.push_back(Feature::raw(col));
    return out;
}

std::vector<Feature> default_wage_features() {
    return {
        Feature::intercept(), Feature::raw("age"),        Feature::raw("black"),
        Feature::raw("family_size"), Feature::raw("unemp_rate"), Feature::raw("region1"),
        Feature::raw("region2"),     Feature::raw("region3"),
    };
}

std::vector<Feature> default_selection_features() {
    // Employment probit for the selection-adjusted wage equation: the wage
    // covariates plus family structure and program variables.
    return {
        Feature::intercept(),
        Feature::raw("age"),
        Feature::raw("black"),
        Feature::raw("family_size"),
        Feature::raw("kids_under6"),
        Feature::raw("unemp_rate"),
        Feature::raw("region1"),
        Feature::raw("region2"),
        Feature::raw("region3"),
        Feature::raw("fs_guarantee"),
        Feature::log_shift("nonlabor_income", 10.0),
        Feature::log_shift("guarantee", 1.0),
        Feature::raw("tax_t"),
    };
}

namespace {

std::vector<Feature> index_interaction_features(const EstimatorSpec& spec) {
    std::vector<Feature> out = {Feature::raw("z_index")};
    for (IndexInteraction which : spec.interactions) {
        switch (which) {
            case IndexInteraction::NonlaborIncome:
                out.push_back(Feature::product("z_index", "x_log_n10"));
                break;
            case IndexInteraction::Guarantee:
                out.push_back(Feature::product("z_index", "x_log_g1"));
                break;
            case IndexInteraction::NetWage:
                out.push_back(Feature::product("z_index", "x_log_netwage"));
                break;
        }
    }
    return out;
}

// Materializes the transformed budget columns the interactions multiply into.
void add_interaction_columns(Dataset& data) {
    data.set("x_log_n10", evaluate_feature(data, Feature::log_shift("nonlabor_income", 10.0)));
    data.set("x_log_g1", evaluate_feature(data, Feature::log_shift("guarantee", 1.0)));
    data.set("x_log_netwage", evaluate_feature(data, Feature::log_net_wage()));
}

EstimationResult first_stage_impl(const Dataset& data, const EstimatorSpec& spec) {
    spec.validate();
    data.validate();

    EstimationResult res;

    // Wage equation first: the budget-constraint covariates need a wage for
    // every row. Skipped only when nothing is missing and the worker sample
    // is too small to fit.
    const auto& lw = data.col("log_wage");
    const bool any_missing = std::any_of(lw.begin(), lw.end(), [](double v) { return std::isnan(v); });
    std::size_t workers = 0;
    for (double v : lw) workers += !std::isnan(v);
    if (any_missing || workers >= 30) {
        res.wage = wage_fit(data, spec.wage_mode, default_wage_features(),
                            default_selection_features());
        res.imputed = impute_wages(data, *res.wage);
    } else {
        res.imputed = data;
    }

    std::vector<std::string> zcols = spec.instrument_cols;
    if (zcols.empty()) zcols = res.imputed.instrument_columns();
    res.index = instrument_index(res.imputed, zcols, spec.weighting);
    res.imputed.set("z_index", res.index.values);
    add_interaction_columns(res.imputed);

    std::vector<Feature> x_feats =
        prune_features(res.imputed, default_first_stage_x(), &res.dropped_columns);
    std::vector<Feature> z_feats = index_interaction_features(spec);
    // Interactions with constant budget variables are degenerate copies of
    // the index; drop them (the index itself always stays).
    {
        std::vector<Feature> all = x_feats;
        all.insert(all.end(), z_feats.begin(), z_feats.end());
        std::vector<std::string> dropped;
        all = prune_features(res.imputed, all, &dropped);
        std::vector<Feature> z_kept;
        for (const auto& f : all) {
            const bool is_z = f.col == "z_index";
            if (is_z) z_kept.push_back(f);
        }
        std::vector<Feature> x_kept;
        for (const auto& f : all) {
            if (f.col != "z_index") x_kept.push_back(f);
        }
        if (z_kept.empty()) {
            throw RankError("first stage: every instrument term is degenerate (constant index?)");
        }
        for (const auto& name : dropped) res.dropped_columns.push_back(name);
        x_feats = std::move(x_kept);
        z_feats = std::move(z_kept);
    }

    res.first_stage = probit_fit(res.imputed, x_feats, z_feats);
    res.f_hat = probit_predict(res.first_stage, res.imputed);
    return res;
}

}  // namespace

EstimationResult run_first_stage(const Dataset& data, const EstimatorSpec& spec) {
    return first_stage_impl(data, spec);
}

Dataset prepare_for_prediction(const Dataset& rows, const EstimationResult& fitted) {
    Dataset out = fitted.wage ? impute_wages(rows, *fitted.wage) : rows;
    out.set("z_index", apply_index_weights(out, fitted.index.columns, fitted.index.weights));
    add_interaction_columns(out);
    return out;
}

EstimationResult run_estimation(const Dataset& data, const EstimatorSpec& spec) {
    EstimationResult res = first_stage_impl(data, spec);

    std::vector<Feature> x_beta =
        prune_features(res.imputed, default_x_beta(), &res.dropped_columns);
    std::vector<Feature> x_lambda;
    {
        // Lambda columns multiply F, so constants there are collinear with
        // the spline's F term; prune against the beta block as well.
        std::vector<std::string> dropped;
        std::vector<Feature> candidates = default_x_lambda(spec);
        std::vector<Feature> kept;
        for (const auto& f : candidates) {
            const std::vector<double> col = evaluate_feature(res.imputed, f);
            const bool constant = std::all_of(col.begin(), col.end(),
                                              [&](double v) { return v == col.front(); });
            if (constant) {
                dropped.push_back(f.name() + "*F");
            } else {
                kept.push_back(f);
            }
        }
        for (const auto& d : dropped) res.dropped_columns.push_back(d);
        x_lambda = std::move(kept);
    }

    const SplineBasis basis = SplineBasis::equally_spaced(spec.knots, spec.window_lo, spec.window_hi);
    res.second_stage = second_stage_fit(res.imputed, res.f_hat, x_beta, x_lambda, basis,
                                        spec.window_lo, spec.window_hi);
    res.curve = mte_curve(res.second_stage, spec.grid_points);
    return res;
}

}  // namespace mte
