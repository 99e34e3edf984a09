#include "mte/wage.hpp"

#include <cmath>

#include "mte/linalg.hpp"
#include "mte/probit.hpp"

namespace mte {

WageModel wage_fit(const Dataset& data, WageMode mode,
                   const std::vector<Feature>& wage_features,
                   const std::vector<Feature>& selection_features) {
    const auto& lw = data.col("log_wage");
    std::vector<std::size_t> worker_rows;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (!std::isnan(lw[i])) worker_rows.push_back(i);
    }
    if (worker_rows.size() < 30)
        throw FitError("wage_fit: only " + std::to_string(worker_rows.size()) +
                       " workers with observed wages; need >= 30");

    WageModel model;
    model.mode = mode;
    model.features = wage_features;
    model.workers_used = worker_rows.size();

    const Dataset workers = data.take(worker_rows);
    Eigen::MatrixXd design = build_design(workers, wage_features);
    Eigen::VectorXd y(static_cast<Eigen::Index>(worker_rows.size()));
    {
        const auto& wlw = workers.col("log_wage");
        for (std::size_t i = 0; i < worker_rows.size(); ++i) y[static_cast<Eigen::Index>(i)] = wlw[i];
    }
    std::vector<std::string> names = feature_names(wage_features);

    Eigen::VectorXd mills;
    bool use_mills = false;
    if (mode == WageMode::SelectionAdjusted) {
        // Employment probit: worked (wage observed) on the selection set.
        Dataset sel = data;
        std::vector<double> worked(data.n(), 0.0);
        for (std::size_t i : worker_rows) worked[i] = 1.0;
        sel.set("participates", std::move(worked));  // reuse the probit outcome slot
        try {
            const FirstStageModel emp = probit_fit(sel, selection_features, {});
            const std::vector<double> idx_full = probit_index(emp, sel);
            mills.resize(static_cast<Eigen::Index>(worker_rows.size()));
            for (std::size_t i = 0; i < worker_rows.size(); ++i) {
                mills[static_cast<Eigen::Index>(i)] = inv_mills(idx_full[worker_rows[i]]);
            }
            use_mills = true;
        } catch (const Error&) {
            model.selection_fallback = true;  // separation or rank failure: plain OLS
        }
    }

    if (use_mills) {
        Eigen::MatrixXd aug(design.rows(), design.cols() + 1);
        aug << design, mills;
        names.push_back("inv_mills");
        const LeastSquares fit = lstsq(aug, y, &names);
        model.gamma = fit.coef.head(design.cols());
        model.mills_coefficient = fit.coef[design.cols()];
        model.sigma2 = fit.rss / static_cast<double>(aug.rows() - aug.cols());
    } else {
        const LeastSquares fit = lstsq(design, y, &names);
        model.gamma = fit.coef;
        model.sigma2 = fit.rss / static_cast<double>(design.rows() - design.cols());
    }
    return model;
}

Dataset impute_wages(const Dataset& data, const WageModel& model) {
    Dataset out = data;
    auto& lw = out.col("log_wage");
    std::vector<std::size_t> missing;
    for (std::size_t i = 0; i < out.n(); ++i) {
        if (std::isnan(lw[i])) missing.push_back(i);
    }
    if (missing.empty()) return out;
    const Eigen::MatrixXd design = build_design(out.take(missing), model.features);
    const Eigen::VectorXd fitted = design * model.gamma;
    for (std::size_t k = 0; k < missing.size(); ++k) lw[missing[k]] = fitted[static_cast<Eigen::Index>(k)];
    return out;
}

}  // namespace mte
