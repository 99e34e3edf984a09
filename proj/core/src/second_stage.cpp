#include "mte/second_stage.hpp"

#include <cmath>

#include "mte/linalg.hpp"

namespace mte {

namespace {

// [X_beta | centered-X_lambda .* F | F * basis(F)]
Eigen::MatrixXd constructed_design(const Eigen::MatrixXd& xb, const Eigen::MatrixXd& xl,
                                   const std::vector<double>& lambda_means,
                                   const std::vector<double>& f_hat, const SplineBasis& basis) {
    const Eigen::Index n = xb.rows();
    const Eigen::Index pb = xb.cols();
    const Eigen::Index pl = xl.cols();
    const Eigen::Index pj = basis.size();
    Eigen::MatrixXd design(n, pb + pl + pj);
    design.leftCols(pb) = xb;
    std::vector<double> v, d;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double f = f_hat[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < pl; ++j) {
            design(i, pb + j) = (xl(i, j) - lambda_means[static_cast<std::size_t>(j)]) * f;
        }
        basis.evaluate(f, v, d);
        for (Eigen::Index j = 0; j < pj; ++j) design(i, pb + pl + j) = f * v[static_cast<std::size_t>(j)];
    }
    return design;
}

std::vector<std::string> block_names(const std::vector<Feature>& x_beta,
                                     const std::vector<Feature>& x_lambda, int j_count) {
    std::vector<std::string> names = feature_names(x_beta);
    for (const auto& f : x_lambda) names.push_back("[" + f.name() + " - mean]*F");
    names.push_back("F*1 (g1)");
    names.push_back("F*F (g2)");
    for (int j = 3; j <= j_count; ++j) names.push_back("F*S" + std::to_string(j) + " (g" + std::to_string(j) + ")");
    return names;
}

}  // namespace

SecondStageModel second_stage_fit(const Dataset& data, const std::vector<double>& f_hat,
                                  const std::vector<Feature>& x_beta,
                                  const std::vector<Feature>& x_lambda,
                                  const SplineBasis& basis, double window_lo, double window_hi,
                                  const std::string& outcome_col) {
    if (f_hat.size() != data.n())
        throw SchemaError("second_stage_fit: F-hat length " + std::to_string(f_hat.size()) +
                          " does not match n=" + std::to_string(data.n()));
    for (std::size_t i = 0; i < f_hat.size(); ++i) {
        if (!(f_hat[i] > 0.0 && f_hat[i] < 1.0))
            throw DomainError("second_stage_fit: F-hat outside (0,1) at row " + std::to_string(i + 1));
    }
    if (x_beta.empty() || x_beta.front().kind != Feature::Kind::Intercept)
        throw ConfigError("second_stage_fit: x_beta must start with an intercept");

    SecondStageModel model;
    model.x_beta = x_beta;
    model.x_lambda = x_lambda;
    model.basis = basis;
    model.window_lo = window_lo;
    model.window_hi = window_hi;
    model.n = data.n();

    const Eigen::MatrixXd xb = build_design(data, x_beta);
    const Eigen::MatrixXd xl = build_design(data, x_lambda);
    model.lambda_means.resize(x_lambda.size());
    for (std::size_t j = 0; j < x_lambda.size(); ++j) {
        model.lambda_means[j] = xl.col(static_cast<Eigen::Index>(j)).mean();
    }

    const Eigen::MatrixXd design = constructed_design(xb, xl, model.lambda_means, f_hat, basis);
    const auto& outcome = data.col(outcome_col);
    Eigen::VectorXd y(design.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = outcome[static_cast<std::size_t>(i)];

    const std::vector<std::string> names = block_names(x_beta, x_lambda, basis.size());
    const LeastSquares fit = lstsq(design, y, &names);

    const Eigen::Index pb = xb.cols(), pl = xl.cols(), pj = basis.size();
    model.beta = fit.coef.head(pb);
    model.lambda = fit.coef.segment(pb, pl);
    model.g_coeffs.assign(fit.coef.data() + pb + pl, fit.coef.data() + pb + pl + pj);
    model.rss = fit.rss;
    model.sigma2 = fit.rss / static_cast<double>(design.rows() - design.cols());

    // Means of the beta block, for conditional-mean evaluation at x-bar.
    model.x_beta_means.resize(x_beta.size());
    for (std::size_t j = 0; j < x_beta.size(); ++j) {
        model.x_beta_means[j] = xb.col(static_cast<Eigen::Index>(j)).mean();
    }
    return model;
}

double mte_eval(const SecondStageModel& model, double f, const std::vector<double>& x_lambda_at) {
    if (!(f >= model.window_lo && f <= model.window_hi)) {
        throw SupportError("mte_eval: F=" + std::to_string(f) + " outside support window [" +
                           std::to_string(model.window_lo) + ", " + std::to_string(model.window_hi) +
                           "]; the curve is not extrapolated");
    }
    if (x_lambda_at.size() != model.lambda_means.size())
        throw ConfigError("mte_eval: x_lambda_at size mismatch");
    double lam_term = 0.0;
    for (std::size_t j = 0; j < x_lambda_at.size(); ++j) {
        lam_term += (x_lambda_at[j] - model.lambda_means[j]) * model.lambda[static_cast<Eigen::Index>(j)];
    }
    return lam_term + model.basis.g(f, model.g_coeffs) + f * model.basis.g_prime(f, model.g_coeffs);
}

double mte_eval(const SecondStageModel& model, double f) {
    return mte_eval(model, f, model.lambda_means);
}

double conditional_mean_at_f(const SecondStageModel& model, double f) {
    double xb_term = 0.0;
    for (std::size_t j = 0; j < model.x_beta_means.size(); ++j) {
        xb_term += model.x_beta_means[j] * model.beta[static_cast<Eigen::Index>(j)];
    }
    // At the sample means the centered lambda block vanishes.
    return xb_term + model.basis.g(f, model.g_coeffs) * f;
}

MTECurve mte_curve(const SecondStageModel& model, int grid_points) {
    if (grid_points < 2) throw ConfigError("mte_curve: need at least 2 grid points");
    MTECurve curve;
    curve.window_lo = model.window_lo;
    curve.window_hi = model.window_hi;
    curve.f.resize(static_cast<std::size_t>(grid_points));
    curve.mte.resize(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
        const double f = model.window_lo +
                         (model.window_hi - model.window_lo) * k / (grid_points - 1);
        curve.f[static_cast<std::size_t>(k)] = f;
        curve.mte[static_cast<std::size_t>(k)] = mte_eval(model, f);
    }
    return curve;
}

HomogeneousIvFit homogeneous_iv_fit(const Dataset& data, const std::vector<double>& f_hat,
                                    const std::vector<Feature>& x_beta) {
    if (f_hat.size() != data.n()) throw SchemaError("homogeneous_iv_fit: F-hat length mismatch");
    const Eigen::MatrixXd xb = build_design(data, x_beta);
    Eigen::MatrixXd design(xb.rows(), xb.cols() + 1);
    design.leftCols(xb.cols()) = xb;
    for (Eigen::Index i = 0; i < design.rows(); ++i) {
        design(i, xb.cols()) = f_hat[static_cast<std::size_t>(i)];
    }
    std::vector<std::string> names = feature_names(x_beta);
    names.push_back("F");
    const auto& hours = data.col("hours");
    Eigen::VectorXd y(design.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] = hours[static_cast<std::size_t>(i)];
    const LeastSquares fit = lstsq(design, y, &names);

    const double sigma2 = fit.rss / static_cast<double>(design.rows() - design.cols());
    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(design.cols(), design.cols()));
    HomogeneousIvFit out;
    out.effect = fit.coef[xb.cols()];
    out.std_error = std::sqrt(sigma2 * xtx_inv(xb.cols(), xb.cols()));
    return out;
}

MTECurve mte_by_outcome(const Dataset& data, const std::vector<double>& f_hat,
                        const std::vector<Feature>& x_beta,
                        const std::vector<Feature>& x_lambda, const SplineBasis& basis,
                        HoursOutcome outcome, double window_lo, double window_hi,
                        int grid_points, double fulltime_hours) {
    if (data.n() == 0) throw FitError("mte_by_outcome: empty dataset");
    const auto& hours = data.col("hours");
    std::vector<double> indicator(data.n());
    std::size_t in_class = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        bool hit = false;
        switch (outcome) {
            case HoursOutcome::NonWork: hit = hours[i] == 0.0; break;
            case HoursOutcome::PartTime: hit = hours[i] > 0.0 && hours[i] < fulltime_hours; break;
            case HoursOutcome::FullTime: hit = hours[i] >= fulltime_hours; break;
        }
        indicator[i] = hit ? 1.0 : 0.0;
        in_class += hit;
    }
    Dataset with_ind = data;
    with_ind.set("hours", std::move(indicator));
    SecondStageModel model = second_stage_fit(with_ind, f_hat, x_beta, x_lambda, basis,
                                              window_lo, window_hi);
    MTECurve curve = mte_curve(model, grid_points);
    curve.degenerate_outcome = in_class == 0 || in_class == data.n();
    return curve;
}

}  // namespace mte
