#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/dataset.hpp"
#include "mte/features.hpp"
#include "mte/spline.hpp"

namespace mte {

// Hours equation H = Xb*beta + [Xt*lambda + g(F)]*F + eps, fitted by least
// squares on constructed regressors (the model is linear in (beta, lambda, g)
// once F is given, so this is exact nonlinear least squares). The lambda
// covariates are mean-centered on the estimation sample so the g function
// carries the level.
struct SecondStageModel {
    std::vector<Feature> x_beta;    // intercept + exogenous covariates
    std::vector<Feature> x_lambda;  // interaction covariates, centered
    std::vector<double> lambda_means;  // centering means of the lambda block
    std::vector<double> x_beta_means;  // sample means of the beta block
    SplineBasis basis{std::vector<double>{0.25, 0.455, 0.66}};
    Eigen::VectorXd beta;
    Eigen::VectorXd lambda;
    std::vector<double> g_coeffs;  // spline coefficients g_1..g_J
    double sigma2 = 0.0;
    double rss = 0.0;
    std::size_t n = 0;
    double window_lo = 0.25, window_hi = 0.66;  // supported MTE range

    std::size_t parameter_count() const {
        return x_beta.size() + x_lambda.size() + g_coeffs.size();
    }
};

SecondStageModel second_stage_fit(const Dataset& data, const std::vector<double>& f_hat,
                                  const std::vector<Feature>& x_beta,
                                  const std::vector<Feature>& x_lambda,
                                  const SplineBasis& basis,
                                  double window_lo = 0.25, double window_hi = 0.66,
                                  const std::string& outcome_col = "hours");

// Marginal response dH/dF = Xt(x_at)*lambda + g(F) + F*g'(F). `x_lambda_at`
// holds the (uncentered) lambda-covariate values of the evaluation point; at
// the sample means the lambda term vanishes by centering. F outside the
// support window raises SupportError (no extrapolation).
double mte_eval(const SecondStageModel& model, double f,
                const std::vector<double>& x_lambda_at);
// Evaluation at the estimation-sample covariate means.
double mte_eval(const SecondStageModel& model, double f);

// Fitted conditional mean E[H | F, x at means]; used by derivative checks.
double conditional_mean_at_f(const SecondStageModel& model, double f);

struct MTECurve {
    std::vector<double> f;
    std::vector<double> mte;
    std::vector<double> lo95, hi95;  // empty without bootstrap bands
    double window_lo = 0.0, window_hi = 0.0;
    bool degenerate_outcome = false;  // outcome class was empty (mte_by_outcome)
};

// Point-estimate curve on an equally spaced grid inside the window.
MTECurve mte_curve(const SecondStageModel& model, int grid_points = 41);

// Homogeneous-effects (linear IV) fit: the g function restricted to a
// constant, regressors [X_beta | F]. `effect` is the weighted average of
// marginal effects that linear IV identifies.
struct HomogeneousIvFit {
    double effect = 0.0;
    double std_error = 0.0;  // homoskedastic OLS standard error
};

HomogeneousIvFit homogeneous_iv_fit(const Dataset& data, const std::vector<double>& f_hat,
                                    const std::vector<Feature>& x_beta);

enum class HoursOutcome { NonWork, PartTime, FullTime };

// Replaces hours with an outcome-class indicator (nonwork H = 0, part-time
// 0 < H < 35, full-time H >= 35) and reruns the second stage; the resulting
// curve is on the probability scale. An empty class yields a flat zero curve
// flagged as degenerate.
MTECurve mte_by_outcome(const Dataset& data, const std::vector<double>& f_hat,
                        const std::vector<Feature>& x_beta,
                        const std::vector<Feature>& x_lambda, const SplineBasis& basis,
                        HoursOutcome outcome, double window_lo = 0.25,
                        double window_hi = 0.66, int grid_points = 41,
                        double fulltime_hours = 35.0);

}  // namespace mte
