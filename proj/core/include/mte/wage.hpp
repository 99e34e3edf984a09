#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/dataset.hpp"
#include "mte/features.hpp"

namespace mte {

enum class WageMode { Ols, SelectionAdjusted };

// Log-wage regression fitted on workers (rows with an observed log_wage).
// SelectionAdjusted estimates an employment probit on the full covariate set
// first and adds the inverse Mills ratio to the wage regression; imputation
// always uses the structural part X*gamma.
struct WageModel {
    std::vector<Feature> features;   // wage-equation regressors (incl. intercept)
    Eigen::VectorXd gamma;           // coefficients on features
    double mills_coefficient = 0.0;  // selection-correction loading (adjusted mode)
    WageMode mode = WageMode::Ols;
    bool selection_fallback = false;  // employment probit failed, fell back to OLS
    double sigma2 = 0.0;
    std::size_t workers_used = 0;
};

WageModel wage_fit(const Dataset& data, WageMode mode,
                   const std::vector<Feature>& wage_features,
                   const std::vector<Feature>& selection_features);

// Fills missing log_wage cells with X*gamma; observed wages are untouched.
Dataset impute_wages(const Dataset& data, const WageModel& model);

}  // namespace mte
