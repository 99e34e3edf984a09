#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mte/dataset.hpp"
#include "mte/instrument.hpp"
#include "mte/probit.hpp"
#include "mte/second_stage.hpp"
#include "mte/wage.hpp"

namespace mte {

// Which budget-constraint variables interact with the barrier index in the
// first stage (the preferred specification interacts N, G, and W(1-t)).
enum class IndexInteraction { NonlaborIncome, Guarantee, NetWage };

// Everything needed to run the two-stage estimation on a Dataset. Defaults
// mirror the preferred specification: inverse-variance barrier index with
// three budget-constraint interactions, 5-knot natural spline, support
// window (0.25, 0.66), OLS wage imputation.
struct EstimatorSpec {
    std::vector<std::string> instrument_cols;  // empty -> all z columns
    IndexWeighting weighting = IndexWeighting::InverseVariance;
    std::vector<IndexInteraction> interactions = {
        IndexInteraction::NonlaborIncome, IndexInteraction::Guarantee,
        IndexInteraction::NetWage};
    int knots = 5;
    double window_lo = 0.25;
    double window_hi = 0.66;
    WageMode wage_mode = WageMode::Ols;
    int grid_points = 41;
    // Extra lambda-block covariates beyond the budget variables (e.g. age,
    // black). The unearned-income tax r never enters by default.
    std::vector<std::string> extra_lambda_cols;

    void validate() const;
};

// Default regressor sets. Columns that are constant in the sample (or exactly
// collinear) are pruned with a record, so degenerate simulated worlds and
// zero-program samples still estimate.
std::vector<Feature> default_first_stage_x();
std::vector<Feature> default_x_beta();
std::vector<Feature> default_x_lambda(const EstimatorSpec& spec);
std::vector<Feature> default_wage_features();
std::vector<Feature> default_selection_features();

struct EstimationResult {
    std::optional<WageModel> wage;
    InstrumentIndex index;
    FirstStageModel first_stage;
    SecondStageModel second_stage;
    std::vector<double> f_hat;
    MTECurve curve;
    std::vector<std::string> dropped_columns;
    Dataset imputed;  // estimation sample after wage imputation + z_index column
};

// wage fit -> impute -> barrier index -> probit -> predict -> second stage.
EstimationResult run_estimation(const Dataset& data, const EstimatorSpec& spec);

// First-stage portion only (through F-hat); used by diagnostics.
EstimationResult run_first_stage(const Dataset& data, const EstimatorSpec& spec);

// Prepares out-of-sample rows for scoring with a fitted result: imputes
// missing wages with the fitted wage model, rebuilds the barrier index with
// the estimation sample's weights, and materializes the interaction columns.
Dataset prepare_for_prediction(const Dataset& rows, const EstimationResult& fitted);

}  // namespace mte
