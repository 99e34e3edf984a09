#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mte/bootstrap.hpp"
#include "mte/pipeline.hpp"

namespace mte {

// A reform scenario: program-parameter overrides plus either a replacement
// covariate sample or mean shifts applied to the base sample, and the target
// participation rate at which the marginal response is evaluated.
struct ReformScenario {
    std::string label;
    std::optional<double> guarantee;  // scenario G
    std::optional<double> tax_t;      // scenario t
    // Mean overrides: each named covariate column is shifted so its sample
    // mean equals the given value.
    std::map<std::string, double> covariate_means;
    // Replacement micro sample (preferred when available).
    std::optional<Dataset> sample;
    double p_target = 0.0;
};

// Participation-rate decomposition. All stored rates are snapped to a 2^-32
// grid so the components add back to the stored target bit-exactly.
struct ParticipationDecomposition {
    std::string label;
    double base = 0.0;          // mean F-hat on the base sample
    double d_demographics = 0.0;  // scenario covariates, base program parameters
    double d_program = 0.0;       // scenario (G, t) on top
    double d_residual = 0.0;      // remainder to the target
    double p_target = 0.0;

    double sum() const { return base + d_demographics + d_program + d_residual; }
};

// Sequential attribution: demographics first (scenario covariates at base
// program parameters), then the program-parameter shift, with the residual
// closing the identity to the target.
ParticipationDecomposition participation_decomposition(const EstimationResult& fitted,
                                                       const Dataset& base,
                                                       const ReformScenario& scenario);

struct ReformEffect {
    std::string label;
    double p_target = 0.0;
    double mte = 0.0;
    std::optional<double> lo95, hi95;  // from bootstrap replicate models
};

// Marginal response at the scenario participation rate, evaluated at the
// scenario covariate means; bands re-evaluate every bootstrap replicate model
// at the same point. Targets outside the support window raise SupportError.
ReformEffect mte_at_reform(const EstimationResult& fitted, const Dataset& base,
                           const ReformScenario& scenario,
                           const BootstrapResult* boot = nullptr);

// Applies scenario overrides to rows (replacement sample or shifted base).
Dataset scenario_rows(const EstimationResult& fitted, const Dataset& base,
                      const ReformScenario& scenario, bool apply_program);

}  // namespace mte
