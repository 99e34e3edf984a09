#pragma once

#include <string>
#include <vector>

#include "mte/dataset.hpp"

namespace mte {

enum class IndexWeighting { InverseVariance, Simple };

struct InstrumentIndex {
    std::vector<std::string> columns;
    std::vector<double> weights;  // on the logged columns, sum to 1
    std::vector<double> values;   // per-row weighted average of logs
};

// Weighted average of the logged barrier columns. Inverse-variance weights
// are proportional to 1/var(log column); with cluster ids supplied, variances
// are taken across cluster means (the barriers are cluster-level measures).
InstrumentIndex instrument_index(const Dataset& data, const std::vector<std::string>& columns,
                                 IndexWeighting weighting, bool cluster_level = true);

// Applies previously computed weights to (possibly different) rows, e.g. a
// falsification sample scored with the estimation sample's weights.
std::vector<double> apply_index_weights(const Dataset& data,
                                        const std::vector<std::string>& columns,
                                        const std::vector<double>& weights);

}  // namespace mte
