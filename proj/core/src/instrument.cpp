#include "mte/instrument.hpp"

#include <cmath>
#include <map>

#include "mte/common.hpp"

namespace mte {

namespace {

std::vector<double> logged_column(const Dataset& data, const std::string& name) {
    const auto& c = data.col(name);
    std::vector<double> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (!(c[i] > 0.0)) {
            throw DomainError("instrument_index: column '" + name + "' has nonpositive entry at row " +
                              std::to_string(i + 1));
        }
        out[i] = std::log(c[i]);
    }
    return out;
}

}  // namespace

InstrumentIndex instrument_index(const Dataset& data, const std::vector<std::string>& columns,
                                 IndexWeighting weighting, bool cluster_level) {
    if (columns.empty()) throw ConfigError("instrument_index: need at least one barrier column");

    std::vector<std::vector<double>> logs;
    logs.reserve(columns.size());
    for (const auto& name : columns) logs.push_back(logged_column(data, name));

    std::vector<double> weights(columns.size(), 1.0 / static_cast<double>(columns.size()));
    if (weighting == IndexWeighting::InverseVariance && columns.size() > 1) {
        std::vector<double> inv(columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) {
            double var;
            if (cluster_level && data.has("cluster_id")) {
                // One value per cluster: the barrier is a cluster-level
                // measure, so row-level variance would just reweight by
                // cluster sizes.
                std::map<int, std::pair<double, int>> acc;
                const std::vector<int> ids = data.cluster_ids();
                for (std::size_t i = 0; i < ids.size(); ++i) {
                    auto& a = acc[ids[i]];
                    a.first += logs[j][i];
                    a.second += 1;
                }
                std::vector<double> means;
                means.reserve(acc.size());
                for (const auto& [id, a] : acc) means.push_back(a.first / a.second);
                var = sample_variance(means);
            } else {
                var = sample_variance(logs[j]);
            }
            if (!(var > 0.0)) {
                throw DomainError("instrument_index: column '" + columns[j] +
                                  "' has zero variance; cannot inverse-variance weight");
            }
            inv[j] = 1.0 / var;
        }
        double total = 0.0;
        for (double w : inv) total += w;
        for (std::size_t j = 0; j < inv.size(); ++j) weights[j] = inv[j] / total;
    }

    InstrumentIndex idx;
    idx.columns = columns;
    idx.weights = weights;
    idx.values.assign(data.n(), 0.0);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        for (std::size_t i = 0; i < data.n(); ++i) idx.values[i] += weights[j] * logs[j][i];
    }
    return idx;
}

std::vector<double> apply_index_weights(const Dataset& data,
                                        const std::vector<std::string>& columns,
                                        const std::vector<double>& weights) {
    if (columns.size() != weights.size())
        throw ConfigError("apply_index_weights: columns/weights size mismatch");
    std::vector<double> out(data.n(), 0.0);
    for (std::size_t j = 0; j < columns.size(); ++j) {
        const std::vector<double> lg = logged_column(data, columns[j]);
        for (std::size_t i = 0; i < data.n(); ++i) out[i] += weights[j] * lg[i];
    }
    return out;
}

}  // namespace mte
