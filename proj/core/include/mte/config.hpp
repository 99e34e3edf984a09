#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mte/counterfactual.hpp"
#include "mte/pipeline.hpp"
#include "mte/population.hpp"

namespace mte {

// Nested key-value configuration file:
//   [section] / [section.sub] headers, key = value lines, # or ; comments.
class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has_section(const std::string& section) const;
    bool has(const std::string& section, const std::string& key) const;

    std::string get_str(const std::string& section, const std::string& key,
                        const std::string& fallback) const;
    std::string require_str(const std::string& section, const std::string& key) const;
    double get_num(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

    const std::map<std::string, std::map<std::string, std::string>>& sections() const {
        return sections_;
    }

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

// Section readers.
PopulationSpec population_from_config(const Config& cfg);
EstimatorSpec estimator_from_config(const Config& cfg);
std::vector<ReformScenario> scenarios_from_config(const Config& cfg,
                                                  const std::string& base_dir);

// "LO:HI" -> pair, validated.
std::pair<double, double> parse_window(const std::string& text);

}  // namespace mte
