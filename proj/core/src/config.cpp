#include "mte/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mte {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_number(const std::string& text, const std::string& where) {
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0')
        throw ConfigError("config: non-numeric value '" + text + "' for " + where);
    return v;
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section = "";
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            cfg.sections_[section];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.sections_[section][key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

bool Config::has_section(const std::string& section) const { return sections_.count(section) > 0; }

bool Config::has(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    return it != sections_.end() && it->second.count(key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return fallback;
    auto kit = it->second.find(key);
    return kit == it->second.end() ? fallback : kit->second;
}

std::string Config::require_str(const std::string& section, const std::string& key) const {
    if (!has(section, key))
        throw ConfigError("config: missing required key [" + section + "] " + key);
    return sections_.at(section).at(key);
}

double Config::get_num(const std::string& section, const std::string& key, double fallback) const {
    if (!has(section, key)) return fallback;
    return parse_number(sections_.at(section).at(key), "[" + section + "] " + key);
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
    return static_cast<int>(get_num(section, key, fallback));
}

std::vector<std::string> Config::get_list(const std::string& section, const std::string& key) const {
    std::vector<std::string> out;
    const std::string raw = get_str(section, key, "");
    std::string cur;
    for (char c : raw + ",") {
        if (c == ',') {
            const std::string item = trim(cur);
            if (!item.empty()) out.push_back(item);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    return out;
}

namespace {

MarginalSpec marginal_from_section(const Config& cfg, const std::string& section,
                                   const MarginalSpec& fallback) {
    if (!cfg.has_section(section)) return fallback;
    const std::string family = cfg.get_str(section, "family", "constant");
    if (family == "constant") {
        return MarginalSpec::constant(cfg.get_num(section, "value", 0.0));
    }
    if (family == "normal") {
        return MarginalSpec::normal(cfg.get_num(section, "mean", 0.0), cfg.get_num(section, "sd", 1.0));
    }
    if (family == "lognormal") {
        return MarginalSpec::lognormal(cfg.get_num(section, "meanlog", 0.0),
                                       cfg.get_num(section, "sdlog", 1.0));
    }
    if (family == "uniform") {
        return MarginalSpec::uniform(cfg.get_num(section, "low", 0.0), cfg.get_num(section, "high", 1.0));
    }
    if (family == "twopoint") {
        return MarginalSpec::twopoint(cfg.get_num(section, "a", 0.0), cfg.get_num(section, "b", 1.0),
                                      cfg.get_num(section, "p", 0.5));
    }
    if (family == "table") {
        std::vector<std::pair<double, double>> knots;
        for (const std::string& item : cfg.get_list(section, "points")) {
            const std::size_t colon = item.find(':');
            if (colon == std::string::npos)
                throw ConfigError("config: [" + section + "] points entries must be u:value");
            knots.emplace_back(parse_number(item.substr(0, colon), section),
                               parse_number(item.substr(colon + 1), section));
        }
        return MarginalSpec::from_table(std::move(knots));
    }
    throw ConfigError("config: [" + section + "] unknown family '" + family + "'");
}

void read_range(const Config& cfg, const std::string& section, const std::string& name,
                double& lo, double& hi) {
    if (cfg.has(section, name)) {
        lo = hi = cfg.get_num(section, name, lo);
    }
    lo = cfg.get_num(section, name + "_low", lo);
    hi = cfg.get_num(section, name + "_high", hi);
}

}  // namespace

PopulationSpec population_from_config(const Config& cfg) {
    PopulationSpec spec;
    const std::string P = "population";
    spec.states = cfg.get_int(P, "states", spec.states);
    spec.agents_per_state = cfg.get_int(P, "agents_per_state", spec.agents_per_state);
    spec.hours_cap = cfg.get_num(P, "hours_cap", spec.hours_cap);
    spec.seed = static_cast<std::uint64_t>(cfg.get_num(P, "seed", 1.0));
    spec.kappa0 = cfg.get_num(P, "kappa0", 0.0);
    spec.kappa1 = cfg.get_num(P, "kappa1", 0.0);

    spec.theta1 = marginal_from_section(cfg, P + ".theta1", spec.theta1);
    spec.theta2 = marginal_from_section(cfg, P + ".theta2", spec.theta2);
    spec.theta3 = marginal_from_section(cfg, P + ".theta3", spec.theta3);
    spec.nu = marginal_from_section(cfg, P + ".nu", spec.nu);

    if (cfg.has_section(P + ".correlation")) {
        const std::map<std::string, int> dim = {{"theta1", 0}, {"theta2", 1}, {"theta3", 2}, {"nu", 3}};
        for (const auto& [key, value] : cfg.sections().at(P + ".correlation")) {
            const std::size_t us = key.find('_');
            if (us == std::string::npos || dim.count(key.substr(0, us)) == 0 ||
                dim.count(key.substr(us + 1)) == 0) {
                throw ConfigError("config: [population.correlation] keys look like theta1_nu");
            }
            const int i = dim.at(key.substr(0, us));
            const int j = dim.at(key.substr(us + 1));
            const double rho = parse_number(value, "correlation " + key);
            spec.correlation(i, j) = rho;
            spec.correlation(j, i) = rho;
        }
    }

    const std::string I = P + ".instrument";
    spec.instrument.meanlog = cfg.get_num(I, "meanlog", spec.instrument.meanlog);
    spec.instrument.sdlog = cfg.get_num(I, "sdlog", spec.instrument.sdlog);
    spec.instrument.measures = cfg.get_int(I, "measures", spec.instrument.measures);
    spec.instrument.measure_sd = cfg.get_num(I, "measure_sd", spec.instrument.measure_sd);

    const std::string PR = P + ".program";
    read_range(cfg, PR, "g", spec.program.g_low, spec.program.g_high);
    read_range(cfg, PR, "t", spec.program.t_low, spec.program.t_high);
    read_range(cfg, PR, "r", spec.program.r_low, spec.program.r_high);

    const std::string W = P + ".wage";
    spec.wage.intercept = cfg.get_num(W, "intercept", spec.wage.intercept);
    spec.wage.age_coef = cfg.get_num(W, "age", spec.wage.age_coef);
    spec.wage.black_coef = cfg.get_num(W, "black", spec.wage.black_coef);
    spec.wage.famsize_coef = cfg.get_num(W, "family_size", spec.wage.famsize_coef);
    spec.wage.sd = cfg.get_num(W, "sd", spec.wage.sd);

    const std::string N = P + ".nonlabor";
    spec.nonlabor.p_zero = cfg.get_num(N, "p_zero", spec.nonlabor.p_zero);
    spec.nonlabor.meanlog = cfg.get_num(N, "meanlog", spec.nonlabor.meanlog);
    spec.nonlabor.sdlog = cfg.get_num(N, "sdlog", spec.nonlabor.sdlog);

    const std::string C = P + ".covariates";
    spec.covariates.age_low = cfg.get_num(C, "age_low", spec.covariates.age_low);
    spec.covariates.age_high = cfg.get_num(C, "age_high", spec.covariates.age_high);
    spec.covariates.black_p = cfg.get_num(C, "black_p", spec.covariates.black_p);
    spec.covariates.family_size_max = cfg.get_int(C, "family_size_max", spec.covariates.family_size_max);
    spec.covariates.kids_p = cfg.get_num(C, "kids_p", spec.covariates.kids_p);
    spec.covariates.unemp_low = cfg.get_num(C, "unemp_low", spec.covariates.unemp_low);
    spec.covariates.unemp_high = cfg.get_num(C, "unemp_high", spec.covariates.unemp_high);
    spec.covariates.fs_base = cfg.get_num(C, "fs_base", spec.covariates.fs_base);
    spec.covariates.fs_per_member = cfg.get_num(C, "fs_per_member", spec.covariates.fs_per_member);

    spec.validate();
    return spec;
}

std::pair<double, double> parse_window(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("window must look like LO:HI, got '" + text + "'");
    const double lo = parse_number(text.substr(0, colon), "window");
    const double hi = parse_number(text.substr(colon + 1), "window");
    if (!(lo > 0.0 && hi < 1.0 && hi > lo)) throw ConfigError("window must satisfy 0 < lo < hi < 1");
    return {lo, hi};
}

EstimatorSpec estimator_from_config(const Config& cfg) {
    EstimatorSpec spec;
    const std::string E = "estimate";
    spec.knots = cfg.get_int(E, "knots", spec.knots);
    if (cfg.has(E, "window")) {
        std::tie(spec.window_lo, spec.window_hi) = parse_window(cfg.require_str(E, "window"));
    }
    spec.instrument_cols = cfg.get_list(E, "instruments");
    const std::string weighting = cfg.get_str(E, "weighting", "invvar");
    if (weighting == "invvar") {
        spec.weighting = IndexWeighting::InverseVariance;
    } else if (weighting == "simple") {
        spec.weighting = IndexWeighting::Simple;
    } else {
        throw ConfigError("config: [estimate] weighting must be invvar or simple");
    }
    if (cfg.has(E, "interactions")) {
        spec.interactions.clear();
        for (const std::string& item : cfg.get_list(E, "interactions")) {
            if (item == "none") continue;
            if (item == "N") spec.interactions.push_back(IndexInteraction::NonlaborIncome);
            else if (item == "G") spec.interactions.push_back(IndexInteraction::Guarantee);
            else if (item == "WNET") spec.interactions.push_back(IndexInteraction::NetWage);
            else throw ConfigError("config: [estimate] interactions entries are N, G, WNET or none");
        }
    }
    const std::string wage_mode = cfg.get_str(E, "wage_mode", "ols");
    if (wage_mode == "ols") {
        spec.wage_mode = WageMode::Ols;
    } else if (wage_mode == "heckman") {
        spec.wage_mode = WageMode::SelectionAdjusted;
    } else {
        throw ConfigError("config: [estimate] wage_mode must be ols or heckman");
    }
    spec.grid_points = cfg.get_int(E, "grid_points", spec.grid_points);
    spec.extra_lambda_cols = cfg.get_list(E, "lambda_extra");
    spec.validate();
    return spec;
}

std::vector<ReformScenario> scenarios_from_config(const Config& cfg, const std::string& base_dir) {
    std::vector<ReformScenario> out;
    for (const std::string& label : cfg.get_list("counterfactual", "scenarios")) {
        const std::string S = "scenario." + label;
        if (!cfg.has_section(S))
            throw ConfigError("config: scenario '" + label + "' listed but section [" + S + "] missing");
        ReformScenario sc;
        sc.label = label;
        sc.p_target = cfg.get_num(S, "p_target", -1.0);
        if (!(sc.p_target > 0.0 && sc.p_target < 1.0))
            throw ConfigError("config: [" + S + "] needs p_target in (0,1)");
        if (cfg.has(S, "guarantee")) sc.guarantee = cfg.get_num(S, "guarantee", 0.0);
        if (cfg.has(S, "tax_t")) sc.tax_t = cfg.get_num(S, "tax_t", 0.0);
        for (const auto& [key, value] : cfg.sections().at(S)) {
            if (key.rfind("mean.", 0) == 0) {
                sc.covariate_means[key.substr(5)] = parse_number(value, S + " " + key);
            }
        }
        if (cfg.has(S, "sample")) {
            namespace fs = std::filesystem;
            fs::path p = cfg.require_str(S, "sample");
            if (p.is_relative() && !base_dir.empty()) p = fs::path(base_dir) / p;
            sc.sample = read_dataset(p.string());
        }
        out.push_back(std::move(sc));
    }
    return out;
}

}  // namespace mte
