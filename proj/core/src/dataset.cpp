#include "mte/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "mte/common.hpp"

namespace mte {

namespace {

const std::vector<std::string> kRequired = {
    "hours", "participates", "log_wage", "nonlabor_income", "guarantee",
    "tax_t", "tax_r", "age", "black", "family_size", "kids_under6",
    "unemp_rate", "region1", "region2", "region3", "fs_guarantee", "cluster_id"};

const std::set<std::string> kOracle = {"oracle_delta", "oracle_dv", "oracle_phi"};

bool is_z_column(const std::string& name) {
    if (name.size() < 2 || name[0] != 'z') return false;
    return std::all_of(name.begin() + 1, name.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.15g", x);
    return buf;
}

}  // namespace

const std::vector<std::string>& Dataset::required_columns() { return kRequired; }

const std::vector<double>& Dataset::col(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw SchemaError("dataset: no column named '" + name + "'");
    return cols_[it->second];
}

std::vector<double>& Dataset::col(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw SchemaError("dataset: no column named '" + name + "'");
    return cols_[it->second];
}

void Dataset::set(const std::string& name, std::vector<double> values) {
    if (n_ == 0 && names_.empty()) {
        n_ = values.size();
    } else if (values.size() != n_) {
        throw SchemaError("dataset: column '" + name + "' has " + std::to_string(values.size()) +
                          " rows, expected " + std::to_string(n_));
    }
    auto it = index_.find(name);
    if (it != index_.end()) {
        cols_[it->second] = std::move(values);
        return;
    }
    index_.emplace(name, cols_.size());
    names_.push_back(name);
    cols_.push_back(std::move(values));
}

std::vector<int> Dataset::cluster_ids() const {
    const auto& c = col("cluster_id");
    std::vector<int> out(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) out[i] = static_cast<int>(std::llround(c[i]));
    return out;
}

std::vector<int> Dataset::distinct_clusters() const {
    std::vector<int> ids = cluster_ids();
    std::vector<int> out;
    std::set<int> seen;
    for (int id : ids) {
        if (seen.insert(id).second) out.push_back(id);
    }
    return out;
}

Dataset Dataset::take(const std::vector<std::size_t>& rows) const {
    Dataset out;
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        std::vector<double> v(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) v[i] = cols_[c][rows[i]];
        out.set(names_[c], std::move(v));
    }
    out.n_ = rows.size();
    return out;
}

std::vector<std::string> Dataset::instrument_columns() const {
    std::vector<std::string> out;
    for (int k = 1;; ++k) {
        const std::string name = "z" + std::to_string(k);
        if (!has(name)) break;
        out.push_back(name);
    }
    return out;
}

void Dataset::validate() const {
    if (n_ == 0) throw SchemaError("dataset: empty (n = 0)");
    for (const auto& name : kRequired) {
        if (!has(name)) throw SchemaError("dataset: missing required column '" + name + "'");
    }
    if (instrument_columns().empty()) throw SchemaError("dataset: needs at least one instrument column z1");
    for (std::size_t c = 0; c < cols_.size(); ++c) {
        const bool wage = names_[c] == "log_wage";
        for (std::size_t i = 0; i < n_; ++i) {
            const double x = cols_[c][i];
            if (!std::isfinite(x) && !(wage && std::isnan(x))) {
                throw SchemaError("dataset: non-finite value in column '" + names_[c] +
                                  "' at row " + std::to_string(i + 1));
            }
        }
    }
    const auto& p = col("participates");
    const auto& h = col("hours");
    for (std::size_t i = 0; i < n_; ++i) {
        if (p[i] != 0.0 && p[i] != 1.0) {
            throw SchemaError("dataset: participates must be 0/1, got " + fmt(p[i]) +
                              " at row " + std::to_string(i + 1));
        }
        if (h[i] < 0.0) {
            throw SchemaError("dataset: hours must be >= 0, got " + fmt(h[i]) +
                              " at row " + std::to_string(i + 1));
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

Dataset read_dataset_string(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw SchemaError(origin + ": empty file");
    const std::vector<std::string> header = split_csv_line(line);
    std::set<std::string> seen;
    for (const auto& name : header) {
        if (name.empty()) throw SchemaError(origin + ": empty header cell");
        if (!seen.insert(name).second) throw SchemaError(origin + ": duplicate header column '" + name + "'");
        const bool known = std::find(kRequired.begin(), kRequired.end(), name) != kRequired.end() ||
                           is_z_column(name) || kOracle.count(name) > 0;
        if (!known) throw SchemaError(origin + ": unknown column '" + name + "'");
    }
    std::vector<std::vector<double>> cols(header.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw SchemaError(origin + ": row " + std::to_string(row) + " has " +
                              std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(header.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& cell = cells[c];
            if (cell.empty()) {
                if (header[c] != "log_wage") {
                    throw SchemaError(origin + ": empty cell in column '" + header[c] +
                                      "' at row " + std::to_string(row) + " (only log_wage may be missing)");
                }
                cols[c].push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            char* end = nullptr;
            const double x = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw SchemaError(origin + ": non-numeric cell '" + cell + "' in column '" +
                                  header[c] + "' at row " + std::to_string(row));
            }
            cols[c].push_back(x);
        }
    }
    Dataset data;
    for (std::size_t c = 0; c < header.size(); ++c) data.set(header[c], std::move(cols[c]));
    data.validate();
    return data;
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open dataset file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return read_dataset_string(ss.str(), path);
}

std::string dataset_to_csv(const Dataset& data) {
    std::ostringstream out;
    const auto& names = data.names();
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (c) out << ',';
        out << names[c];
    }
    out << '\n';
    for (std::size_t i = 0; i < data.n(); ++i) {
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (c) out << ',';
            const double x = data.col(names[c])[i];
            if (!std::isnan(x)) out << fmt(x);
        }
        out << '\n';
    }
    return out.str();
}

void write_dataset(const Dataset& data, const std::string& path) {
    atomic_write_file(path, dataset_to_csv(data));
}

void atomic_write_file(const std::string& path, const std::string& contents) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out << contents;
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw Error("atomic rename failed for " + target.string() + ": " + ec.message());
    }
}

}  // namespace mte
