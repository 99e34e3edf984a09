#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace mte {

// Rectangular micro data shared by the simulator and the estimator.
//
// Required columns (CSV order):
//   hours, participates, log_wage, nonlabor_income, guarantee, tax_t, tax_r,
//   age, black, family_size, kids_under6, unemp_rate, region1, region2,
//   region3, fs_guarantee, z1[, z2, ...], cluster_id
//
// log_wage may be missing (empty cell -> NaN). Optional oracle columns
// (oracle_delta, oracle_dv, oracle_phi) hold simulator ground truth and are
// ignored by the estimator.
class Dataset {
public:
    Dataset() = default;

    std::size_t n() const { return n_; }
    const std::vector<std::string>& names() const { return names_; }

    bool has(const std::string& name) const { return index_.count(name) > 0; }
    const std::vector<double>& col(const std::string& name) const;
    std::vector<double>& col(const std::string& name);

    // Adds a column (or replaces an existing one of the same name).
    void set(const std::string& name, std::vector<double> values);

    std::vector<int> cluster_ids() const;
    // Distinct cluster ids in first-appearance order.
    std::vector<int> distinct_clusters() const;

    // Row subset, preserving column order. `rows` may repeat indices.
    Dataset take(const std::vector<std::size_t>& rows) const;

    // Names of the instrument columns (z1, z2, ... in order).
    std::vector<std::string> instrument_columns() const;

    // Throws SchemaError when required columns are absent or malformed.
    void validate() const;

    static const std::vector<std::string>& required_columns();

private:
    std::size_t n_ = 0;
    std::vector<std::string> names_;
    std::vector<std::vector<double>> cols_;
    std::unordered_map<std::string, std::size_t> index_;
};

// CSV I/O for the schema above. Parse errors report row/column locations.
Dataset read_dataset(const std::string& path);
Dataset read_dataset_string(const std::string& text, const std::string& origin = "<string>");
// Serializes with 12 significant digits; missing values as empty cells.
std::string dataset_to_csv(const Dataset& data);
void write_dataset(const Dataset& data, const std::string& path);

// Atomic text-file write: temp file in the target directory + rename.
void atomic_write_file(const std::string& path, const std::string& contents);

}  // namespace mte
