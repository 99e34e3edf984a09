#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mte/dataset.hpp"

namespace mte {

// Column transform applied when building a design matrix. Models store their
// feature lists so fitted coefficients can be re-applied to new rows
// (bootstrap replicates, falsification samples, reform scenarios).
struct Feature {
    enum class Kind {
        Intercept,   // 1
        Raw,         // col
        Log,         // log(col), col > 0 required
        LogShift,    // log(col + shift)
        LogNetWage,  // log_wage + log(1 - tax_t)
        Product,     // col * other (both raw)
    };

    Kind kind = Kind::Raw;
    std::string col;    // primary column
    std::string other;  // second column for Product
    double shift = 0.0; // LogShift offset

    std::string name() const;

    static Feature intercept();
    static Feature raw(std::string col);
    static Feature log_of(std::string col);
    static Feature log_shift(std::string col, double shift);
    static Feature log_net_wage();
    static Feature product(std::string col, std::string other);
};

// Evaluates one feature over all rows. Domain violations name the column.
std::vector<double> evaluate_feature(const Dataset& data, const Feature& f);

Eigen::MatrixXd build_design(const Dataset& data, const std::vector<Feature>& features);

std::vector<std::string> feature_names(const std::vector<Feature>& features);

// Drops constant columns (keeping one intercept) and, via pivoted QR, later
// columns that are exact linear combinations of earlier ones. Returns the
// surviving features; `dropped` collects the names that were removed.
std::vector<Feature> prune_features(const Dataset& data, std::vector<Feature> features,
                                    std::vector<std::string>* dropped);

}  // namespace mte
