#include "mte/features.hpp"

#include <cmath>

#include "mte/common.hpp"

namespace mte {

Feature Feature::intercept() { return Feature{Kind::Intercept, "", "", 0.0}; }
Feature Feature::raw(std::string col) { return Feature{Kind::Raw, std::move(col), "", 0.0}; }
Feature Feature::log_of(std::string col) { return Feature{Kind::Log, std::move(col), "", 0.0}; }
Feature Feature::log_shift(std::string col, double shift) {
    return Feature{Kind::LogShift, std::move(col), "", shift};
}
Feature Feature::log_net_wage() { return Feature{Kind::LogNetWage, "", "", 0.0}; }
Feature Feature::product(std::string col, std::string other) {
    return Feature{Kind::Product, std::move(col), std::move(other), 0.0};
}

std::string Feature::name() const {
    switch (kind) {
        case Kind::Intercept: return "const";
        case Kind::Raw: return col;
        case Kind::Log: return "log(" + col + ")";
        case Kind::LogShift: {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", shift);
            return "log(" + col + "+" + buf + ")";
        }
        case Kind::LogNetWage: return "log(net_wage)";
        case Kind::Product: return col + "*" + other;
    }
    return "?";
}

std::vector<double> evaluate_feature(const Dataset& data, const Feature& f) {
    const std::size_t n = data.n();
    std::vector<double> out(n);
    switch (f.kind) {
        case Feature::Kind::Intercept:
            std::fill(out.begin(), out.end(), 1.0);
            break;
        case Feature::Kind::Raw: {
            out = data.col(f.col);
            break;
        }
        case Feature::Kind::Log: {
            const auto& c = data.col(f.col);
            for (std::size_t i = 0; i < n; ++i) {
                if (!(c[i] > 0.0))
                    throw DomainError("feature log(" + f.col + "): nonpositive entry at row " +
                                      std::to_string(i + 1));
                out[i] = std::log(c[i]);
            }
            break;
        }
        case Feature::Kind::LogShift: {
            const auto& c = data.col(f.col);
            for (std::size_t i = 0; i < n; ++i) {
                const double v = c[i] + f.shift;
                if (!(v > 0.0))
                    throw DomainError("feature " + f.name() + ": nonpositive entry at row " +
                                      std::to_string(i + 1));
                out[i] = std::log(v);
            }
            break;
        }
        case Feature::Kind::LogNetWage: {
            const auto& lw = data.col("log_wage");
            const auto& t = data.col("tax_t");
            for (std::size_t i = 0; i < n; ++i) {
                if (!(t[i] < 1.0))
                    throw DomainError("feature log(net_wage): tax_t >= 1 at row " +
                                      std::to_string(i + 1));
                if (std::isnan(lw[i]))
                    throw DomainError("feature log(net_wage): missing log_wage at row " +
                                      std::to_string(i + 1) + " (impute wages first)");
                out[i] = lw[i] + std::log1p(-t[i]);
            }
            break;
        }
        case Feature::Kind::Product: {
            const auto& a = data.col(f.col);
            const auto& b = data.col(f.other);
            for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
            break;
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(out[i]))
            throw DomainError("feature " + f.name() + ": non-finite value at row " +
                              std::to_string(i + 1));
    }
    return out;
}

Eigen::MatrixXd build_design(const Dataset& data, const std::vector<Feature>& features) {
    Eigen::MatrixXd X(data.n(), features.size());
    for (std::size_t j = 0; j < features.size(); ++j) {
        const std::vector<double> col = evaluate_feature(data, features[j]);
        for (std::size_t i = 0; i < col.size(); ++i) X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    return X;
}

std::vector<std::string> feature_names(const std::vector<Feature>& features) {
    std::vector<std::string> out;
    out.reserve(features.size());
    for (const auto& f : features) out.push_back(f.name());
    return out;
}

std::vector<Feature> prune_features(const Dataset& data, std::vector<Feature> features,
                                    std::vector<std::string>* dropped) {
    // Pass 1: constants. One intercept survives; constant non-intercepts go.
    std::vector<Feature> keep;
    bool have_intercept = false;
    for (auto& f : features) {
        const std::vector<double> col = evaluate_feature(data, f);
        const bool is_constant = std::all_of(col.begin(), col.end(),
                                             [&](double v) { return v == col.front(); });
        if (is_constant) {
            if (f.kind == Feature::Kind::Intercept && !have_intercept) {
                have_intercept = true;
                keep.push_back(std::move(f));
            } else if (dropped) {
                dropped->push_back(f.name());
            }
            continue;
        }
        keep.push_back(std::move(f));
    }
    // Pass 2: exact collinearity, resolved left to right so earlier columns
    // always win (the intercept comes first). Modified Gram-Schmidt with a
    // reorthogonalization pass.
    if (keep.size() > 1 && data.n() >= 2) {
        const Eigen::MatrixXd X = build_design(data, keep);
        Eigen::MatrixXd basis(X.rows(), X.cols());
        Eigen::Index rank = 0;
        std::vector<Feature> independent;
        for (std::size_t j = 0; j < keep.size(); ++j) {
            Eigen::VectorXd v = X.col(static_cast<Eigen::Index>(j));
            const double norm0 = v.norm();
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index k = 0; k < rank; ++k) v -= basis.col(k).dot(v) * basis.col(k);
            }
            if (v.norm() > 1e-10 * std::max(norm0, 1.0)) {
                basis.col(rank++) = v / v.norm();
                independent.push_back(keep[j]);
            } else if (dropped) {
                dropped->push_back(keep[j].name());
            }
        }
        keep = std::move(independent);
    }
    return keep;
}

}  // namespace mte
