#include "mte/distributions.hpp"

#include <algorithm>
#include <cmath>

namespace mte {

MarginalSpec MarginalSpec::constant(double value) {
    MarginalSpec s;
    s.family = Family::Constant;
    s.a = value;
    return s;
}

MarginalSpec MarginalSpec::normal(double mean, double sd) {
    MarginalSpec s;
    s.family = Family::Normal;
    s.a = mean;
    s.b = sd;
    return s;
}

MarginalSpec MarginalSpec::lognormal(double meanlog, double sdlog) {
    MarginalSpec s;
    s.family = Family::Lognormal;
    s.a = meanlog;
    s.b = sdlog;
    return s;
}

MarginalSpec MarginalSpec::uniform(double low, double high) {
    MarginalSpec s;
    s.family = Family::Uniform;
    s.a = low;
    s.b = high;
    return s;
}

MarginalSpec MarginalSpec::twopoint(double a, double b, double p) {
    MarginalSpec s;
    s.family = Family::TwoPoint;
    s.a = a;
    s.b = b;
    s.p = p;
    return s;
}

MarginalSpec MarginalSpec::from_table(std::vector<std::pair<double, double>> knots) {
    MarginalSpec s;
    s.family = Family::Table;
    s.table = std::move(knots);
    return s;
}

void MarginalSpec::validate(const std::string& what) const {
    auto fail = [&](const std::string& msg) { throw ConfigError(what + ": " + msg); };
    switch (family) {
        case Family::Constant:
            if (!std::isfinite(a)) fail("constant value must be finite");
            break;
        case Family::Normal:
        case Family::Lognormal:
            if (!std::isfinite(a) || !std::isfinite(b)) fail("location/scale must be finite");
            if (b < 0.0) fail("scale must be >= 0");
            break;
        case Family::Uniform:
            if (!(b >= a)) fail("uniform needs high >= low");
            break;
        case Family::TwoPoint:
            if (!(p >= 0.0 && p <= 1.0)) fail("twopoint probability must be in [0,1]");
            break;
        case Family::Table: {
            if (table.size() < 2) fail("table needs at least two knots");
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (!std::isfinite(table[i].first) || !std::isfinite(table[i].second))
                    fail("table knots must be finite");
                if (i > 0 && !(table[i].first > table[i - 1].first))
                    fail("table u-coordinates must be strictly increasing");
            }
            if (table.front().first > 0.0 || table.back().first < 1.0)
                fail("table u-coordinates must cover [0,1]");
            break;
        }
    }
}

double MarginalSpec::transform(double z) const {
    switch (family) {
        case Family::Constant:
            return a;
        case Family::Normal:
            return a + b * z;
        case Family::Lognormal:
            return std::exp(a + b * z);
        case Family::Uniform:
            return a + (b - a) * norm_cdf(z);
        case Family::TwoPoint:
            return norm_cdf(z) < p ? a : b;
        case Family::Table: {
            const double u = norm_cdf(z);
            auto it = std::upper_bound(table.begin(), table.end(), u,
                                       [](double v, const std::pair<double, double>& k) { return v < k.first; });
            if (it == table.begin()) return table.front().second;
            if (it == table.end()) return table.back().second;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (u - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
    }
    return a;
}

CopulaSampler::CopulaSampler(std::vector<MarginalSpec> marginals, Eigen::MatrixXd correlation)
    : marginals_(std::move(marginals)) {
    const auto d = static_cast<Eigen::Index>(marginals_.size());
    if (correlation.rows() != d || correlation.cols() != d)
        throw ConfigError("copula: correlation matrix must be " + std::to_string(d) + "x" + std::to_string(d));
    if (!correlation.isApprox(correlation.transpose(), 1e-12))
        throw ConfigError("copula: correlation matrix must be symmetric");
    for (Eigen::Index i = 0; i < d; ++i) {
        if (std::abs(correlation(i, i) - 1.0) > 1e-12)
            throw ConfigError("copula: correlation diagonal must be 1");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(correlation);
    const Eigen::VectorXd& ev = eig.eigenvalues();
    if (ev.minCoeff() < -1e-8)
        throw ConfigError("copula: correlation matrix is not positive semi-definite");
    Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    factor_ = eig.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
}

Eigen::VectorXd CopulaSampler::draw(std::mt19937_64& engine) const {
    std::normal_distribution<double> snorm(0.0, 1.0);
    Eigen::VectorXd raw(factor_.cols());
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw[i] = snorm(engine);
    const Eigen::VectorXd z = factor_ * raw;
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = marginals_[static_cast<std::size_t>(i)].transform(z[i]);
    return out;
}

}  // namespace mte
