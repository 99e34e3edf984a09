#include "mte/spline.hpp"

#include <cmath>

namespace mte {

SplineBasis::SplineBasis(std::vector<double> knots) : knots_(std::move(knots)) {
    if (knots_.size() < 3)
        throw ConfigError("spline: need at least 3 knots, got " + std::to_string(knots_.size()));
    if (knots_.size() > 8)
        throw ConfigError("spline: at most 8 knots supported, got " + std::to_string(knots_.size()));
    for (std::size_t j = 0; j < knots_.size(); ++j) {
        if (!(knots_[j] > 0.0 && knots_[j] < 1.0))
            throw ConfigError("spline: knots must lie strictly inside (0,1)");
        if (j > 0 && !(knots_[j] > knots_[j - 1]))
            throw ConfigError("spline: knots must be strictly increasing");
    }
}

SplineBasis SplineBasis::equally_spaced(int knot_count, double lo, double hi) {
    if (knot_count < 3) throw ConfigError("spline: need at least 3 knots");
    if (!(lo > 0.0 && hi < 1.0 && hi > lo)) throw ConfigError("spline: window must satisfy 0 < lo < hi < 1");
    std::vector<double> knots(static_cast<std::size_t>(knot_count));
    for (int j = 0; j < knot_count; ++j) {
        knots[static_cast<std::size_t>(j)] = lo + (hi - lo) * j / (knot_count - 1);
    }
    return SplineBasis(std::move(knots));
}

namespace {

inline double cube_plus(double x) { return x > 0.0 ? x * x * x : 0.0; }
inline double sq_plus(double x) { return x > 0.0 ? x * x : 0.0; }

}  // namespace

void SplineBasis::evaluate(double f, std::vector<double>& values, std::vector<double>& derivs) const {
    const int j_count = size();
    values.assign(static_cast<std::size_t>(j_count), 0.0);
    derivs.assign(static_cast<std::size_t>(j_count), 0.0);
    values[0] = 1.0;
    derivs[0] = 0.0;
    values[1] = f;
    derivs[1] = 1.0;

    const double last = knots_.back();
    const double c_last = cube_plus(f - last);
    const double s_last = 3.0 * sq_plus(f - last);
    auto d_k = [&](int k) {  // k in [0, J-2]
        const double denom = last - knots_[static_cast<std::size_t>(k)];
        return (cube_plus(f - knots_[static_cast<std::size_t>(k)]) - c_last) / denom;
    };
    auto d_k_prime = [&](int k) {
        const double denom = last - knots_[static_cast<std::size_t>(k)];
        return (3.0 * sq_plus(f - knots_[static_cast<std::size_t>(k)]) - s_last) / denom;
    };
    const double d_ref = d_k(j_count - 2);
    const double d_ref_prime = d_k_prime(j_count - 2);
    for (int k = 0; k + 2 < j_count; ++k) {
        values[static_cast<std::size_t>(k + 2)] = d_k(k) - d_ref;
        derivs[static_cast<std::size_t>(k + 2)] = d_k_prime(k) - d_ref_prime;
    }
}

double SplineBasis::g(double f, const std::vector<double>& coeffs) const {
    if (coeffs.size() != static_cast<std::size_t>(size()))
        throw ConfigError("spline: coefficient count mismatch");
    std::vector<double> v, d;
    evaluate(f, v, d);
    double out = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) out += coeffs[j] * v[j];
    return out;
}

double SplineBasis::g_prime(double f, const std::vector<double>& coeffs) const {
    if (coeffs.size() != static_cast<std::size_t>(size()))
        throw ConfigError("spline: coefficient count mismatch");
    std::vector<double> v, d;
    evaluate(f, v, d);
    double out = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) out += coeffs[j] * d[j];
    return out;
}

}  // namespace mte
