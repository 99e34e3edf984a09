#include "mte/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

namespace mte {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

double norm_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double log_norm_cdf(double x) {
    if (x > -36.0) {
        return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    }
    // Asymptotic expansion: Phi(x) ~ phi(x)/(-x) * (1 - 1/x^2 + 3/x^4).
    const double x2 = x * x;
    return -0.5 * x2 - std::log(-x) - 0.5 * std::log(2.0 * M_PI)
           + std::log1p(-1.0 / x2 + 3.0 / (x2 * x2));
}

double inv_mills(double x) {
    if (x < -30.0) {
        // lambda(x) ~ -x - 1/x + O(1/x^3)
        return -x - 1.0 / x;
    }
    return norm_pdf(x) / norm_cdf(x);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    // splitmix64 over the concatenated key
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1) + 0xbf58476d1ce4e5b9ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return std::mt19937_64(mix_seed(seed, stream, index));
}

int env_worker_count() {
    if (const char* env = std::getenv("MTE_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers) {
    if (workers <= 0) workers = env_worker_count();
    if (workers == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
    std::vector<std::thread> pool;
    pool.reserve(w);
    std::exception_ptr first_error = nullptr;
    std::mutex err_mutex;
    std::atomic<std::size_t> next{0};
    for (std::size_t t = 0; t < w; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(n - 1);
}

double quantile(std::vector<double> v, double p) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    if (p <= 0.0) return v.front();
    if (p >= 1.0) return v.back();
    const double h = p * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= v.size()) return v.back();
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

std::vector<double> find_roots(const std::function<double(double)>& f,
                               double lo, double hi, int scan, double xtol) {
    std::vector<double> roots;
    if (!(hi > lo) || scan < 1) return roots;
    double x0 = lo;
    double f0 = f(x0);
    const double step = (hi - lo) / scan;
    for (int i = 1; i <= scan; ++i) {
        const double x1 = (i == scan) ? hi : lo + i * step;
        const double f1 = f(x1);
        if (f0 == 0.0) {
            roots.push_back(x0);
        } else if (f0 * f1 < 0.0) {
            double a = x0, b = x1, fa = f0;
            while (b - a > xtol) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fm == 0.0) { a = b = m; break; }
                if (fa * fm < 0.0) { b = m; } else { a = m; fa = fm; }
            }
            roots.push_back(0.5 * (a + b));
        }
        x0 = x1;
        f0 = f1;
    }
    if (f0 == 0.0) roots.push_back(x0);
    return roots;
}

double chi2_crit_95(int df) {
    static const double crit[] = {3.841, 5.991, 7.815, 9.488, 11.070,
                                  12.592, 14.067, 15.507, 16.919, 18.307};
    if (df < 1 || df > 10) throw ConfigError("chi2_crit_95: df must be in [1,10], got " + std::to_string(df));
    return crit[df - 1];
}

}  // namespace mte
