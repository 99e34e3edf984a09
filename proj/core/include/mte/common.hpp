#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mte {

// ---------------------------------------------------------------------------
// Error hierarchy. Messages carry the offending column / range / stage so the
// CLI can surface them as machine-readable records.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration values (knot counts, distribution parameters, ...).
struct ConfigError : Error { using Error::Error; };
// Dataset columns missing / malformed / wrong domain.
struct SchemaError : Error { using Error::Error; };
// Numeric-domain violations (log of nonpositive entry, t >= 1, ...).
struct DomainError : Error { using Error::Error; };
// Rank-deficient design matrices; message lists the collinear columns.
struct RankError : Error { using Error::Error; };
// Evaluation outside the supported range; message lists the range.
struct SupportError : Error { using Error::Error; };
// Estimation failures (non-convergence, separation, degenerate samples).
struct FitError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Standard-normal helpers
// ---------------------------------------------------------------------------

double norm_pdf(double x);
double norm_cdf(double x);
// log Phi(x), stable far into the left tail.
double log_norm_cdf(double x);
// Inverse Mills ratio phi(x)/Phi(x), stable for large negative x.
double inv_mills(double x);

// ---------------------------------------------------------------------------
// RNG plumbing. Every simulated unit gets its own engine keyed by
// (seed, stream, index) so that results do not depend on evaluation order
// or worker count.
// ---------------------------------------------------------------------------

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

// ---------------------------------------------------------------------------
// Deterministic parallel loop: fn(i) for i in [0, n). Results must be written
// to preassigned slots; the schedule never affects output. Worker count comes
// from the MTE_WORKERS environment variable when `workers` <= 0.
// ---------------------------------------------------------------------------

int env_worker_count();
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

// ---------------------------------------------------------------------------
// Small numeric utilities
// ---------------------------------------------------------------------------

double mean(const std::vector<double>& v);
double sample_variance(const std::vector<double>& v);

// Type-7 quantile (linear interpolation) of an unsorted sample, p in [0,1].
double quantile(std::vector<double> v, double p);

// All roots of f on [lo, hi] found by sign scan over `scan` intervals followed
// by bisection. Tolerance is on the argument.
std::vector<double> find_roots(const std::function<double(double)>& f,
                               double lo, double hi, int scan = 400, double xtol = 1e-12);

// Upper 5% chi-square critical values for df = 1..10.
double chi2_crit_95(int df);

}  // namespace mte
