#pragma once

// Small helpers for building Datasets by hand in tests.

#include <random>
#include <vector>

#include "mte/dataset.hpp"

namespace testutil {

// A schema-complete dataset with benign defaults; tests overwrite the columns
// they care about.
inline mte::Dataset blank_dataset(std::size_t n, int clusters = 4) {
    mte::Dataset d;
    auto fill = [&](const char* name, double value) {
        d.set(name, std::vector<double>(n, value));
    };
    fill("hours", 20.0);
    fill("participates", 0.0);
    fill("log_wage", 2.3);
    fill("nonlabor_income", 50.0);
    fill("guarantee", 300.0);
    fill("tax_t", 0.5);
    fill("tax_r", 0.0);
    fill("age", 35.0);
    fill("black", 0.0);
    fill("family_size", 2.0);
    fill("kids_under6", 1.0);
    fill("unemp_rate", 6.0);
    fill("region1", 0.0);
    fill("region2", 0.0);
    fill("region3", 0.0);
    fill("fs_guarantee", 100.0);
    fill("z1", 1.0);
    std::vector<double> cid(n);
    for (std::size_t i = 0; i < n; ++i) cid[i] = static_cast<double>(i % static_cast<std::size_t>(clusters));
    d.set("cluster_id", std::move(cid));
    return d;
}

inline std::vector<double> draw_normal(std::size_t n, std::mt19937_64& eng, double mean = 0.0,
                                       double sd = 1.0) {
    std::normal_distribution<double> dist(mean, sd);
    std::vector<double> v(n);
    for (double& x : v) x = dist(eng);
    return v;
}

inline std::vector<double> draw_bernoulli(std::size_t n, std::mt19937_64& eng, double p) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(n);
    for (double& x : v) x = dist(eng) < p ? 1.0 : 0.0;
    return v;
}

}  // namespace testutil
