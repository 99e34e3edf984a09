#pragma once

// Brute-force oracles kept independent of the library's closed forms: direct
// utility evaluation on fine hour grids.

#include <cmath>
#include <limits>

#include "mte/structural.hpp"

namespace oracles {

inline double quad_utility(const mte::Preferences& p, double hours, double net_wage,
                           double virtual_income) {
    const double y = net_wage * hours + virtual_income;
    return p.theta1 * hours - 0.5 * p.theta2 * hours * hours + y - 0.5 * p.theta3 * y * y;
}

struct GridMax {
    double hours = 0.0;
    double utility = -std::numeric_limits<double>::infinity();
};

inline GridMax grid_argmax(const mte::Preferences& p, double net_wage, double virtual_income,
                           double h_cap, double step = 0.01) {
    GridMax best;
    const long n = static_cast<long>(std::floor(h_cap / step));
    for (long k = 0; k <= n; ++k) {
        const double h = std::min(k * step, h_cap);
        const double u = quad_utility(p, h, net_wage, virtual_income);
        if (u > best.utility) {
            best.utility = u;
            best.hours = h;
        }
    }
    const double u_cap = quad_utility(p, h_cap, net_wage, virtual_income);
    if (u_cap > best.utility) {
        best.utility = u_cap;
        best.hours = h_cap;
    }
    return best;
}

// Grid oracle for a full regime: honors the breakeven cap on welfare.
inline GridMax grid_regime(const mte::Agent& agent, mte::Regime regime, double step = 1e-3) {
    const mte::BudgetConstraint& b = agent.budget;
    if (regime == mte::Regime::OffWelfare) {
        return grid_argmax(agent.prefs, b.w, b.n, agent.hours_cap, step);
    }
    const double cap = std::min(agent.hours_cap, b.breakeven());
    if (cap < 0.0) return grid_regime(agent, mte::Regime::OffWelfare, step);
    return grid_argmax(agent.prefs, b.w * (1.0 - b.t), b.g + (1.0 - b.r) * b.n,
                       std::max(cap, 0.0), step);
}

}  // namespace oracles
