#pragma once

#include <optional>
#include <vector>

#include "mte/common.hpp"

namespace mte {

// Quadratic utility over hours H and disposable income Y:
//   U(H, Y) = theta1*H - (theta2/2)*H^2 + Y - (theta3/2)*Y^2
// theta2 > 0 makes the hours problem strictly concave; theta3 >= 0 brings in
// income effects. Program participation subtracts a fixed cost phi.
struct Preferences {
    double theta1 = 0.0;  // work-preference intercept (utility per hour)
    double theta2 = 1.0;  // hours curvature, > 0
    double theta3 = 0.0;  // income curvature, >= 0

    void validate() const;
};

// Participation cost phi = max(0, kappa0 + kappa1*log(z) + nu).
struct FixedCost {
    double z = 1.0;       // administrative-barrier index, > 0
    double kappa0 = 0.0;  // cost-index intercept
    double kappa1 = 0.0;  // loading on log(z)
    double nu = 0.0;      // idiosyncratic cost, >= 0

    double phi() const;
    void validate() const;
};

// Two-segment budget set. Off welfare: Y = w*H + n. On welfare the benefit
// B = g - t*w*H - r*n must stay nonnegative, so net wage is w*(1-t), virtual
// income is g + (1-r)*n, and hours are capped at the breakeven point.
struct BudgetConstraint {
    double w = 10.0;  // gross hourly wage, > 0
    double n = 0.0;   // nonlabor income $/wk, >= 0
    double g = 0.0;   // guarantee $/wk, >= 0
    double t = 0.0;   // earnings tax rate in [0,1]
    double r = 0.0;   // unearned-income tax rate in [0,1]

    // Hours at which the benefit hits zero; +inf when t = 0 and g >= r*n.
    double breakeven() const;
    // The welfare segment exists only when the benefit at H = 0 is nonnegative.
    bool eligible() const { return g - r * n >= 0.0; }
    void validate() const;
};

struct Agent {
    Preferences prefs;
    FixedCost cost;
    BudgetConstraint budget;
    double hours_cap = 60.0;  // institutional weekly hours bound
};

enum class Regime { OffWelfare, OnWelfare };

struct RegimeResult {
    double utility = 0.0;  // maximized utility, excluding the fixed cost
    double hours = 0.0;
    bool ineligible = false;  // welfare segment unavailable (g - r*n < 0)
};

// Per-agent simulation outcome, including latent oracle quantities.
struct SimOutcome {
    double hours = 0.0;        // chosen hours given the participation decision
    bool participates = false;
    double delta = 0.0;        // hours change if participating (Delta)
    double utility_gain = 0.0; // dV = V_on - V_off
    double phi = 0.0;
};

// argmax over H in [0, h_cap] of U(H, net_wage*H + virtual_income).
// Interior optimum (theta1 + w*(1 - theta3*n)) / (theta2 + theta3*w^2),
// clamped to the feasible interval with corner comparison.
double optimal_hours(const Preferences& prefs, double net_wage, double virtual_income,
                     double h_cap);

// Maximized utility and hours on one budget segment. On-welfare results
// respect the breakeven cap; an ineligible agent gets the off-welfare values
// back with the flag set.
RegimeResult regime_utility(const Agent& agent, Regime regime);

// dV = V(on) - V(off); may be negative. Zero (flagged via regime_utility)
// when the agent is ineligible.
double utility_gain(const Agent& agent);

// dV - phi >= 0, with ties participating. Ineligible agents never do.
bool participate(const Agent& agent);

// Hours change when participating: H(on) - H(off). Zero for ineligible agents.
double delta(const Agent& agent);

SimOutcome simulate_agent(const Agent& agent);

// Indifference locus of Eq-style thresholds: for each phi value, the theta1
// roots of dV(theta1) = phi on [theta1_lo, theta1_hi], holding (theta2,
// theta3) fixed. An empty root list marks "no solution on the interval".
struct LocusPoint {
    double phi = 0.0;
    std::vector<double> theta1_roots;
};

std::vector<LocusPoint> indifference_locus(const BudgetConstraint& budget,
                                           const std::vector<double>& phi_grid,
                                           double theta2, double theta3,
                                           double theta1_lo, double theta1_hi,
                                           double hours_cap = 60.0);

}  // namespace mte
