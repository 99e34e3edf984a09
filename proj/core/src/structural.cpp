#include "mte/structural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mte {

namespace {

double utility_at(const Preferences& p, double hours, double net_wage, double virtual_income) {
    const double y = net_wage * hours + virtual_income;
    return p.theta1 * hours - 0.5 * p.theta2 * hours * hours + y - 0.5 * p.theta3 * y * y;
}

}  // namespace

void Preferences::validate() const {
    if (!std::isfinite(theta1) || !std::isfinite(theta2) || !std::isfinite(theta3))
        throw DomainError("preferences: non-finite parameter");
    if (!(theta2 > 0.0)) throw DomainError("preferences: theta2 must be > 0");
    if (theta3 < 0.0) throw DomainError("preferences: theta3 must be >= 0");
}

double FixedCost::phi() const { return std::max(0.0, kappa0 + kappa1 * std::log(z) + nu); }

void FixedCost::validate() const {
    if (!(z > 0.0)) throw DomainError("fixed cost: instrument level z must be > 0");
    if (nu < 0.0) throw DomainError("fixed cost: nu must be >= 0");
    if (!std::isfinite(kappa0) || !std::isfinite(kappa1) || !std::isfinite(nu))
        throw DomainError("fixed cost: non-finite parameter");
}

double BudgetConstraint::breakeven() const {
    const double numer = g - r * n;
    if (t <= 0.0) return numer >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0;
    return numer / (t * w);
}

void BudgetConstraint::validate() const {
    if (!(w > 0.0)) throw DomainError("budget: wage must be > 0");
    if (n < 0.0 || g < 0.0) throw DomainError("budget: nonlabor income and guarantee must be >= 0");
    if (t < 0.0 || t > 1.0 || r < 0.0 || r > 1.0)
        throw DomainError("budget: tax rates must lie in [0,1]");
    if (!std::isfinite(w) || !std::isfinite(n) || !std::isfinite(g))
        throw DomainError("budget: non-finite parameter");
}

double optimal_hours(const Preferences& prefs, double net_wage, double virtual_income,
                     double h_cap) {
    prefs.validate();
    if (!std::isfinite(net_wage) || !std::isfinite(virtual_income) || !std::isfinite(h_cap))
        throw DomainError("optimal_hours: non-finite input");
    if (net_wage < 0.0) throw DomainError("optimal_hours: net wage must be >= 0");
    if (virtual_income < 0.0) throw DomainError("optimal_hours: virtual income must be >= 0");
    if (!(h_cap > 0.0)) throw DomainError("optimal_hours: hours cap must be > 0");

    const double denom = prefs.theta2 + prefs.theta3 * net_wage * net_wage;
    const double interior =
        (prefs.theta1 + net_wage * (1.0 - prefs.theta3 * virtual_income)) / denom;
    double h = std::clamp(interior, 0.0, h_cap);
    // Strict concavity makes the clamp sufficient; the corner comparison keeps
    // the contract explicit.
    const double u_h = utility_at(prefs, h, net_wage, virtual_income);
    const double u_lo = utility_at(prefs, 0.0, net_wage, virtual_income);
    const double u_hi = utility_at(prefs, h_cap, net_wage, virtual_income);
    if (u_lo > u_h && u_lo >= u_hi) return 0.0;
    if (u_hi > u_h) return h_cap;
    return h;
}

RegimeResult regime_utility(const Agent& agent, Regime regime) {
    agent.prefs.validate();
    agent.budget.validate();
    const BudgetConstraint& b = agent.budget;

    RegimeResult off;
    off.hours = optimal_hours(agent.prefs, b.w, b.n, agent.hours_cap);
    off.utility = utility_at(agent.prefs, off.hours, b.w, b.n);
    if (regime == Regime::OffWelfare) return off;

    if (!b.eligible()) {
        RegimeResult res = off;
        res.ineligible = true;
        return res;
    }
    const double cap = std::min(agent.hours_cap, b.breakeven());
    const double net_wage = b.w * (1.0 - b.t);
    const double virt = b.g + (1.0 - b.r) * b.n;
    RegimeResult on;
    if (cap <= 0.0) {
        // Breakeven at zero hours: the only point on the segment is H = 0.
        on.hours = 0.0;
    } else {
        on.hours = optimal_hours(agent.prefs, net_wage, virt, cap);
    }
    on.utility = utility_at(agent.prefs, on.hours, net_wage, virt);
    return on;
}

double utility_gain(const Agent& agent) {
    const RegimeResult on = regime_utility(agent, Regime::OnWelfare);
    if (on.ineligible) return 0.0;
    const RegimeResult off = regime_utility(agent, Regime::OffWelfare);
    return on.utility - off.utility;
}

bool participate(const Agent& agent) {
    const RegimeResult on = regime_utility(agent, Regime::OnWelfare);
    if (on.ineligible) return false;
    const RegimeResult off = regime_utility(agent, Regime::OffWelfare);
    agent.cost.validate();
    return on.utility - off.utility - agent.cost.phi() >= 0.0;
}

double delta(const Agent& agent) {
    const RegimeResult on = regime_utility(agent, Regime::OnWelfare);
    if (on.ineligible) return 0.0;
    const RegimeResult off = regime_utility(agent, Regime::OffWelfare);
    return on.hours - off.hours;
}

SimOutcome simulate_agent(const Agent& agent) {
    const RegimeResult off = regime_utility(agent, Regime::OffWelfare);
    const RegimeResult on = regime_utility(agent, Regime::OnWelfare);
    agent.cost.validate();

    SimOutcome out;
    out.phi = agent.cost.phi();
    if (on.ineligible) {
        out.delta = 0.0;
        out.utility_gain = 0.0;
        out.participates = false;
    } else {
        out.delta = on.hours - off.hours;
        out.utility_gain = on.utility - off.utility;
        out.participates = out.utility_gain - out.phi >= 0.0;
    }
    out.hours = out.participates ? on.hours : off.hours;
    return out;
}

std::vector<LocusPoint> indifference_locus(const BudgetConstraint& budget,
                                           const std::vector<double>& phi_grid,
                                           double theta2, double theta3,
                                           double theta1_lo, double theta1_hi,
                                           double hours_cap) {
    budget.validate();
    if (!(theta1_hi > theta1_lo)) throw DomainError("indifference_locus: empty theta1 interval");
    for (double phi : phi_grid) {
        if (phi < 0.0) throw DomainError("indifference_locus: phi values must be >= 0");
    }
    auto dv_of = [&](double theta1) {
        Agent a;
        a.prefs = Preferences{theta1, theta2, theta3};
        a.budget = budget;
        a.hours_cap = hours_cap;
        return utility_gain(a);
    };
    std::vector<LocusPoint> out;
    out.reserve(phi_grid.size());
    for (double phi : phi_grid) {
        LocusPoint pt;
        pt.phi = phi;
        pt.theta1_roots = find_roots([&](double th) { return dv_of(th) - phi; },
                                     theta1_lo, theta1_hi, 800);
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace mte
