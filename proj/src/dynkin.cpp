#include "rbsde/dynkin.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

namespace {

// a - b, with equal infinities giving 0.
double safe_diff(double a, double b) { return a == b ? 0.0 : a - b; }

LatticeProcess difference(const FilteredTree& tree, const LatticeProcess& a, const LatticeProcess& b) {
    LatticeProcess d(tree.size());
    for (NodeId v : tree.order()) {
        d(v) = safe_diff(a(v), b(v));
        d.plus(v) = safe_diff(a.plus(v), b.plus(v));
    }
    return d;
}

template <class Fn>
double max_over_slots(const FilteredTree& tree, Fn&& gap) {
    double worst = 0.0;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v) && !tree.at_terminal(v)) continue;
        worst = std::max(worst, gap(v, Phase::instant));
        if (!tree.stopped(v)) worst = std::max(worst, gap(v, Phase::plus));
    }
    return worst;
}

}  // namespace

GameMode parse_game_mode(const std::string& name) {
    if (name == "dp") return GameMode::dp;
    if (name == "exact") return GameMode::exact;
    if (name == "both") return GameMode::both;
    fail_validation("unknown game mode '" + name + "'");
}

std::string to_string(GameMode m) {
    switch (m) {
        case GameMode::dp: return "dp";
        case GameMode::exact: return "exact";
        case GameMode::both: return "both";
    }
    return "dp";
}

GameValue game_value(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& L,
                     const LatticeProcess& U, GameMode mode, const OracleBudget& budget) {
    require_separation(tree, L, U, xi);
    GameValue out;
    if (mode != GameMode::exact) out.dp = backward_sweep(tree, xi, f, LatticeProcess(tree.size()), &L, &U);
    if (mode != GameMode::dp) out.exact = oracle_game(tree, xi, f, L, U, RuleKind::system, RuleKind::system, budget);
    if (out.dp && out.exact) {
        const auto& dp = *out.dp;
        const auto& ex = out.exact->supinf_values;
        out.dp_exact_gap = max_over_slots(tree, [&](NodeId v, Phase ph) { return std::abs(dp(v, ph) - ex(v, ph)); });
    }
    return out;
}

NodeValues game_value_at(const FilteredTree& tree, const LatticeProcess& values, const StoppingRule& alpha) {
    return stopped_values(tree, alpha, values);
}

SaddleReport saddle_check(const FilteredTree& tree, const LatticeProcess& Y, const Generator& f,
                          const LatticeProcess& L, const LatticeProcess& U, const NodeValues& xi,
                          const OracleBudget& budget, double tol) {
    const auto g = oracle_game(tree, xi, f, L, U, RuleKind::system, RuleKind::system, budget);
    SaddleReport rep;
    rep.supinf = g.supinf;
    rep.infsup = g.infsup;
    rep.order_gap = max_over_slots(
        tree, [&](NodeId v, Phase ph) { return std::abs(g.supinf_values(v, ph) - g.infsup_values(v, ph)); });
    rep.value_gap =
        max_over_slots(tree, [&](NodeId v, Phase ph) { return std::abs(g.supinf_values(v, ph) - Y(v, ph)); });
    rep.ok = rep.order_gap <= tol && rep.value_gap <= tol;
    return rep;
}

EpsilonStrategies epsilon_optimal(const FilteredTree& tree, const LatticeProcess& Y, const Generator& f,
                                  const LatticeProcess& L, const LatticeProcess& U, const NodeValues& xi,
                                  double eps) {
    if (!(eps > 0.0)) fail_validation("epsilon must be positive");
    auto first_hit = [&](auto&& hit) {
        std::vector<std::pair<NodeId, Action>> stops;
        std::vector<std::uint8_t> done(tree.size(), 0);
        for (NodeId v : tree.order()) {
            const NodeId p = tree.node(v).parent;
            if (p != no_node && done[static_cast<std::size_t>(p)]) {
                done[static_cast<std::size_t>(v)] = 1;
                continue;
            }
            if (tree.stopped(v)) continue;
            if (hit(v, Phase::instant)) {
                stops.emplace_back(v, Action::stop_instant);
            } else if (hit(v, Phase::plus)) {
                stops.emplace_back(v, Action::stop_plus);
            } else {
                continue;
            }
            done[static_cast<std::size_t>(v)] = 1;
        }
        return StoppingRule::from_stops(tree, stops, RuleKind::system);
    };
    EpsilonStrategies out;
    out.rho = first_hit([&](NodeId v, Phase ph) { return Y(v, ph) <= L(v, ph) + eps; });
    out.delta = first_hit([&](NodeId v, Phase ph) { return Y(v, ph) >= U(v, ph) - eps; });
    out.payoff = pair_payoff(tree, xi, f, L, U, out.rho, out.delta);
    out.value = Y(tree.root());
    out.gap = std::abs(out.payoff - out.value);
    out.bound = eps * (tree.horizon() + 2);
    out.within_bound = out.gap <= out.bound;
    return out;
}

StabilityReport stability_bound_check(const FilteredTree& tree, const ProblemData& a, const ProblemData& b,
                                      const OracleBudget& budget, double slack) {
    const auto ya = solve_double_direct(tree, a.xi, a.f, a.V, a.L, a.U).Y;
    const auto yb = solve_double_direct(tree, b.xi, b.f, b.V, b.L, b.U).Y;
    StabilityReport rep;
    rep.lhs = class_d_norm(tree, ya - yb);
    for (NodeId v : tree.order()) {
        if (tree.at_terminal(v)) {
            const auto i = static_cast<std::size_t>(v);
            rep.xi_term += tree.reach_probability(v) * std::abs(a.xi[i] - b.xi[i]);
        }
    }
    rep.l_term = 2.0 * class_d_norm(tree, difference(tree, a.L, b.L));
    rep.u_term = 2.0 * class_d_norm(tree, difference(tree, a.U, b.U));

    const double count = count_rules(tree, RuleKind::system);
    rep.pairs = count * count;
    if (rep.pairs > budget.max_pairs) {
        throw Error(ErrorKind::budget, "oracle size limit: " + format_double(rep.pairs) + " rule pairs exceed " +
                                           format_double(budget.max_pairs));
    }
    std::vector<StoppingRule> rules;
    enumerate_stopping_rules(
        tree, RuleKind::system, [&](const StoppingRule& r) { rules.push_back(r); }, budget.max_rules);
    const double h = tree.step();
    for (const auto& rho : rules) {
        for (const auto& delta : rules) {
            const auto w = pair_payoff_process(tree, a.xi, a.f, a.L, a.U, rho, delta);
            double cost = 0.0;
            for (NodeId v : tree.order()) {
                if (tree.stopped(v) || rho.stopped_by(v) || delta.stopped_by(v)) continue;
                const double y = w.plus(v);
                cost += tree.reach_probability(v) * h * std::abs(a.f(v, y) - b.f(v, y));
            }
            rep.generator_term = std::max(rep.generator_term, cost);
        }
    }
    rep.rhs = rep.xi_term + rep.l_term + rep.u_term + rep.generator_term;
    rep.ok = rep.lhs <= rep.rhs + slack;
    return rep;
}

}  // namespace rbsde
