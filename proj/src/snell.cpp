#include "rbsde/snell.hpp"

#include "rbsde/error.hpp"
#include "rbsde/fexp.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

SnellResult snell_envelope(const FilteredTree& tree, const LatticeProcess& payoff, const NodeValues& terminal) {
    SnellResult res;
    res.Y = backward_sweep(tree, terminal, zero_generator(), LatticeProcess(tree.size()), &payoff, nullptr);
    res.parts = mertens_decompose(tree, res.Y);
    res.flat_off = flat_off_residual(tree, res.Y, payoff, res.parts.increasing);

    std::vector<std::pair<NodeId, Action>> plain, system;
    std::vector<std::uint8_t> done_plain(tree.size(), 0), done_system(tree.size(), 0);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        const NodeId p = tree.node(v).parent;
        if (p != no_node) {
            done_plain[i] = done_plain[static_cast<std::size_t>(p)];
            done_system[i] = done_system[static_cast<std::size_t>(p)];
        }
        const bool live = !tree.stopped(v);
        if (!done_plain[i] && (!live || res.Y(v) <= payoff(v))) {
            plain.emplace_back(v, Action::stop_instant);
            done_plain[i] = 1;
        }
        if (!done_system[i]) {
            if (!live || res.Y(v) <= payoff(v)) {
                system.emplace_back(v, Action::stop_instant);
                done_system[i] = 1;
            } else if (res.Y.plus(v) <= payoff.plus(v)) {
                system.emplace_back(v, Action::stop_plus);
                done_system[i] = 1;
            }
        }
    }
    res.plain_rule = StoppingRule::from_stops(tree, plain, RuleKind::plain);
    res.system_rule = StoppingRule::from_stops(tree, system, RuleKind::system);
    return res;
}

double flat_off_residual(const FilteredTree& tree, const LatticeProcess& Y, const LatticeProcess& payoff,
                         const LatticeProcess& K) {
    double acc = 0.0;
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        const double ks = jump_star(tree, K, v);
        const double kp = jump_plus(tree, K, v);
        if (ks != 0.0) acc += tree.reach_probability(v) * std::abs((Y.plus(p) - payoff.plus(p)) * ks);
        if (kp != 0.0) acc += tree.reach_probability(v) * std::abs((Y(v) - payoff(v)) * kp);
    }
    return acc;
}

LocalizedReport localized_representation_check(const FilteredTree& tree, const LatticeProcess& payoff,
                                               const SnellResult& snell, const StoppingRule& sigma,
                                               const OracleBudget& budget, double tol) {
    if (sigma.kind() != RuleKind::plain) fail_validation("localization window must be a plain stopping rule");
    const FilteredTree window = tree.with_terminal(sigma);
    NodeValues term(tree.size(), 0.0);
    for (NodeId v : tree.order()) term[static_cast<std::size_t>(v)] = snell.Y(v);
    const auto oracle = oracle_optimal_stopping(window, payoff, term, zero_generator(), RuleKind::system, budget);
    LocalizedReport rep;
    for (NodeId v : tree.order()) {
        if (window.stopped(v) && !window.at_terminal(v)) continue;
        rep.worst_gap = std::max(rep.worst_gap, std::abs(oracle.values(v) - snell.Y(v)));
        if (!window.stopped(v)) rep.worst_gap = std::max(rep.worst_gap, std::abs(oracle.values.plus(v) - snell.Y.plus(v)));
    }
    rep.ok = rep.worst_gap <= tol;
    return rep;
}

bool smallest_majorant_check(const FilteredTree& tree, const LatticeProcess& payoff, const NodeValues& terminal,
                             const LatticeProcess& Y, const std::vector<LatticeProcess>& candidates, double tol) {
    bool ok = true;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const auto& x = candidates[c];
        const auto sm = check_supermartingale(tree, x, tol);
        if (!sm.ok) {
            fail_validation("candidate " + std::to_string(c) + " is not a supermartingale (violation " +
                            format_double(sm.worst) + " at node " + std::to_string(sm.node) + ")");
        }
        for (NodeId v : tree.order()) {
            if (tree.stopped(v)) {
                if (tree.at_terminal(v) && x(v) < terminal[static_cast<std::size_t>(v)] - tol) {
                    fail_validation("candidate " + std::to_string(c) + " does not dominate the terminal value at node " +
                                    std::to_string(v));
                }
                continue;
            }
            if (x(v) < payoff(v) - tol || x.plus(v) < payoff.plus(v) - tol) {
                fail_validation("candidate " + std::to_string(c) + " does not dominate the payoff at node " +
                                std::to_string(v));
            }
        }
        for (NodeId v : tree.order()) {
            if (Y(v) > x(v) + tol || Y.plus(v) > x.plus(v) + tol) ok = false;
        }
    }
    return ok;
}

}  // namespace rbsde
