#include "rbsde/fexp.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbsde {

namespace {

const double inf = std::numeric_limits<double>::infinity();
const double nan = std::numeric_limits<double>::quiet_NaN();

double v_star(const LatticeProcess& V, NodeId parent, NodeId w) {
    return V.nodes() == 0 ? 0.0 : V(w) - V.plus(parent);
}

double v_plus(const LatticeProcess& V, NodeId v) { return V.nodes() == 0 ? 0.0 : V.plus(v) - V(v); }

}  // namespace

void throw_unbounded_step() { throw Error(ErrorKind::nonconvergence, "unbounded generator step"); }

double implicit_step(double target, double h, const Generator& f, NodeId v) {
    if (f.affine_slope) {
        const double a = f(v, 0.0);
        if (*f.affine_slope == 0.0) return target + h * a;
        return (target + h * a) / (1.0 + h * *f.affine_slope);
    }
    return implicit_step(target, h, [&](double y) { return f(v, y); });
}

LatticeProcess no_lower(const FilteredTree& tree) { return LatticeProcess(tree.size(), -inf); }
LatticeProcess no_upper(const FilteredTree& tree) { return LatticeProcess(tree.size(), inf); }

ProblemData blank_problem(const FilteredTree& tree) {
    return ProblemData{NodeValues(tree.size(), 0.0), zero_generator(), LatticeProcess(tree.size()),
                       no_lower(tree), no_upper(tree)};
}

LatticeProcess backward_sweep(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                              const LatticeProcess& V, const LatticeProcess* lower, const LatticeProcess* upper) {
    LatticeProcess y(tree.size());
    const double h = tree.step();
    auto clamp = [&](double x, NodeId v, Phase ph) {
        if (upper) x = std::min(x, (*upper)(v, ph));
        if (lower) x = std::max(x, (*lower)(v, ph));
        return x;
    };
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        if (tree.stopped(v)) {
            if (tree.at_terminal(v)) {
                y(v) = xi[static_cast<std::size_t>(v)];
                y.plus(v) = y(v);
            }
            continue;
        }
        double m = 0.0;
        for (NodeId w : tree.node(v).children) m += tree.node(w).prob * (y(w) + v_star(V, v, w));
        const double yp = clamp(implicit_step(m, h, f, v), v, Phase::plus);
        y.plus(v) = yp;
        y(v) = clamp(yp + v_plus(V, v), v, Phase::instant);
    }
    freeze_after_terminal(tree, y);
    return y;
}

std::pair<LatticeProcess, LatticeProcess> complete_solution(const FilteredTree& tree, const Generator& f,
                                                            const LatticeProcess& V, const LatticeProcess& Y) {
    const double h = tree.step();
    std::vector<double> ms(tree.size(), 0.0), rs(tree.size(), 0.0), rp(tree.size(), 0.0), zero(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        double m = 0.0;
        for (NodeId w : tree.node(v).children) m += tree.node(w).prob * (Y(w) + v_star(V, v, w));
        const double k_star = Y.plus(v) - m - h * f(v, Y.plus(v));
        for (NodeId w : tree.node(v).children) {
            ms[static_cast<std::size_t>(w)] = Y(w) + v_star(V, v, w) - m;
            rs[static_cast<std::size_t>(w)] = k_star;
        }
        rp[static_cast<std::size_t>(v)] = Y(v) - Y.plus(v) - v_plus(V, v);
    }
    return {from_increments(tree, ms, zero), from_increments(tree, rs, rp)};
}

double dynamics_residual(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                         const LatticeProcess& V, const LatticeProcess& Y, const LatticeProcess& M,
                         const LatticeProcess& R) {
    const double h = tree.step();
    double worst = 0.0;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) {
            if (tree.at_terminal(v)) worst = std::max(worst, std::abs(Y(v) - xi[static_cast<std::size_t>(v)]));
            continue;
        }
        const double drift = h * f(v, Y.plus(v));
        for (NodeId w : tree.node(v).children) {
            const double rhs = Y(w) + drift + v_star(V, v, w) + jump_star(tree, R, w) - jump_star(tree, M, w);
            worst = std::max(worst, std::abs(Y.plus(v) - rhs));
        }
        worst = std::max(worst, std::abs(Y(v) - (Y.plus(v) + v_plus(V, v) + jump_plus(tree, R, v))));
    }
    return std::max(worst, martingale_gap(tree, M));
}

double generator_cost(const FilteredTree& tree, const Generator& f, const LatticeProcess& Y) {
    double acc = 0.0;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        acc += tree.reach_probability(v) * tree.step() * std::abs(f(v, Y.plus(v)));
    }
    return acc;
}

BsdeSolution solve_bsde(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& V) {
    if (xi.size() != tree.size()) fail_validation("terminal values do not match tree size");
    BsdeSolution sol;
    sol.Y = backward_sweep(tree, xi, f, V, nullptr, nullptr);
    auto [m, r] = complete_solution(tree, f, V, sol.Y);
    sol.M = std::move(m);
    sol.generator_cost = generator_cost(tree, f, sol.Y);
    sol.residual = dynamics_residual(tree, xi, f, V, sol.Y, sol.M, LatticeProcess(tree.size()));
    return sol;
}

BsdeSolution solve_bsde(const FilteredTree& tree, const NodeValues& xi, const Generator& f) {
    return solve_bsde(tree, xi, f, LatticeProcess(tree.size()));
}

LatticeProcess f_expectation_process(const FilteredTree& tree, const StoppingRule& beta, const NodeValues& zeta,
                                     const Generator& f) {
    LatticeProcess w(tree.size(), nan);
    const double h = tree.step();
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const NodeId p = tree.node(v).parent;
        if (p != no_node && beta.stopped_by(p)) continue;
        if (beta.stops_at(v)) {
            const double z = zeta[static_cast<std::size_t>(v)];
            if (std::isnan(z)) fail_validation("terminal value missing at node " + std::to_string(v));
            if (beta.action(v) == Action::stop_instant) {
                w(v) = z;
            } else {
                w.plus(v) = z;
                w(v) = z;
            }
            continue;
        }
        double m = 0.0;
        for (NodeId c : tree.node(v).children) m += tree.node(c).prob * w(c);
        w.plus(v) = implicit_step(m, h, f, v);
        w(v) = w.plus(v);
    }
    return w;
}

NodeValues f_expectation(const FilteredTree& tree, const StoppingRule& alpha, const StoppingRule& beta,
                         const NodeValues& zeta, const Generator& f) {
    if (!rule_leq(tree, alpha, beta)) fail_validation("f-expectation needs alpha <= beta");
    const auto w = f_expectation_process(tree, beta, zeta, f);
    NodeValues out(tree.size(), nan);
    for (NodeId v : tree.order()) {
        if (alpha.stops_at(v)) out[static_cast<std::size_t>(v)] = w(v, alpha.stop_slot(tree, v).phase);
    }
    return out;
}

LatticeProcess dominating_supermartingale(const FilteredTree& tree, const LatticeProcess& x, const Generator& f) {
    LatticeProcess s(tree.size());
    std::vector<double> tail(tree.size(), 0.0);
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            s(v) = std::abs(x(v));
            s.plus(v) = s(v);
            continue;
        }
        double cont = 0.0;
        double t = 0.0;
        for (NodeId w : tree.node(v).children) {
            cont += tree.node(w).prob * s(w);
            t += tree.node(w).prob * tail[static_cast<std::size_t>(w)];
        }
        tail[i] = tree.step() * std::abs(f(v, 0.0)) + t;
        s.plus(v) = std::max(std::abs(x.plus(v)), cont);
        s(v) = std::max(std::abs(x(v)), s.plus(v));
    }
    freeze_after_terminal(tree, s);
    LatticeProcess u(tree.size());
    for (NodeId v : tree.order()) {
        const NodeId a = tree.stopped(v) ? tree.terminal_ancestor(v) : v;
        const double tl = tree.stopped(v) ? 0.0 : tail[static_cast<std::size_t>(a)];
        u(v) = 2.0 * s(v) + 2.0 * tl;
        u.plus(v) = 2.0 * s.plus(v) + 2.0 * tl;
    }
    return u;
}

LemmaBoundReport lemma_bound_check(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& Y, double tol) {
    const auto n = tree.size();
    std::vector<double> cost(n, 0.0), free_cost(n, 0.0), abs_xi(n, 0.0);
    LemmaBoundReport rep;
    rep.worst_stated = -inf;
    rep.worst_corrected = -inf;
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            if (!tree.at_terminal(v)) continue;
            abs_xi[i] = std::abs(xi[i]);
        } else {
            double c = 0.0, c0 = 0.0, ax = 0.0;
            for (NodeId w : tree.node(v).children) {
                const double p = tree.node(w).prob;
                const auto j = static_cast<std::size_t>(w);
                c += p * cost[j];
                c0 += p * free_cost[j];
                ax += p * abs_xi[j];
            }
            cost[i] = tree.step() * std::abs(f(v, Y.plus(v))) + c;
            free_cost[i] = tree.step() * std::abs(f(v, 0.0)) + c0;
            abs_xi[i] = ax;
        }
        const double stated = 2.0 * (abs_xi[i] - std::abs(Y(v)) + free_cost[i]);
        const double corrected = abs_xi[i] - std::abs(Y(v)) + 2.0 * free_cost[i];
        if (cost[i] - stated > rep.worst_stated) {
            rep.worst_stated = cost[i] - stated;
            rep.stated_witness = v;
        }
        rep.worst_corrected = std::max(rep.worst_corrected, cost[i] - corrected);
    }
    rep.stated_holds = rep.worst_stated <= tol;
    rep.corrected_holds = rep.worst_corrected <= tol;
    return rep;
}

}  // namespace rbsde
