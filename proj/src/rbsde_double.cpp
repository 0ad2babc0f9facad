#include "rbsde/rbsde_double.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {

namespace {

constexpr double monotone_slack = 1e-9;

double excess(const FilteredTree& tree, const LatticeProcess& a, const LatticeProcess& b) {
    double worst = 0.0;
    for (NodeId v : tree.order()) worst = std::max({worst, a(v) - b(v), a.plus(v) - b.plus(v)});
    return worst;
}

// |(gap) * jump|, with an infinite gap treated as inactive.
double charge(double gap, double jump) {
    if (jump == 0.0 || !std::isfinite(gap)) return 0.0;
    return std::abs(gap * jump);
}

}  // namespace

SeparationReport check_separation(const FilteredTree& tree, const LatticeProcess& L, const LatticeProcess& U,
                                  const NodeValues& xi) {
    SeparationReport rep;
    auto note = [&](double gap, NodeId v, Phase ph, bool terminal) {
        if (gap > rep.worst_gap) {
            rep.worst_gap = gap;
            rep.node = v;
            rep.slot = Slot{tree.level(v), ph};
            rep.terminal = terminal;
        }
    };
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) {
            if (!tree.at_terminal(v)) continue;
            const double x = xi[static_cast<std::size_t>(v)];
            note(std::max(L(v) - x, x - U(v)), v, Phase::instant, true);
            continue;
        }
        note(L(v) - U(v), v, Phase::instant, false);
        note(L.plus(v) - U.plus(v), v, Phase::plus, false);
        rep.cross_gap = std::max({rep.cross_gap, L.plus(v) - U(v), L(v) - U.plus(v)});
    }
    rep.ok = rep.worst_gap <= 0.0;
    rep.cross_ok = rep.cross_gap <= 0.0;
    if (!rep.ok) {
        rep.message = rep.terminal ? "terminal value outside [L_T, U_T] by " + format_double(rep.worst_gap) +
                                         " at leaf " + std::to_string(rep.node)
                                   : "separation violation: L exceeds U by " + format_double(rep.worst_gap) +
                                         " at node " + std::to_string(rep.node) + " slot " + to_string(rep.slot);
    } else {
        rep.message = "L <= U on every slot and L_T <= xi <= U_T; on a finite tree this is the whole "
                      "Mokobodzki condition";
    }
    return rep;
}

void require_separation(const FilteredTree& tree, const LatticeProcess& L, const LatticeProcess& U,
                        const NodeValues& xi) {
    const auto rep = check_separation(tree, L, U, xi);
    if (!rep.ok) fail_validation(rep.message);
}

void assemble_reflection(const FilteredTree& tree, const LatticeProcess& R, DoubleBarrierSolution& sol) {
    auto [up, down] = jordan(tree, R);
    sol.R_plus = std::move(up);
    sol.R_minus = std::move(down);
}

DoubleBarrierSolution solve_decoupled(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                      const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                      const DecoupledOptions& opts) {
    require_separation(tree, L, U, xi);
    const NodeValues zeros(tree.size(), 0.0);
    const LatticeProcess no_drift(tree.size());

    DoubleBarrierSolution sol;
    sol.scheme = Scheme::decoupled;
    LatticeProcess y1 = solve_bsde(tree, xi, f, V).Y;
    LatticeProcess y2(tree.size());
    ReflectedSolution s1, s2;
    for (int n = 1; n <= opts.max_iter; ++n) {
        std::vector<double> shift(tree.size());
        for (NodeId v : tree.order()) shift[static_cast<std::size_t>(v)] = -y2.plus(v);
        s1 = solve_lower(tree, xi, shifted_generator(f, std::move(shift)), V, L + y2, opts.inner, opts.inner_opts);
        s2 = solve_lower_direct(tree, zeros, zero_generator(), no_drift, y1 - U);
        const double drop = std::max(excess(tree, y1, s1.Y), excess(tree, y2, s2.Y));
        if (drop > monotone_slack) {
            throw Error(ErrorKind::nonconvergence,
                        "decoupled iterates decreased by " + format_double(drop) + " at n=" + std::to_string(n));
        }
        const double c1 = class_d_norm(tree, s1.Y - y1);
        const double c2 = class_d_norm(tree, s2.Y - y2);
        sol.log.push_back({"Y1", n, c1});
        sol.log.push_back({"Y2", n, c2});
        sol.iterations = n;
        y1 = s1.Y;
        y2 = s2.Y;
        if (c1 <= opts.tol && c2 <= opts.tol) {
            sol.Y = s1.Y - s2.Y;
            sol.M = s1.M - s2.M;
            assemble_reflection(tree, s1.K - s2.K, sol);
            sol.first = std::move(s1);
            sol.second = std::move(s2);
            return sol;
        }
    }
    throw Error(ErrorKind::nonconvergence, "decoupled scheme did not converge in " + std::to_string(opts.max_iter) +
                                               " iterations, last change " + format_double(sol.log.back().change));
}

DoubleBarrierSolution solve_double_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                          const LatticeProcess& V, const LatticeProcess& L,
                                          const LatticeProcess& U) {
    require_separation(tree, L, U, xi);
    DoubleBarrierSolution sol;
    sol.scheme = Scheme::direct;
    sol.Y = backward_sweep(tree, xi, f, V, &L, &U);
    auto [m, r] = complete_solution(tree, f, V, sol.Y);
    sol.M = std::move(m);
    assemble_reflection(tree, r, sol);
    sol.iterations = 1;
    return sol;
}

DoubleBarrierSolution solve_fnm(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                const FnmOptions& opts) {
    if (opts.ladder.empty()) fail_validation("empty f_{n,m} ladder");
    DoubleBarrierSolution last;
    std::vector<IterationRecord> log;
    int total = 0;
    bool have = false;
    int rung = 0;
    for (double n : opts.ladder) {
        for (double m : opts.ladder) {
            const Generator g = fnm_ladder(f, n, m, std::vector<double>(tree.size(), opts.rho));
            auto sol = solve_decoupled(tree, xi, g, V, L, U, opts.decoupled);
            total += sol.iterations;
            log.push_back({"fnm n=" + format_double(n) + " m=" + format_double(m), rung++,
                           have ? class_d_norm(tree, sol.Y - last.Y) : 0.0});
            last = std::move(sol);
            have = true;
        }
    }
    last.scheme = Scheme::fnm;
    last.iterations = total;
    last.log.insert(last.log.begin(), log.begin(), log.end());
    return last;
}

DoubleBarrierSolution solve_double(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                   Scheme scheme, const DecoupledOptions& opts) {
    switch (scheme) {
        case Scheme::decoupled: return solve_decoupled(tree, xi, f, V, L, U, opts);
        case Scheme::direct: return solve_double_direct(tree, xi, f, V, L, U);
        case Scheme::fnm: {
            FnmOptions fo;
            fo.decoupled = opts;
            return solve_fnm(tree, xi, f, V, L, U, fo);
        }
        default: break;
    }
    fail_validation("scheme '" + to_string(scheme) + "' is not a two-barrier scheme");
}

DoubleChecks check_double_solution(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                   const DoubleBarrierSolution& sol) {
    constexpr double tol = 1e-9;
    DoubleChecks c;
    const LatticeProcess R = sol.R_plus - sol.R_minus;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        c.barrier_gap = std::max({c.barrier_gap, L(v) - sol.Y(v), L.plus(v) - sol.Y.plus(v), sol.Y(v) - U(v),
                                  sol.Y.plus(v) - U.plus(v)});
    }
    c.dynamics = dynamics_residual(tree, xi, f, V, sol.Y, sol.M, R);
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        const double w = tree.reach_probability(v);
        const double up_s = jump_star(tree, sol.R_plus, v), up_p = jump_plus(tree, sol.R_plus, v);
        const double dn_s = jump_star(tree, sol.R_minus, v), dn_p = jump_plus(tree, sol.R_minus, v);
        if (p != no_node) {
            c.minimality_lower += w * charge(sol.Y.plus(p) - L.plus(p), up_s);
            c.minimality_upper += w * charge(U.plus(p) - sol.Y.plus(p), dn_s);
        }
        c.minimality_lower += w * charge(sol.Y(v) - L(v), up_p);
        c.minimality_upper += w * charge(U(v) - sol.Y(v), dn_p);
        if ((up_s != 0.0 && dn_s != 0.0) || (up_p != 0.0 && dn_p != 0.0)) c.singular = false;
    }
    c.r_decrease = std::min(worst_decrease(tree, sol.R_plus), worst_decrease(tree, sol.R_minus));
    c.r_predictability = std::max(predictability_gap(tree, sol.R_plus), predictability_gap(tree, sol.R_minus));
    c.generator_cost = generator_cost(tree, f, sol.Y);
    if (c.barrier_gap > tol) {
        c.failure = "Y leaves [L, U] by " + format_double(c.barrier_gap);
    } else if (c.dynamics > tol) {
        c.failure = "dynamics residual " + format_double(c.dynamics);
    } else if (c.minimality_lower > tol) {
        c.failure = "R+ acts off the lower barrier, residual " + format_double(c.minimality_lower);
    } else if (c.minimality_upper > tol) {
        c.failure = "R- acts off the upper barrier, residual " + format_double(c.minimality_upper);
    } else if (!c.singular) {
        c.failure = "R+ and R- move on the same slot";
    } else if (c.r_decrease < -tol) {
        c.failure = "reflection part decreases by " + format_double(-c.r_decrease);
    } else if (c.r_predictability > tol) {
        c.failure = "reflection is not predictable, spread " + format_double(c.r_predictability);
    } else if (!std::isfinite(c.generator_cost)) {
        c.failure = "generator cost is not finite";
    }
    c.ok = c.failure.empty();
    return c;
}

double sandwich_gap(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& V,
                    const LatticeProcess& L, const LatticeProcess& U, const LatticeProcess& Y) {
    const auto lower = solve_lower_direct(tree, xi, f, V, L);
    const auto upper = solve_upper_direct(tree, xi, f, V, U);
    return std::max(excess(tree, Y, lower.Y), excess(tree, upper.Y, Y));
}

}  // namespace rbsde
