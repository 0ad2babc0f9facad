#include "rbsde/rbsde_lower.hpp"

#include "rbsde/error.hpp"
#include "rbsde/snell.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbsde {

namespace {

constexpr double monotone_slack = 1e-9;

double v_star(const LatticeProcess& V, NodeId parent, NodeId w) {
    return V.nodes() == 0 ? 0.0 : V(w) - V.plus(parent);
}

double v_plus(const LatticeProcess& V, NodeId v) { return V.nodes() == 0 ? 0.0 : V.plus(v) - V(v); }

ReflectedSolution finish(const FilteredTree& tree, const Generator& f, const LatticeProcess& V, LatticeProcess Y,
                         Scheme scheme) {
    ReflectedSolution sol;
    auto [m, k] = complete_solution(tree, f, V, Y);
    sol.Y = std::move(Y);
    sol.M = std::move(m);
    sol.K = std::move(k);
    sol.scheme = scheme;
    return sol;
}

// Largest amount by which a exceeds b on any slot.
double excess(const FilteredTree& tree, const LatticeProcess& a, const LatticeProcess& b) {
    double worst = 0.0;
    for (NodeId v : tree.order()) {
        worst = std::max({worst, a(v) - b(v), a.plus(v) - b.plus(v)});
    }
    return worst;
}

std::vector<double> node_values(const FilteredTree& tree, const std::function<double(NodeId)>& fn) {
    std::vector<double> out(tree.size());
    for (NodeId v : tree.order()) out[static_cast<std::size_t>(v)] = fn(v);
    return out;
}

LatticeProcess picard_core(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                           const LatticeProcess& V, const LatticeProcess& L, const PicardOptions& opts,
                           const LatticeProcess* start, ReflectedSolution& trace, const std::string& stage) {
    if (!f.lipschitz) fail_validation("Picard scheme requires a Lipschitz constant");
    const double lambda = *f.lipschitz;
    const double h = tree.step();
    const bool isotone = lambda * h >= 1.0;

    LatticeProcess y = start ? *start : solve_bsde(tree, xi, f, V).Y;
    // Plain map is antitone with Y0 below the solution, so evens stay below it
    // and odds above. The longer chain Y0 <= Y2 <= ... <= Y3 <= Y1 needs
    // Y0 <= Y2, which reflection can break; it is only counted.
    LatticeProcess last_even = y, last_odd, exact;
    bool have_odd = false;
    if (!isotone) exact = solve_lower_direct(tree, xi, f, V, L).Y;

    for (int n = 1; n <= opts.max_iter; ++n) {
        LatticeProcess next;
        if (isotone) {
            const auto c = node_values(tree, [&](NodeId v) { return f(v, y.plus(v)) + lambda * y.plus(v); });
            next = backward_sweep(tree, xi, affine_generator(c, lambda), V, &L, nullptr);
            const double drop = excess(tree, y, next);
            if (drop > monotone_slack) {
                throw Error(ErrorKind::nonconvergence,
                            stage + ": isotone Picard iterate decreased by " + format_double(drop) + " at n=" +
                                std::to_string(n));
            }
        } else {
            next = solve_linear(tree, xi, frozen_generator(f, y), V, L).Y;
            const double off = n % 2 == 0 ? excess(tree, next, exact) : excess(tree, exact, next);
            if (off > monotone_slack) {
                throw Error(ErrorKind::nonconvergence,
                            stage + ": Picard iterate " + std::to_string(n) + " on the wrong side of the solution by " +
                                format_double(off));
            }
            if (n % 2 == 0) {
                if (excess(tree, last_even, next) > monotone_slack) ++trace.chain_breaks;
                last_even = next;
            } else {
                if (have_odd && excess(tree, next, last_odd) > monotone_slack) ++trace.chain_breaks;
                last_odd = next;
                have_odd = true;
            }
        }
        const double change = class_d_norm(tree, next - y);
        trace.log.push_back({stage, n, change});
        ++trace.iterations;
        y = std::move(next);
        if (change <= opts.tol) return y;
    }
    throw Error(ErrorKind::nonconvergence,
                stage + ": Picard did not converge in " + std::to_string(opts.max_iter) + " iterations, last change " +
                    format_double(trace.log.empty() ? 0.0 : trace.log.back().change));
}

LatticeProcess moreau_core(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                           const LatticeProcess& V, const LatticeProcess& L, const MonotoneOptions& opts,
                           ReflectedSolution& trace, const std::string& stage) {
    if (!f.lower_bound) fail_validation("Moreau scheme requires declared lower bound");
    if (opts.moreau_ladder.empty()) fail_validation("empty Moreau ladder");
    std::optional<std::vector<double>> rho;
    if (opts.weighted) rho = node_values(tree, [&](NodeId v) { return std::exp(-tree.time(tree.level(v))); });

    LatticeProcess prev;
    bool have_prev = false;
    for (std::size_t k = 0; k < opts.moreau_ladder.size(); ++k) {
        const double n = opts.moreau_ladder[k];
        std::optional<std::vector<double>> weight;
        if (rho) {
            weight = *rho;
            for (double& c : *weight) c = n * c / (1.0 + n * c);
        }
        const Generator fn = moreau_approx(f, n, weight);
        const bool warm = have_prev && !opts.weighted && *fn.lipschitz * tree.step() >= 1.0;
        LatticeProcess y = picard_core(tree, xi, fn, V, L, opts.picard, warm ? &prev : nullptr, trace,
                                       stage + "/moreau n=" + format_double(n));
        if (have_prev) {
            if (!opts.weighted) {
                const double drop = excess(tree, prev, y);
                if (drop > monotone_slack) {
                    throw Error(ErrorKind::nonconvergence,
                                stage + ": Moreau ladder decreased by " + format_double(drop) + " at n=" +
                                    format_double(n));
                }
            }
            const double change = class_d_norm(tree, y - prev);
            trace.log.push_back({stage + "/moreau", static_cast<int>(k), change});
            if (change <= opts.tol) return y;
        }
        prev = std::move(y);
        have_prev = true;
    }
    if (opts.moreau_ladder.size() == 1) return prev;
    throw Error(ErrorKind::nonconvergence,
                stage + ": Moreau ladder exhausted, last change " + format_double(trace.log.back().change));
}

}  // namespace

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::direct: return "direct";
        case Scheme::linear: return "linear";
        case Scheme::picard: return "picard";
        case Scheme::moreau: return "moreau";
        case Scheme::monotone: return "monotone";
        case Scheme::decoupled: return "decoupled";
        case Scheme::fnm: return "fnm";
    }
    return "direct";
}

Scheme parse_scheme(const std::string& name) {
    for (Scheme s : {Scheme::direct, Scheme::linear, Scheme::picard, Scheme::moreau, Scheme::monotone,
                     Scheme::decoupled, Scheme::fnm}) {
        if (to_string(s) == name) return s;
    }
    fail_validation("unknown scheme '" + name + "'");
}

ReflectedSolution solve_lower_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                     const LatticeProcess& V, const LatticeProcess& L) {
    return finish(tree, f, V, backward_sweep(tree, xi, f, V, &L, nullptr), Scheme::direct);
}

ReflectedSolution solve_linear(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                               const LatticeProcess& V, const LatticeProcess& L) {
    if (!f.y_free()) fail_validation("linear scheme needs a generator independent of y");
    const double h = tree.step();
    // Accumulated drift A, so that Y + A is a Snell envelope.
    LatticeProcess acc(tree.size());
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        if (p != no_node && !tree.stopped(p)) acc(v) = acc.plus(p) + h * f(p, 0.0) + v_star(V, p, v);
        acc.plus(v) = tree.stopped(v) ? acc(v) : acc(v) + v_plus(V, v);
    }
    freeze_after_terminal(tree, acc);

    NodeValues term(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) term[i] = xi[static_cast<std::size_t>(tree.terminal_ancestor(v))] + acc(v);
    }
    const auto snell = snell_envelope(tree, L + acc, term);
    return finish(tree, f, V, snell.Y - acc, Scheme::linear);
}

ReflectedSolution solve_lipschitz_picard(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                         const LatticeProcess& V, const LatticeProcess& L,
                                         const PicardOptions& opts) {
    ReflectedSolution trace;
    auto y = picard_core(tree, xi, f, V, L, opts, nullptr, trace, "picard");
    auto sol = finish(tree, f, V, std::move(y), Scheme::picard);
    sol.iterations = trace.iterations;
    sol.log = std::move(trace.log);
    sol.chain_breaks = trace.chain_breaks;
    return sol;
}

ReflectedSolution solve_moreau(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                               const LatticeProcess& V, const LatticeProcess& L, const MonotoneOptions& opts) {
    ReflectedSolution trace;
    auto y = moreau_core(tree, xi, f, V, L, opts, trace, "moreau");
    auto sol = finish(tree, f, V, std::move(y), Scheme::moreau);
    sol.iterations = trace.iterations;
    sol.log = std::move(trace.log);
    sol.chain_breaks = trace.chain_breaks;
    return sol;
}

ReflectedSolution solve_monotone(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                 const LatticeProcess& V, const LatticeProcess& L, const MonotoneOptions& opts) {
    if (opts.ladder.empty()) fail_validation("empty truncation ladder");
    std::vector<double> g = opts.floor ? *opts.floor
                                       : node_values(tree, [&](NodeId v) { return std::exp(-tree.time(tree.level(v))); });
    if (g.size() != tree.size()) fail_validation("truncation floor has the wrong length");
    for (double x : g) {
        if (!(x > 0.0)) fail_validation("truncation floor g must be positive");
    }

    ReflectedSolution trace;
    LatticeProcess prev;
    bool have_prev = false;
    for (std::size_t k = 0; k < opts.ladder.size(); ++k) {
        const double n = opts.ladder[k];
        std::vector<double> floor(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) floor[i] = -n * g[i];
        const Generator fn = floored_generator(f, std::move(floor));
        LatticeProcess y = moreau_core(tree, xi, fn, V, L, opts, trace, "truncation n=" + format_double(n));
        if (have_prev) {
            const double rise = excess(tree, y, prev);
            if (rise > monotone_slack) {
                throw Error(ErrorKind::nonconvergence,
                            "truncation ladder increased by " + format_double(rise) + " at n=" + format_double(n));
            }
            const double change = class_d_norm(tree, y - prev);
            trace.log.push_back({"truncation", static_cast<int>(k), change});
            if (change <= opts.tol) {
                auto sol = finish(tree, f, V, std::move(y), Scheme::monotone);
                sol.iterations = trace.iterations;
                sol.log = std::move(trace.log);
                sol.chain_breaks = trace.chain_breaks;
                return sol;
            }
        }
        prev = std::move(y);
        have_prev = true;
    }
    if (opts.ladder.size() == 1) {
        auto sol = finish(tree, f, V, std::move(prev), Scheme::monotone);
        sol.iterations = trace.iterations;
        sol.log = std::move(trace.log);
        sol.chain_breaks = trace.chain_breaks;
        return sol;
    }
    throw Error(ErrorKind::nonconvergence,
                "truncation ladder exhausted, last change " + format_double(trace.log.back().change));
}

ReflectedSolution solve_lower(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                              const LatticeProcess& V, const LatticeProcess& L, Scheme scheme,
                              const SolverOptions& opts) {
    switch (scheme) {
        case Scheme::direct: return solve_lower_direct(tree, xi, f, V, L);
        case Scheme::linear: return solve_linear(tree, xi, f, V, L);
        case Scheme::picard: return solve_lipschitz_picard(tree, xi, f, V, L, opts.picard);
        case Scheme::moreau: return solve_moreau(tree, xi, f, V, L, opts.monotone);
        case Scheme::monotone: return solve_monotone(tree, xi, f, V, L, opts.monotone);
        case Scheme::decoupled:
        case Scheme::fnm: break;
    }
    fail_validation("scheme '" + to_string(scheme) + "' needs two barriers");
}

ReflectedSolution solve_upper(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                              const LatticeProcess& V, const LatticeProcess& U, Scheme scheme,
                              const SolverOptions& opts) {
    NodeValues neg_xi(xi.size());
    std::transform(xi.begin(), xi.end(), neg_xi.begin(), [](double x) { return -x; });
    const LatticeProcess neg_v = V.nodes() == 0 ? V : -V;
    auto sol = solve_lower(tree, neg_xi, mirrored_generator(f), neg_v, -U, scheme, opts);
    sol.Y = -sol.Y;
    sol.M = -sol.M;
    sol.K = -sol.K;
    return sol;
}

ReflectedSolution solve_upper_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                     const LatticeProcess& V, const LatticeProcess& U) {
    return finish(tree, f, V, backward_sweep(tree, xi, f, V, nullptr, &U), Scheme::direct);
}

double lower_minimality(const FilteredTree& tree, const LatticeProcess& Y, const LatticeProcess& L,
                        const LatticeProcess& K) {
    double acc = 0.0;
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        const double ks = jump_star(tree, K, v);
        const double kp = jump_plus(tree, K, v);
        if (ks != 0.0 && std::isfinite(L.plus(p))) {
            acc += tree.reach_probability(v) * std::abs((Y.plus(p) - L.plus(p)) * ks);
        }
        if (kp != 0.0 && std::isfinite(L(v))) acc += tree.reach_probability(v) * std::abs((Y(v) - L(v)) * kp);
    }
    return acc;
}

LowerChecks check_lower_solution(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                 const LatticeProcess& V, const LatticeProcess& L, const ReflectedSolution& sol) {
    constexpr double tol = 1e-9;
    LowerChecks c;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        c.barrier_gap = std::max({c.barrier_gap, L(v) - sol.Y(v), L.plus(v) - sol.Y.plus(v)});
    }
    c.dynamics = dynamics_residual(tree, xi, f, V, sol.Y, sol.M, sol.K);
    c.minimality = lower_minimality(tree, sol.Y, L, sol.K);
    c.k_decrease = worst_decrease(tree, sol.K);
    c.k_predictability = predictability_gap(tree, sol.K);
    c.generator_cost = generator_cost(tree, f, sol.Y);
    if (c.barrier_gap > tol) {
        c.failure = "Y below the barrier by " + format_double(c.barrier_gap);
    } else if (c.dynamics > tol) {
        c.failure = "dynamics residual " + format_double(c.dynamics);
    } else if (c.minimality > tol) {
        c.failure = "reflection acts off the barrier, residual " + format_double(c.minimality);
    } else if (c.k_decrease < -tol) {
        c.failure = "K decreases by " + format_double(-c.k_decrease);
    } else if (c.k_predictability > tol) {
        c.failure = "K is not predictable, spread " + format_double(c.k_predictability);
    }
    c.ok = c.failure.empty();
    return c;
}

RepresentationReport representation_check(const FilteredTree& tree, const ReflectedSolution& sol,
                                          const Generator& f, const NodeValues& xi, const LatticeProcess& L,
                                          const LatticeProcess& V, const OracleBudget& budget) {
    RepresentationReport rep;
    auto gap = [&](const LatticeProcess& values) {
        double worst = 0.0;
        for (NodeId v : tree.order()) {
            if (tree.stopped(v) && !tree.at_terminal(v)) continue;
            worst = std::max(worst, std::abs(values(v) - sol.Y(v)));
            if (!tree.stopped(v)) worst = std::max(worst, std::abs(values.plus(v) - sol.Y.plus(v)));
        }
        return worst;
    };
    const auto nonlinear = oracle_optimal_stopping(tree, L, xi, f, V, RuleKind::system, budget);
    rep.nonlinear_gap = gap(nonlinear.values);
    rep.rules = nonlinear.rules;
    const auto frozen = oracle_optimal_stopping(tree, L, xi, frozen_generator(f, sol.Y), V, RuleKind::system, budget);
    rep.frozen_gap = gap(frozen.values);
    return rep;
}

AprioriReport apriori_diagnostics(const FilteredTree& tree, const ReflectedSolution& sol, const Generator& f,
                                  const LatticeProcess& V, const NodeValues& xi, const LatticeProcess& L,
                                  const LatticeProcess& X) {
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        if (X(v) < L(v) - 1e-12 || X.plus(v) < L.plus(v) - 1e-12) {
            fail_validation("certificate X must dominate L (node " + std::to_string(v) + ")");
        }
    }
    const double h = tree.step();
    AprioriReport rep;

    // Running sum of h f(r, Y(r+)) along each path, then conditional expectations.
    std::vector<double> run(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        if (p == no_node) continue;
        const auto i = static_cast<std::size_t>(v);
        run[i] = run[static_cast<std::size_t>(p)] + (tree.stopped(p) ? 0.0 : h * f(p, sol.Y.plus(p)));
    }
    std::vector<double> full(tree.size(), 0.0), stated(tree.size(), 0.0);
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            const double vt = V.nodes() == 0 ? 0.0 : V(v);
            stated[i] = run[i] + vt + sol.K(v);
            full[i] = stated[i] + xi[static_cast<std::size_t>(tree.terminal_ancestor(v))];
            continue;
        }
        full[i] = tree.expect_children(v, full);
        stated[i] = tree.expect_children(v, stated);
    }
    const double y0 = sol.Y(tree.root());
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        for (Phase ph : {Phase::instant, Phase::plus}) {
            rep.identity_residual = std::max(rep.identity_residual, std::abs(sol.M(v, ph) - (full[i] - y0)));
            rep.stated_identity_residual =
                std::max(rep.stated_identity_residual, std::abs(sol.M(v, ph) - (stated[i] - y0)));
        }
    }

    rep.generator_cost = generator_cost(tree, f, sol.Y);
    for (NodeId v : tree.order()) {
        if (tree.at_terminal(v)) rep.expected_k += tree.reach_probability(v) * sol.K(v);
    }
    rep.lhs = rep.generator_cost + rep.expected_k;
    rep.norm_y = class_d_norm(tree, sol.Y);
    rep.norm_x = class_d_norm(tree, X);
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        const double w = tree.reach_probability(v) * h;
        rep.free_cost += w * std::abs(f(v, 0.0));
        rep.x_negative_cost += w * std::max(0.0, -f(v, X.plus(v)));
    }
    rep.v_variation = V.nodes() == 0 ? 0.0 : expected_variation(tree, V);
    rep.c_variation = expected_variation(tree, doob_decompose(tree, X).drift);
    rep.rhs_aggregate = rep.norm_y + rep.norm_x + rep.free_cost + rep.v_variation + rep.x_negative_cost + rep.c_variation;
    return rep;
}

ReflectedSolution solve_lower_shifted(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                      const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& S,
                                      Scheme scheme, const SolverOptions& opts) {
    // Y - S solves the equation with f(r, y + S(r+)), driving term V + C and
    // martingale M - H, where S = S_0 + C + H.
    const auto doob = doob_decompose(tree, S);
    std::vector<double> shift(tree.size());
    for (NodeId v : tree.order()) shift[static_cast<std::size_t>(v)] = S.plus(v);
    NodeValues xs(xi.size(), 0.0);
    for (NodeId v : tree.order()) {
        if (tree.at_terminal(v)) xs[static_cast<std::size_t>(v)] = xi[static_cast<std::size_t>(v)] - S(v);
    }
    const LatticeProcess vs = V.nodes() == 0 ? doob.drift : V + doob.drift;
    auto sol = solve_lower(tree, xs, shifted_generator(f, std::move(shift)), vs, L - S, scheme, opts);
    sol.Y += S;
    sol.M += doob.martingale;
    return sol;
}

}  // namespace rbsde
