#include "rbsde/verify.hpp"

#include "rbsde/error.hpp"
#include "rbsde/snell.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

namespace rbsde {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

enum Stream : std::uint64_t { double_stream = 1, lower_stream = 2, free_stream = 3, stability_stream = 4,
                              comparison_stream = 5 };

RandomFamily double_family() { return RandomFamily{3, 3, "double", false, true, 0.0}; }
RandomFamily lower_family() { return RandomFamily{3, 3, "lower", true, true, 0.0}; }
RandomFamily free_family() { return RandomFamily{3, 3, "none", false, true, 0.0}; }
RandomFamily stability_family() { return RandomFamily{3, 3, "double", false, true, 1000.0}; }

struct Trial {
    bool ok = true;
    double main = 0.0;
    std::string failure;
    bool skipped = false;
    std::string skip;
    double minimality = 0.0;
    bool singular = true;
    std::string invariant_failure;
    std::map<std::string, double> metrics;

    void metric(const std::string& k, double v) {
        auto it = metrics.find(k);
        if (it == metrics.end() || v > it->second) metrics[k] = v;
    }
    void fail(const std::string& why) {
        if (ok) failure = why;
        ok = false;
    }
};

std::mt19937_64 trial_rng(const VerifyConfig& cfg, Stream stream, int k) {
    return std::mt19937_64(trial_seed(cfg.seed + 0x100000001b3ULL * stream, k));
}

Problem draw(const VerifyConfig& cfg, const RandomFamily& fallback, Stream stream, int k) {
    auto rng = trial_rng(cfg, stream, k);
    return materialize(random_scenario(cfg.family.value_or(fallback), rng, "trial " + std::to_string(k)));
}

double slot_excess(const FilteredTree& tree, const LatticeProcess& a, const LatticeProcess& b) {
    double worst = -inf;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v) && !tree.at_terminal(v)) continue;
        worst = std::max(worst, a(v) - b(v));
        if (!tree.stopped(v)) worst = std::max(worst, a.plus(v) - b.plus(v));
    }
    return worst;
}

void note_lower(Trial& t, const Problem& p, const ReflectedSolution& sol, const std::string& label) {
    const auto c = check_lower_solution(p.tree, p.xi, p.f, p.V, p.L, sol);
    t.minimality = std::max(t.minimality, c.minimality);
    if (!c.ok && t.invariant_failure.empty()) t.invariant_failure = label + ": " + c.failure;
}

void note_double(Trial& t, const Problem& p, const DoubleBarrierSolution& sol, const std::string& label) {
    const auto c = check_double_solution(p.tree, p.xi, p.f, p.V, p.L, p.U, sol);
    t.minimality = std::max({t.minimality, c.minimality_lower, c.minimality_upper});
    t.singular = t.singular && c.singular;
    if (!c.ok && t.invariant_failure.empty()) t.invariant_failure = label + ": " + c.failure;
}

// Data ordered above p: larger xi, f + c, larger V increments, larger barriers.
Problem ordered_above(const Problem& p, std::mt19937_64& rng, bool two_barriers) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& tree = p.tree;
    const std::size_t n = tree.size();
    Problem q = p;
    const double delta = unit(rng) < 0.2 ? 0.0 : 0.5 * unit(rng);
    for (auto& x : q.xi) x += delta * unit(rng);
    std::vector<double> c(n);
    for (double& x : c) x = unit(rng) < 0.5 ? 0.0 : 0.5 * unit(rng);
    q.f = sum_generator(p.f, constant_generator(c));
    std::vector<double> star(n), plus(n);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        star[i] = jump_star(tree, p.V, v) + (unit(rng) < 0.5 ? 0.0 : 0.2 * unit(rng));
        plus[i] = jump_plus(tree, p.V, v) + (unit(rng) < 0.5 ? 0.0 : 0.2 * unit(rng));
    }
    q.V = from_increments(tree, star, plus);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            if (two_barriers) q.U(v) = q.U.plus(v) = std::max(p.U(v), q.xi[i]);
            continue;
        }
        for (Phase ph : {Phase::instant, Phase::plus}) {
            q.L(v, ph) = p.L(v, ph) + delta * unit(rng);
            if (two_barriers) q.U(v, ph) = p.U(v, ph) + delta;
        }
    }
    return q;
}

// ---------------------------------------------------------------------------

Trial game_value_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, double_family(), double_stream, k);
    const auto sol = solve_decoupled(p.tree, p.xi, p.f, p.V, p.L, p.U);
    note_double(t, p, sol, "decoupled");
    const auto g = oracle_game(p.tree, p.xi, p.f, p.L, p.U, RuleKind::system, RuleKind::system, cfg.budget);
    t.main = std::abs(sol.Y(p.tree.root()) - g.supinf);
    const double order = std::abs(g.supinf - g.infsup);
    t.metric("order_gap", order);
    const auto dp = backward_sweep(p.tree, p.xi, p.f, p.V, &p.L, &p.U);
    double slot_gap = 0.0;
    for (NodeId v : p.tree.order()) {
        if (p.tree.stopped(v)) continue;
        slot_gap = std::max({slot_gap, std::abs(dp(v) - g.supinf_values(v)),
                             std::abs(dp.plus(v) - g.supinf_values.plus(v))});
    }
    t.metric("dp_slot_gap", slot_gap);
    if (t.main > 1e-6) t.fail("|Y0 - supinf| = " + format_double(t.main));
    if (order > 1e-9) t.fail("|supinf - infsup| = " + format_double(order));
    return t;
}

Trial agreement_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, double_family(), double_stream, k);
    const auto dec = solve_decoupled(p.tree, p.xi, p.f, p.V, p.L, p.U);
    const auto dir = solve_double_direct(p.tree, p.xi, p.f, p.V, p.L, p.U);
    FnmOptions fo;
    fo.ladder = {1, 2, 4, 8};
    const auto fnm = solve_fnm(p.tree, p.xi, p.f, p.V, p.L, p.U, fo);
    note_double(t, p, dec, "decoupled");
    note_double(t, p, dir, "direct");
    const double gd = class_d_norm(p.tree, dec.Y - dir.Y);
    const double gf = class_d_norm(p.tree, dec.Y - fnm.Y);
    t.metric("decoupled_direct", gd);
    t.metric("decoupled_fnm", gf);
    t.main = std::max(gd / 1e-6, gf / 1e-4);
    if (gd > 1e-6) t.fail("decoupled vs direct " + format_double(gd));
    if (gf > 1e-4) t.fail("decoupled vs fnm " + format_double(gf));
    return t;
}

Trial representation_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, lower_family(), lower_stream, k);
    const Scheme scheme = default_lower_scheme(p.f);
    const auto sol = solve_lower(p.tree, p.xi, p.f, p.V, p.L, scheme);
    note_lower(t, p, sol, to_string(scheme));
    const auto dir = solve_lower_direct(p.tree, p.xi, p.f, p.V, p.L);
    note_lower(t, p, dir, "direct");
    t.metric("scheme_vs_direct", class_d_norm(p.tree, sol.Y - dir.Y));
    const auto rep = representation_check(p.tree, sol, p.f, p.xi, p.L, p.V, cfg.budget);
    t.metric("nonlinear_gap", rep.nonlinear_gap);
    t.metric("frozen_gap", rep.frozen_gap);
    t.main = std::max(rep.nonlinear_gap, rep.frozen_gap);
    if (t.main > 1e-8) t.fail("representation gap " + format_double(t.main));
    return t;
}

Trial comparison_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    auto rng = trial_rng(cfg, comparison_stream, k);
    for (const bool two : {false, true}) {
        RandomFamily fam = cfg.family.value_or(two ? double_family() : lower_family());
        fam.barrier = two ? "double" : "lower";
        fam.with_v = !two;
        const Problem p1 = materialize(random_scenario(fam, rng));
        const Problem p2 = ordered_above(p1, rng, two);
        double worst;
        if (two) {
            DecoupledOptions fine;
            fine.tol = 1e-13;
            const auto a = solve_decoupled(p1.tree, p1.xi, p1.f, p1.V, p1.L, p1.U, fine);
            auto b = solve_decoupled(p2.tree, p2.xi, p2.f, p2.V, p2.L, p2.U, fine);
            const auto ad = solve_double_direct(p1.tree, p1.xi, p1.f, p1.V, p1.L, p1.U);
            auto bd = solve_double_direct(p2.tree, p2.xi, p2.f, p2.V, p2.L, p2.U);
            if (cfg.tamper) {
                cfg.tamper(p2.tree, b.Y);
                cfg.tamper(p2.tree, bd.Y);
            }
            note_double(t, p1, a, "decoupled 1");
            note_double(t, p2, b, "decoupled 2");
            note_double(t, p1, ad, "direct 1");
            note_double(t, p2, bd, "direct 2");
            worst = std::max(slot_excess(p1.tree, a.Y, b.Y), slot_excess(p1.tree, ad.Y, bd.Y));
            t.metric("double", worst);
        } else {
            const Scheme s1 = default_lower_scheme(p1.f), s2 = default_lower_scheme(p2.f);
            const auto a = solve_lower(p1.tree, p1.xi, p1.f, p1.V, p1.L, s1);
            auto b = solve_lower(p2.tree, p2.xi, p2.f, p2.V, p2.L, s2);
            const auto ad = solve_lower_direct(p1.tree, p1.xi, p1.f, p1.V, p1.L);
            auto bd = solve_lower_direct(p2.tree, p2.xi, p2.f, p2.V, p2.L);
            if (cfg.tamper) {
                cfg.tamper(p2.tree, b.Y);
                cfg.tamper(p2.tree, bd.Y);
            }
            note_lower(t, p1, a, "lower 1");
            note_lower(t, p2, b, "lower 2");
            note_lower(t, p1, ad, "direct 1");
            note_lower(t, p2, bd, "direct 2");
            worst = std::max(slot_excess(p1.tree, a.Y, b.Y), slot_excess(p1.tree, ad.Y, bd.Y));
            t.metric("lower", worst);
        }
        t.main = std::max(t.main, worst);
        if (worst > 1e-10) t.fail(std::string(two ? "two-barrier" : "lower") + " Y1 - Y2 = " + format_double(worst));
    }
    return t;
}

Trial minimality_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    {
        const Problem p = draw(cfg, double_family(), double_stream, k);
        note_double(t, p, solve_decoupled(p.tree, p.xi, p.f, p.V, p.L, p.U), "decoupled");
        note_double(t, p, solve_double_direct(p.tree, p.xi, p.f, p.V, p.L, p.U), "direct");
        FnmOptions fo;
        note_double(t, p, solve_fnm(p.tree, p.xi, p.f, p.V, p.L, p.U, fo), "fnm");
    }
    {
        const Problem p = draw(cfg, lower_family(), lower_stream, k);
        note_lower(t, p, solve_lower(p.tree, p.xi, p.f, p.V, p.L, default_lower_scheme(p.f)), "lower");
        note_lower(t, p, solve_lower_direct(p.tree, p.xi, p.f, p.V, p.L), "direct");
    }
    const Trial c = comparison_trial(cfg, k);
    t.minimality = std::max(t.minimality, c.minimality);
    t.singular = t.singular && c.singular;
    if (t.invariant_failure.empty()) t.invariant_failure = c.invariant_failure;
    t.main = t.minimality;
    if (!t.invariant_failure.empty()) t.fail(t.invariant_failure);
    if (t.minimality > 1e-9) t.fail("flat-off residual " + format_double(t.minimality));
    if (!t.singular) t.fail("R+ and R- charge the same slot");
    return t;
}

Trial decomposition_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, lower_family(), lower_stream, k);
    const auto snell = snell_envelope(p.tree, p.L, p.xi);
    t.metric("mertens_residual", snell.parts.residual);
    const auto sol = solve_lower(p.tree, p.xi, p.f, p.V, p.L, default_lower_scheme(p.f));
    note_lower(t, p, sol, "lower");
    auto rng = trial_rng(cfg, lower_stream, k + 1000003);
    std::uniform_real_distribution<double> unit(0.0, 0.5);
    LatticeProcess X = sol.Y;
    for (NodeId v : p.tree.order()) {
        X(v) += unit(rng);
        X.plus(v) += unit(rng);
    }
    const auto ap = apriori_diagnostics(p.tree, sol, p.f, p.V, p.xi, p.L, X);
    t.metric("identity_residual", ap.identity_residual);
    t.metric("stated_identity_residual", ap.stated_identity_residual);
    t.metric("lhs_over_rhs", ap.rhs_aggregate > 0 ? ap.lhs / ap.rhs_aggregate : 0.0);
    t.main = std::max(snell.parts.residual / 1e-12, ap.identity_residual / 1e-10);
    if (snell.parts.residual > 1e-12) t.fail("Mertens reconstruction " + format_double(snell.parts.residual));
    if (ap.identity_residual > 1e-10) t.fail("martingale identity " + format_double(ap.identity_residual));
    if (!std::isfinite(ap.lhs) || !std::isfinite(ap.rhs_aggregate)) t.fail("a priori terms not finite");
    return t;
}

Trial lemma_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, free_family(), free_stream, k);
    const auto bsde = solve_bsde(p.tree, p.xi, p.f);
    const double tol = p.tree.horizon() * 1e-12;
    const auto rep = lemma_bound_check(p.tree, p.xi, p.f, bsde.Y, tol);
    t.main = rep.worst_stated;
    t.metric("corrected", rep.worst_corrected);
    if (!rep.stated_holds) {
        t.fail("stated bound exceeded by " + format_double(rep.worst_stated) + " at node " +
               std::to_string(rep.stated_witness));
    }
    return t;
}

Trial fexp_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, free_family(), free_stream, k);
    const auto& tree = p.tree;
    const double h = tree.step();
    auto rng = trial_rng(cfg, free_stream, k + 2000003);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const StoppingRule T = StoppingRule::terminal(tree);
    const StoppingRule root = StoppingRule::at_level(tree, 0);
    const NodeId r = tree.root();
    const double tol = 1e-10;
    double gap = 0.0;

    const auto y = f_expectation_process(tree, T, p.xi, p.f);

    // (i) increasing V gives a supermartingale
    {
        std::vector<double> star(tree.size()), plus(tree.size());
        for (std::size_t i = 0; i < star.size(); ++i) {
            star[i] = 0.3 * unit(rng);
            plus[i] = 0.3 * unit(rng);
        }
        const auto V = from_increments(tree, star, plus);
        const auto x = solve_bsde(tree, p.xi, p.f, V).Y;
        double worst = 0.0;
        for (NodeId v : tree.order()) {
            if (tree.stopped(v)) continue;
            const double step = implicit_step(tree.expect_children(v, x), h, p.f, v);
            worst = std::max({worst, step - x.plus(v), x.plus(v) - x(v)});
        }
        t.metric("supermartingale", worst);
        gap = std::max(gap, worst);
    }
    // (ii) monotone in the terminal value
    {
        NodeValues z = p.xi;
        for (double& x : z) x += unit(rng);
        const auto y2 = f_expectation_process(tree, T, z, p.f);
        const double worst = std::max(0.0, slot_excess(tree, y, y2));
        t.metric("monotonicity", worst);
        gap = std::max(gap, worst);
    }
    // (iii) stability estimate between two generators
    {
        std::vector<double> c(tree.size());
        for (double& x : c) x = unit(rng) - 0.5;
        const Generator f2 = sum_generator(p.f, constant_generator(c));
        NodeValues z = p.xi;
        for (double& x : z) x += unit(rng) - 0.5;
        const auto y2 = f_expectation_process(tree, T, z, f2);
        std::vector<double> rhs(tree.size(), 0.0);
        auto ord = tree.order();
        for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
            const NodeId v = *it;
            const auto i = static_cast<std::size_t>(v);
            if (tree.stopped(v)) {
                rhs[i] = tree.at_terminal(v) ? std::abs(p.xi[i] - z[i]) : 0.0;
                continue;
            }
            rhs[i] = tree.expect_children(v, rhs) + h * std::abs(p.f(v, y.plus(v)) - f2(v, y.plus(v)));
        }
        double worst = 0.0;
        for (NodeId v : tree.order()) {
            if (tree.stopped(v)) continue;
            worst = std::max(worst, std::abs(y(v) - y2(v)) - rhs[static_cast<std::size_t>(v)]);
        }
        t.metric("stability", worst);
        gap = std::max(gap, worst);
    }
    // (iv) localisation on an F_1 event
    if (tree.horizon() >= 1 && !tree.stopped(r)) {
        const StoppingRule alpha = StoppingRule::at_level(tree, 1);
        std::vector<std::uint8_t> in_a(tree.size(), 0);
        for (NodeId v : tree.order()) {
            const NodeId par = tree.node(v).parent;
            if (tree.level(v) == 1) in_a[static_cast<std::size_t>(v)] = unit(rng) < 0.5;
            if (tree.level(v) > 1) in_a[static_cast<std::size_t>(v)] = in_a[static_cast<std::size_t>(par)];
        }
        NodeValues z(tree.size());
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = in_a[i] ? p.xi[i] : 0.0;
        const auto lhs = f_expectation(tree, alpha, T, p.xi, p.f);
        const auto rhs = f_expectation(tree, alpha, T, z, masked_generator(p.f, in_a));
        double worst = 0.0;
        for (NodeId v : tree.order()) {
            if (!alpha.stops_at(v)) continue;
            const auto i = static_cast<std::size_t>(v);
            worst = std::max(worst, std::abs((in_a[i] ? lhs[i] : 0.0) - rhs[i]));
        }
        t.metric("localisation", worst);
        gap = std::max(gap, worst);
    }
    // (v) extension past beta with the generator switched off
    {
        const int lvl = std::uniform_int_distribution<int>(0, tree.horizon())(rng);
        const StoppingRule beta = StoppingRule::at_level(tree, lvl);
        NodeValues zb(tree.size(), 0.0), zg(tree.size(), 0.0);
        std::vector<std::uint8_t> before(tree.size(), 0);
        for (NodeId v : tree.order()) {
            const auto i = static_cast<std::size_t>(v);
            const NodeId par = tree.node(v).parent;
            zb[i] = beta.stops_at(v) ? p.xi[i] + unit(rng) : (par == no_node ? 0.0 : zb[static_cast<std::size_t>(par)]);
            zg[i] = zb[i];
            before[i] = !beta.stopped_by(v);
        }
        const double a = f_expectation(tree, root, beta, zb, p.f)[static_cast<std::size_t>(r)];
        const double b = f_expectation(tree, root, T, zg, masked_generator(p.f, before))[static_cast<std::size_t>(r)];
        t.metric("extension", std::abs(a - b));
        gap = std::max(gap, std::abs(a - b));
    }
    // corrected generator bound
    {
        const auto rep = lemma_bound_check(tree, p.xi, p.f, y, tree.horizon() * 1e-12);
        t.metric("corrected_bound", rep.worst_corrected);
        if (!rep.corrected_holds) t.fail("corrected bound exceeded by " + format_double(rep.worst_corrected));
    }
    t.main = gap;
    if (gap > tol) t.fail("f-expectation property gap " + format_double(gap));
    return t;
}

Trial monotone_stability_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    const Problem p = draw(cfg, double_family(), double_stream, k);
    const auto& tree = p.tree;
    const auto limit = solve_decoupled(tree, p.xi, p.f, p.V, p.L, p.U);
    note_double(t, p, limit, "limit");
    const double slack = 1e-9;

    // f_n = f - 16^{-n}, increasing to f
    double prev_gap = inf;
    LatticeProcess prev_y;
    double final_gap = 0.0;
    for (int n = 1; n <= 5; ++n) {
        const Generator fn =
            sum_generator(p.f, constant_generator(std::vector<double>(tree.size(), -std::pow(16.0, -n))));
        const auto s = solve_decoupled(tree, p.xi, fn, p.V, p.L, p.U);
        note_double(t, Problem{tree, p.xi, fn, p.V, p.L, p.U, std::nullopt, {}, {}}, s, "generator ladder");
        const double g = class_d_norm(tree, limit.Y - s.Y);
        if (g > prev_gap + slack) t.fail("generator ladder gap increased at n=" + std::to_string(n));
        if (n > 1 && slot_excess(tree, prev_y, s.Y) > slack) t.fail("generator ladder not increasing at n=" + std::to_string(n));
        prev_gap = g;
        prev_y = s.Y;
        final_gap = g;
    }
    t.metric("generator_final_gap", final_gap);
    if (final_gap > 1e-4) t.fail("generator ladder final gap " + format_double(final_gap));

    // L^n = L - 32^{-n}, increasing to L
    double barrier_gap = 0.0;
    for (int n = 1; n <= 5; ++n) {
        LatticeProcess ln = p.L;
        for (NodeId v : tree.order()) {
            if (tree.stopped(v)) continue;
            ln(v) -= std::pow(32.0, -n);
            ln.plus(v) -= std::pow(32.0, -n);
        }
        const auto s = solve_decoupled(tree, p.xi, p.f, p.V, ln, p.U);
        note_double(t, Problem{tree, p.xi, p.f, p.V, ln, p.U, std::nullopt, {}, {}}, s, "barrier ladder");
        if (n > 1 && slot_excess(tree, prev_y, s.Y) > slack) t.fail("barrier ladder not increasing at n=" + std::to_string(n));
        if (slot_excess(tree, s.Y, limit.Y) > slack) t.fail("barrier ladder exceeds the limit at n=" + std::to_string(n));
        prev_y = s.Y;
        barrier_gap = class_d_norm(tree, limit.Y - s.Y);
    }
    t.metric("barrier_final_gap", barrier_gap);
    if (barrier_gap > 1e-6) t.fail("barrier ladder final gap " + format_double(barrier_gap));
    t.main = std::max(final_gap / 1e-4, barrier_gap / 1e-6);
    return t;
}

Trial stability_trial(const VerifyConfig& cfg, int k) {
    Trial t;
    auto rng = trial_rng(cfg, stability_stream, k);
    RandomFamily fam = cfg.family.value_or(stability_family());
    const Problem p = materialize(random_scenario(fam, rng));
    const auto& tree = p.tree;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    Problem q = p;
    for (auto& x : q.xi) x += 0.3 * unit(rng);
    std::vector<double> c(tree.size());
    for (double& x : c) x = 0.3 * unit(rng);
    q.f = sum_generator(p.f, constant_generator(c));
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            q.L(v) = q.L.plus(v) = std::min(p.L(v), q.xi[i]);
            q.U(v) = q.U.plus(v) = std::max(p.U(v), q.xi[i]);
            continue;
        }
        q.L(v) += 0.2 * unit(rng);
        q.L.plus(v) += 0.2 * unit(rng);
        const double top = std::max(q.L(v), q.L.plus(v));
        q.U(v) = std::max(p.U(v) + 0.2 * unit(rng), top);
        q.U.plus(v) = std::max(p.U.plus(v) + 0.2 * unit(rng), top);
    }
    const auto rep = stability_bound_check(tree, p.data(), q.data(), cfg.budget);
    t.metric("lhs", rep.lhs);
    t.metric("rhs", rep.rhs);
    t.metric("generator_term", rep.generator_term);
    t.main = rep.lhs - rep.rhs;
    if (!rep.ok) t.fail("lhs " + format_double(rep.lhs) + " > rhs " + format_double(rep.rhs));
    return t;
}

using TrialFn = Trial (*)(const VerifyConfig&, int);

struct SuiteDef {
    const char* name;
    TrialFn fn;
    double threshold;
};

const SuiteDef suites[] = {
    {"comparison", comparison_trial, 1e-10},
    {"representation", representation_trial, 1e-8},
    {"minimality", minimality_trial, 1e-9},
    {"game-value", game_value_trial, 1e-6},
    {"scheme-agreement", agreement_trial, 1.0},
    {"stability", stability_trial, 1e-9},
    {"monotone-stability", monotone_stability_trial, 1.0},
    {"decomposition", decomposition_trial, 1.0},
    {"fexp-properties", fexp_trial, 1e-10},
    {"lemma-bound", lemma_trial, 0.0},
};

}  // namespace

std::vector<std::string> suite_names() {
    std::vector<std::string> out;
    for (const auto& s : suites) out.emplace_back(s.name);
    return out;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(trial) + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void parallel_trials(int n, unsigned threads, const std::function<void(int)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max(n, 1))));
    if (threads == 1) {
        for (int k = 0; k < n; ++k) fn(k);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (int k = next++; k < n; k = next++) fn(k);
        });
    }
    for (auto& th : pool) th.join();
}

Scheme default_lower_scheme(const Generator& f) {
    if (f.y_free()) return Scheme::linear;
    if (f.lipschitz) return Scheme::picard;
    return Scheme::direct;
}

SuiteResult run_suite(const std::string& name, const VerifyConfig& cfg) {
    const SuiteDef* def = nullptr;
    for (const auto& s : suites) {
        if (name == s.name) def = &s;
    }
    if (!def) fail_validation("unknown verification suite '" + name + "'");

    std::vector<Trial> results(static_cast<std::size_t>(std::max(cfg.trials, 0)));
    parallel_trials(cfg.trials, cfg.threads, [&](int k) {
        Trial& t = results[static_cast<std::size_t>(k)];
        try {
            t = def->fn(cfg, k);
        } catch (const Error& e) {
            t = Trial{};
            if (e.kind() == ErrorKind::budget) {
                t.skipped = true;
                t.skip = e.what();
            } else {
                t.fail(std::string(to_string(e.kind())) + ": " + e.what());
                t.main = inf;
            }
        }
    });

    SuiteResult out;
    out.name = def->name;
    out.threshold = def->threshold;
    out.trials = cfg.trials;
    out.worst = cfg.trials > 0 ? -inf : 0.0;
    for (int k = 0; k < cfg.trials; ++k) {
        const Trial& t = results[static_cast<std::size_t>(k)];
        const std::string tag = "trial " + std::to_string(k) + " (seed " + std::to_string(cfg.seed) + ")";
        if (t.skipped) {
            if (!out.skipped) out.skip_reason = tag + ": " + t.skip;
            out.skipped = true;
            continue;
        }
        out.worst = std::max(out.worst, t.main);
        if (!t.ok && out.passed) {
            out.passed = false;
            out.witness = tag + ": " + t.failure;
        }
        out.minimality_worst = std::max(out.minimality_worst, t.minimality);
        if (!t.singular) out.singular = false;
        if (!t.invariant_failure.empty() && out.minimality_witness.empty()) {
            out.minimality_witness = tag + ": " + t.invariant_failure;
        }
        for (const auto& [key, value] : t.metrics) {
            auto it = out.metrics.find(key);
            if (it == out.metrics.end() || value > it->second) out.metrics[key] = value;
        }
    }
    if (out.skipped) out.passed = false;
    return out;
}

HorizonStudy horizon_study(const Problem& p, const std::string& barrier, int a_max) {
    if (a_max < 2) fail_validation("horizon study needs a_max >= 2");
    if (a_max > p.tree.horizon()) {
        fail_validation("a_max " + std::to_string(a_max) + " exceeds the tree horizon " +
                        std::to_string(p.tree.horizon()));
    }
    HorizonStudy st;
    for (int a = 1; a <= a_max; ++a) {
        const FilteredTree tr = p.tree.truncated(a);
        LatticeProcess y;
        if (barrier == "double") {
            y = solve_double_direct(tr, p.xi, p.f, p.V, p.L, p.U).Y;
        } else if (barrier == "lower") {
            y = solve_lower_direct(tr, p.xi, p.f, p.V, p.L).Y;
        } else if (barrier == "upper") {
            y = solve_upper_direct(tr, p.xi, p.f, p.V, p.U).Y;
        } else {
            y = solve_bsde(tr, p.xi, p.f, p.V).Y;
        }
        st.rows.push_back({a, y(tr.root()), 0.0, 0.0});
    }
    for (std::size_t i = 0; i + 1 < st.rows.size(); ++i) {
        st.rows[i].diff = std::abs(st.rows[i].y0 - st.rows[i + 1].y0);
        if (i > 0) st.rows[i].ratio = st.rows[i - 1].diff > 0.0 ? st.rows[i].diff / st.rows[i - 1].diff : 0.0;
    }

    // Asserting case: f = -lambda y, constant xi, no driving term, no active barrier.
    const auto& tree = p.tree;
    bool affine = p.f.affine_slope && *p.f.affine_slope > 0.0;
    const double x0 = p.xi[static_cast<std::size_t>(tree.root())];
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        if (p.f(v, 0.0) != 0.0 || p.xi[i] != x0 || p.V(v) != 0.0 || p.V.plus(v) != 0.0) affine = false;
        if (std::isfinite(p.L(v)) || std::isfinite(p.L.plus(v)) || std::isfinite(p.U(v)) || std::isfinite(p.U.plus(v))) {
            if (barrier != "none") affine = false;
        }
    }
    st.asserted = affine;
    if (affine) {
        st.lambda = *p.f.affine_slope;
        st.bound = 1.0 / (1.0 + st.lambda * tree.step()) + 1e-6;
        for (std::size_t i = 1; i + 1 < st.rows.size(); ++i) st.worst_ratio = std::max(st.worst_ratio, st.rows[i].ratio);
        st.ok = st.worst_ratio <= st.bound;
        st.note = "affine generator with constant data: geometric decay asserted";
    } else {
        st.note = "generator or data not of the contractive affine form: decay reported, not asserted";
    }
    return st;
}

}  // namespace rbsde
