#include "helpers.hpp"

using namespace rbsde;
using namespace rbsde::test;

namespace {

const FilteredTree half = one_period({0.5, 0.5});

}  // namespace

TEST_CASE("solve_linear") {
    const auto tree = FilteredTree::binomial(3, 0.5, 0.4);
    std::vector<double> a(tree.size());
    for (NodeId v : tree.order()) a[static_cast<std::size_t>(v)] = 0.1 * tree.node(v).up_count - 0.05;
    NodeValues xi(tree.size());
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = tree.node(v).up_count - 1.0;
    const auto f = constant_generator(a);
    const auto V = LatticeProcess(tree.size());
    const auto low = solve_linear(tree, xi, f, V, constant(tree, -1e9));
    CHECK(max_abs_diff(low.Y, solve_bsde(tree, xi, f, V).Y) <= 1e-12);

    LatticeProcess L(tree.size());
    for (NodeId v : tree.order()) L(v) = L.plus(v) = 0.3 * tree.node(v).up_count - 0.2;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) xi[static_cast<std::size_t>(v)] = std::max(xi[static_cast<std::size_t>(v)], L(v));
    }
    const auto snell = solve_linear(tree, xi, zero_generator(), V, L);
    CHECK(max_abs_diff(snell.Y, snell_envelope(tree, L, xi).Y) <= 1e-15);

    const auto drift = solve_linear(half, {0, 0, 0}, constant_generator({1, 1, 1}), LatticeProcess(3),
                                    slots({{0, 0}, {0, 0}, {0, 0}}));
    CHECK(drift.Y(0) == 1.0);
    CHECK(class_d_norm(half, drift.K) == 0.0);
}

TEST_CASE("Picard scheme") {
    const auto tree = FilteredTree::binomial(2, 0.5, 0.5);
    NodeValues xi(tree.size(), 0.0);
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = tree.node(v).up_count;
    auto f = constant_generator(std::vector<double>(tree.size(), 0.2));
    f.lipschitz = 0.0;
    const auto L = constant(tree, 0.5);
    const auto p = solve_lipschitz_picard(tree, xi, f, LatticeProcess(tree.size()), L);
    CHECK(max_abs_diff(p.Y, solve_linear(tree, xi, f, LatticeProcess(tree.size()), L).Y) <= 1e-14);
    CHECK(p.iterations <= 2);

    // lambda h = 1: unconstrained Y(0+) = 1, lifted to 2 at the instant
    const auto g = affine_generator({0, 0, 0}, 1.0);
    const auto L0 = slots({{2, 0}, {-inf, -inf}, {-inf, -inf}});
    const auto s = solve_lipschitz_picard(half, {0, 3, 1}, g, LatticeProcess(3), L0);
    CHECK(s.Y(0) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s.Y.plus(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(jump_plus(half, s.K, 0) == doctest::Approx(1.0).epsilon(1e-12));

    // plain map, lambda h < 1: iterates bracket the solution
    const auto tb = FilteredTree::binomial(3, 0.25, 0.5);
    NodeValues xb(tb.size());
    for (NodeId v : tb.order()) xb[static_cast<std::size_t>(v)] = std::sin(1.0 + v);
    const auto fb = affine_generator(std::vector<double>(tb.size(), 0.3), 2.0);
    const auto Lb = constant(tb, 0.1);
    for (NodeId v : tb.order()) {
        if (tb.stopped(v)) xb[static_cast<std::size_t>(v)] = std::max(xb[static_cast<std::size_t>(v)], 0.1);
    }
    const auto pb = solve_lipschitz_picard(tb, xb, fb, LatticeProcess(tb.size()), Lb);
    CHECK(max_abs_diff(pb.Y, solve_lower_direct(tb, xb, fb, LatticeProcess(tb.size()), Lb).Y) <= 1e-9);
    CHECK_THROWS_AS(solve_lipschitz_picard(tb, xb, power_generator(std::vector<double>(tb.size(), 0), 1, 3),
                                           LatticeProcess(tb.size()), Lb),
                    Error);
}

TEST_CASE("monotone scheme") {
    const auto tree = FilteredTree::binomial(2, 0.5, 0.5);
    NodeValues xi(tree.size());
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = 0.5 * tree.node(v).up_count;
    const auto V = LatticeProcess(tree.size());
    const auto L = constant(tree, 0.2);
    auto lip = affine_generator(std::vector<double>(tree.size(), 0.1), 0.5);
    const auto m = solve_monotone(tree, xi, lip, V, L);
    CHECK(max_abs_diff(m.Y, solve_lipschitz_picard(tree, xi, lip, V, L).Y) <= 1e-8);

    const auto cube = power_generator(std::vector<double>(tree.size(), 0.0), 1.0, 3.0);
    const auto free = solve_monotone(tree, xi, cube, V, constant(tree, -1e9));
    CHECK(max_abs_diff(free.Y, solve_bsde(tree, xi, cube, V).Y) <= 1e-8);

    const auto c1 = power_generator({0, 0, 0}, 1.0, 3.0);
    const auto L0 = slots({{2, -inf}, {-inf, -inf}, {-inf, -inf}});
    const auto s = solve_monotone(half, {0, 3, 1}, c1, LatticeProcess(3), L0);
    CHECK(s.Y(0) == doctest::Approx(2.0).epsilon(1e-8));
    CHECK(lower_minimality(half, s.Y, L0, s.K) <= 1e-9);
    CHECK(check_lower_solution(half, {0, 3, 1}, c1, LatticeProcess(3), L0, s).ok);
}

TEST_CASE("moreau scheme") {
    const auto tree = FilteredTree::binomial(2, 0.5, 0.5);
    NodeValues xi(tree.size());
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = 0.5 * tree.node(v).up_count;
    auto f = logistic_generator(std::vector<double>(tree.size(), 0.0), 1.0, 2.0);
    f.lower_bound = std::vector<double>(tree.size(), -0.5);
    const auto V = LatticeProcess(tree.size());
    const auto L = constant(tree, 0.2);
    const auto s = solve_moreau(tree, xi, f, V, L);
    CHECK(max_abs_diff(s.Y, solve_lower_direct(tree, xi, f, V, L).Y) <= 1e-6);
}

TEST_CASE("representation and diagnostics") {
    const auto tree = FilteredTree::binomial(2, 0.5, 0.5);
    NodeValues xi(tree.size());
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = tree.node(v).up_count - 1.0;
    const auto f = logistic_generator(std::vector<double>(tree.size(), 0.1), 1.0, 1.0);
    const auto V = LatticeProcess(tree.size());
    const auto low = constant(tree, -1e9);
    const auto inactive = solve_lower_direct(tree, xi, f, V, low);
    const auto rep = representation_check(tree, inactive, f, xi, low, V);
    CHECK(rep.nonlinear_gap <= 1e-9);
    CHECK(rep.frozen_gap <= 1e-9);
    const auto bsde = solve_bsde(tree, xi, f, V);
    const auto ap = apriori_diagnostics(tree, inactive, f, V, xi, low, inactive.Y);
    CHECK(ap.expected_k == 0.0);
    CHECK(max_abs_diff(inactive.M, bsde.M) <= 1e-12);
    CHECK(ap.identity_residual <= 1e-10);

    const auto g = affine_generator({0, 0, 0}, 1.0);
    const auto L0 = slots({{2, 0}, {-inf, -inf}, {-inf, -inf}});
    const auto s = solve_lower_direct(half, {0, 3, 1}, g, LatticeProcess(3), L0);
    const auto r2 = representation_check(half, s, g, {0, 3, 1}, L0, LatticeProcess(3));
    CHECK(s.Y(0) == 2.0);
    CHECK(r2.nonlinear_gap <= 1e-9);

    const auto c = solve_lower_direct(half, {0.5, 0.5, 0.5}, zero_generator(), LatticeProcess(3), constant(half, 0.5));
    CHECK(max_abs_diff(c.Y, constant(half, 0.5)) == 0.0);
    CHECK(representation_check(half, c, zero_generator(), {0.5, 0.5, 0.5}, constant(half, 0.5), LatticeProcess(3))
              .nonlinear_gap == 0.0);

    const auto zero = solve_lower_direct(tree, xi, zero_generator(), V, constant(tree, -0.5));
    const auto z = apriori_diagnostics(tree, zero, zero_generator(), V, xi, constant(tree, -0.5), zero.Y);
    CHECK(z.identity_residual <= 1e-12);

    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto p = random_problem("lower", seed, true);
        const auto sol = solve_lower_direct(p.tree, p.xi, p.f, p.V, p.L);
        const auto d = apriori_diagnostics(p.tree, sol, p.f, p.V, p.xi, p.L, sol.Y + constant(p.tree, 0.1));
        CHECK(d.identity_residual <= 1e-10);
        CHECK(std::isfinite(d.rhs_aggregate));
        CHECK(check_lower_solution(p.tree, p.xi, p.f, p.V, p.L, sol).ok);
    }
}

TEST_CASE("upper barrier mirror and shift") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto p = random_problem("double", seed, true);
        const auto mirror = solve_upper(p.tree, p.xi, p.f, p.V, p.U, Scheme::direct);
        const auto direct = solve_upper_direct(p.tree, p.xi, p.f, p.V, p.U);
        CHECK(max_abs_diff(mirror.Y, direct.Y) <= 1e-12);

        LatticeProcess S(p.tree.size());
        for (NodeId v : p.tree.order()) S(v) = S.plus(v) = 0.1 * v;
        freeze_after_terminal(p.tree, S);
        const auto shifted = solve_lower_shifted(p.tree, p.xi, p.f, p.V, p.L, S, Scheme::direct);
        const auto plain = solve_lower_direct(p.tree, p.xi, p.f, p.V, p.L);
        CHECK(max_abs_diff(shifted.Y, plain.Y) <= 1e-9);
    }
}

TEST_CASE("scheme names") {
    for (Scheme s : {Scheme::direct, Scheme::linear, Scheme::picard, Scheme::moreau, Scheme::monotone,
                     Scheme::decoupled, Scheme::fnm}) {
        CHECK(parse_scheme(to_string(s)) == s);
    }
    CHECK_THROWS_AS(parse_scheme("euler"), Error);
    CHECK_THROWS_AS(solve_lower(half, {0, 0, 0}, zero_generator(), LatticeProcess(3), constant(half, -1),
                                Scheme::decoupled),
                    Error);
}
