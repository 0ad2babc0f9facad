#include "helpers.hpp"

using namespace rbsde;
using namespace rbsde::test;

namespace {

const FilteredTree half = one_period({0.5, 0.5});
const NodeValues touch_xi{0, 2, 0};
const LatticeProcess touch_U = slots({{0.4, 0.4}, {2, 2}, {2, 2}});

}  // namespace

TEST_CASE("check_separation") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    CHECK(check_separation(tree, constant(tree, 0), constant(tree, 1), NodeValues(tree.size(), 0.5)).ok);

    auto L = constant(tree, 0);
    L(0) = 2;
    auto U = constant(tree, 1);
    const auto bad = check_separation(tree, L, U, NodeValues(tree.size(), 0.5));
    CHECK_FALSE(bad.ok);
    CHECK(bad.worst_gap == 1.0);
    CHECK(bad.node == 0);
    CHECK_THROWS_AS(require_separation(tree, L, U, NodeValues(tree.size(), 0.5)), Error);

    NodeValues xi(tree.size(), 0.5);
    const NodeId leaf = tree.level_nodes(2).back();
    xi[static_cast<std::size_t>(leaf)] = 3.0;
    const auto term = check_separation(tree, constant(tree, 0), constant(tree, 1), xi);
    CHECK_FALSE(term.ok);
    CHECK(term.terminal);
    CHECK(term.node == leaf);

    const auto cross = check_separation(half, slots({{0, 2}, {0, 0}, {0, 0}}), slots({{1, 3}, {5, 5}, {5, 5}}),
                                        {0, 0, 0});
    CHECK(cross.ok);
    CHECK_FALSE(cross.cross_ok);
}

TEST_CASE("decoupled scheme") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    const NodeValues mid(tree.size(), 0.5);
    const auto interior = solve_decoupled(tree, mid, zero_generator(), LatticeProcess(tree.size()), constant(tree, 0),
                                          constant(tree, 1));
    CHECK(max_abs_diff(interior.Y, constant(tree, 0.5)) == 0.0);
    CHECK(class_d_norm(tree, interior.R_plus) == 0.0);
    CHECK(class_d_norm(tree, interior.R_minus) == 0.0);
    CHECK(interior.iterations <= 1);

    const auto t = solve_decoupled(half, touch_xi, zero_generator(), LatticeProcess(3), constant(half, 0), touch_U);
    CHECK(t.Y(0) == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(jump_star(half, t.R_minus, 1) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(jump_star(half, t.R_minus, 2) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(check_double_solution(half, touch_xi, zero_generator(), LatticeProcess(3), constant(half, 0), touch_U, t).ok);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p = random_problem("lower", seed, true);
        const auto high = constant(p.tree, 1e9);
        const auto d = solve_decoupled(p.tree, p.xi, p.f, p.V, p.L, high);
        const auto l = solve_lower_direct(p.tree, p.xi, p.f, p.V, p.L);
        CHECK(max_abs_diff(d.Y, l.Y) <= 1e-8);
    }
}

TEST_CASE("direct two-barrier sweep") {
    const auto tree = FilteredTree::binomial(3, 0.5, 0.5);
    const auto c = constant(tree, 0.7);
    const auto f = logistic_generator(std::vector<double>(tree.size(), 0.3), 1.0, 1.0);
    const auto pinched = solve_double_direct(tree, NodeValues(tree.size(), 0.7), f, LatticeProcess(tree.size()), c, c);
    CHECK(max_abs_diff(pinched.Y, c) == 0.0);

    const auto t = solve_double_direct(half, touch_xi, zero_generator(), LatticeProcess(3), constant(half, 0), touch_U);
    CHECK(t.Y(0) == 0.4);

    NodeValues xi(tree.size());
    for (NodeId v : tree.order()) xi[static_cast<std::size_t>(v)] = tree.node(v).up_count - 1.5;
    const auto free = solve_double_direct(tree, xi, f, LatticeProcess(tree.size()), constant(tree, -inf),
                                          constant(tree, inf));
    CHECK(max_abs_diff(free.Y, solve_bsde(tree, xi, f).Y) == 0.0);
}

TEST_CASE("fnm ladder and scheme agreement") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const auto p = random_problem("double", seed);
        const auto dec = solve_decoupled(p.tree, p.xi, p.f, p.V, p.L, p.U);
        const auto dir = solve_double_direct(p.tree, p.xi, p.f, p.V, p.L, p.U);
        const auto fnm = solve_fnm(p.tree, p.xi, p.f, p.V, p.L, p.U);
        CHECK(class_d_norm(p.tree, dec.Y - dir.Y) <= 1e-6);
        CHECK(class_d_norm(p.tree, dec.Y - fnm.Y) <= 1e-4);
        const auto chk = check_double_solution(p.tree, p.xi, p.f, p.V, p.L, p.U, dec);
        CHECK(chk.ok);
        CHECK(chk.singular);
        CHECK(sandwich_gap(p.tree, p.xi, p.f, p.V, p.L, p.U, dec.Y) <= 1e-9);
    }
}

TEST_CASE("game value") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    const auto c = constant(tree, 0.25);
    const auto g = game_value(tree, NodeValues(tree.size(), 0.25), zero_generator(), c, c, GameMode::both);
    CHECK(max_abs_diff(*g.dp, c) == 0.0);
    CHECK(g.exact->supinf == 0.25);

    const auto t = game_value(half, touch_xi, zero_generator(), constant(half, 0), touch_U, GameMode::both);
    CHECK((*t.dp)(0) == 0.4);
    CHECK(t.exact->supinf == doctest::Approx(0.4).epsilon(1e-15));

    const auto L = slots({{0, 5}, {0, 0}, {0, 0}});
    const auto w = game_value(half, {0, 0, 0}, zero_generator(), L, constant(half, 1e9), GameMode::exact);
    CHECK(w.exact->supinf == 5.0);
    const auto at = game_value_at(half, w.exact->supinf_values, StoppingRule::at_level(half, 0));
    CHECK(at[0] == 5.0);
}

TEST_CASE("saddle check") {
    const auto c = constant(half, 1.0);
    CHECK(saddle_check(half, c, zero_generator(), c, c, {1, 1, 1}).ok);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto p = random_problem("double", seed);
        const LatticeProcess V(p.tree.size());
        const auto sol = solve_decoupled(p.tree, p.xi, p.f, V, p.L, p.U);
        const auto rep = saddle_check(p.tree, sol.Y, p.f, p.L, p.U, p.xi, {}, 1e-8);
        CHECK(rep.order_gap <= 1e-9);
        CHECK(rep.value_gap <= 1e-8);
    }
}

TEST_CASE("epsilon optimal strategies") {
    const auto c = constant(half, 1.0);
    const auto pin = epsilon_optimal(half, c, zero_generator(), c, c, {1, 1, 1}, 0.1);
    CHECK(pin.rho.action(0) == Action::stop_instant);
    CHECK(pin.delta.action(0) == Action::stop_instant);

    const auto y = solve_double_direct(half, touch_xi, zero_generator(), LatticeProcess(3), constant(half, 0), touch_U).Y;
    const auto e = epsilon_optimal(half, y, zero_generator(), constant(half, 0), touch_U, touch_xi, 0.05);
    CHECK(e.delta.action(0) == Action::stop_instant);
    CHECK(e.within_bound);

    const auto far = epsilon_optimal(half, y, zero_generator(), constant(half, -10), constant(half, 10), touch_xi, 0.05);
    CHECK(far.rho.stops_at(1));
    CHECK(far.rho.stops_at(2));
    CHECK_THROWS_AS(epsilon_optimal(half, y, zero_generator(), constant(half, 0), touch_U, touch_xi, 0.0), Error);

    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto p = random_problem("double", seed);
        const auto yy = solve_double_direct(p.tree, p.xi, p.f, LatticeProcess(p.tree.size()), p.L, p.U).Y;
        double prev = inf;
        for (double eps : {0.4, 0.2, 0.1, 0.05, 0.01}) {
            const auto s = epsilon_optimal(p.tree, yy, p.f, p.L, p.U, p.xi, eps);
            CHECK(s.within_bound);
            CHECK(s.gap <= prev + 1e-12);
            prev = s.gap;
        }
    }
}

TEST_CASE("stability bound") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RandomFamily fam;
        fam.max_system_rules = 1000;
        std::mt19937_64 rng(seed);
        const auto p = materialize(random_scenario(fam, rng));
        const auto same = stability_bound_check(p.tree, p.data(), p.data());
        CHECK(same.lhs == 0.0);
        CHECK(same.rhs == 0.0);
        CHECK(same.ok);

        auto q = p.data();
        for (auto& x : q.xi) x += 1.0;
        auto up = q.U;
        for (NodeId v : p.tree.order()) {
            if (p.tree.stopped(v)) q.U(v) = q.U.plus(v) = std::max(p.U(v), q.xi[static_cast<std::size_t>(v)]);
        }
        (void)up;
        for (NodeId v : p.tree.order()) {
            if (p.tree.stopped(v)) q.L(v) = q.L.plus(v) = p.L(v);
        }
        const auto rep = stability_bound_check(p.tree, p.data(), q);
        CHECK(rep.xi_term == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rep.ok);
    }
}
