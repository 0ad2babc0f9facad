#include "helpers.hpp"

using namespace rbsde;
using namespace rbsde::test;

TEST_CASE("implicit step") {
    CHECK(implicit_step(2.0, 1.0, [](double y) { return -y; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(implicit_step(5.0, 0.0, [](double y) { return -y * y * y - 100.0; }) == 5.0);
    CHECK(implicit_step(2.0, 1.0, [](double y) { return -y * y * y; }) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(implicit_step(0.0, 1.0, [](double) { return 1e12; }), Error);
}

TEST_CASE("solve_bsde") {
    const auto tree = one_period({0.5, 0.5});
    const auto lin = solve_bsde(tree, {0, 3, 1}, zero_generator());
    CHECK(lin.Y(0) == 2.0);
    const auto aff = solve_bsde(tree, {0, 3, 1}, affine_generator({0, 0, 0}, 1.0));
    CHECK(aff.Y(0) == doctest::Approx(1.0).epsilon(1e-14));
    const auto drift = solve_bsde(tree, {0, 0, 0}, constant_generator({1, 1, 1}));
    CHECK(drift.Y(0) == 1.0);
    CHECK(drift.residual <= 1e-12);
}

TEST_CASE("f_expectation") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.3);
    const NodeValues z{0, 0, 0, 1, 2, 3, 4};
    const auto root = StoppingRule::at_level(tree, 0);
    const auto one = StoppingRule::at_level(tree, 1);
    const auto T = StoppingRule::terminal(tree);
    const auto e = f_expectation(tree, one, T, z, zero_generator());
    for (NodeId v : tree.level_nodes(1)) {
        double want = 0.0;
        for (NodeId w : tree.node(v).children) want += tree.node(w).prob * z[static_cast<std::size_t>(w)];
        CHECK(e[static_cast<std::size_t>(v)] == doctest::Approx(want));
    }
    CHECK(f_expectation(tree, root, T, NodeValues(7, 2.5), zero_generator())[0] == 2.5);
    CHECK(f_expectation(tree, T, T, z, affine_generator(std::vector<double>(7, 1.0), 1.0))[6] == 4.0);
    CHECK_THROWS_AS(f_expectation(tree, T, root, z, zero_generator()), Error);
}

TEST_CASE("dominating supermartingale") {
    const auto tree = one_period({0.5, 0.5});
    const auto u = dominating_supermartingale(tree, constant(tree, -1.5), zero_generator());
    CHECK(max_abs_diff(u, constant(tree, 3.0)) == 0.0);
    const auto tail = dominating_supermartingale(tree, constant(tree, 0.0), constant_generator({1, 1, 1}));
    CHECK(tail(0) == 2.0);

    // |E^f_{0,tau}(X_tau)| <= U_0 for every rule
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-1, 1);
    const auto tb = FilteredTree::binomial(2, 0.5, 0.5);
    LatticeProcess x(tb.size());
    for (NodeId v : tb.order()) x(v) = x.plus(v) = d(rng);
    const auto f = logistic_generator(std::vector<double>(tb.size(), 0.3), 1.0, 1.0);
    const auto U = dominating_supermartingale(tb, x, f);
    enumerate_stopping_rules(tb, RuleKind::plain, [&](const StoppingRule& tau) {
        const auto z = stopped_values(tb, tau, x);
        NodeValues zeta(tb.size(), 0.0);
        for (NodeId v : tb.order()) {
            const NodeId p = tb.node(v).parent;
            zeta[static_cast<std::size_t>(v)] = tau.stops_at(v) ? z[static_cast<std::size_t>(v)] : (p == no_node ? 0.0 : zeta[static_cast<std::size_t>(p)]);
        }
        const double e = f_expectation(tb, StoppingRule::at_level(tb, 0), tau, zeta, f)[0];
        CHECK(std::abs(e) <= U(0) + 1e-12);
    });
}

TEST_CASE("generator families") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    CHECK_NOTHROW(probe_check(tree, power_generator(std::vector<double>(tree.size(), 0.0), 1.0, 3.0)));
    CHECK_THROWS_AS(probe_check(tree, fn([](double y) { return y; })), Error);

    auto lip = fn([](double y) { return -0.5 * y; }, 0.5);
    lip.lower_bound = std::vector<double>(tree.size(), -1e9);
    auto kink = fn([](double y) { return std::max(-2.0 * y, 0.0); });
    kink.lower_bound = std::vector<double>(tree.size(), 0.0);
    const auto m1 = moreau_approx(kink, 1.0);
    CHECK(m1(0, -1.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m1(0, 1.0) == doctest::Approx(0.0));
    CHECK_THROWS_AS(moreau_approx(fn([](double y) { return -y; }), 1.0), Error);

    auto sq = fn([](double y) { return -y * y * (y > 0 ? 1.0 : -1.0); });
    const auto g = fnm_ladder(sq, 4, 4, std::vector<double>(tree.size(), 1e12));
    CHECK(g(0, 3.0) == doctest::Approx(-4.0).epsilon(1e-9));
}

TEST_CASE("moreau approximation of a Lipschitz generator") {
    const auto tree = FilteredTree::binomial(1, 1.0, 0.5);
    auto lip = fn([](double y) { return -0.5 * y; }, 0.5);
    lip.lower_bound = std::vector<double>(tree.size(), -1e9);
    const auto m = moreau_approx(lip, 1.0);
    for (double y : probe_grid()) {
        if (std::abs(y) > 100) continue;
        CHECK(m(0, y) == doctest::Approx(lip(0, y)).epsilon(1e-9));
    }
}

TEST_CASE("lemma bound counterexample") {
    const auto tree = chain(1);
    const auto f = constant_generator({1, 1});
    const auto y = solve_bsde(tree, {0, 0}, f).Y;
    const auto rep = lemma_bound_check(tree, {0, 0}, f, y, 1e-12);
    CHECK_FALSE(rep.stated_holds);
    CHECK(rep.corrected_holds);
}
