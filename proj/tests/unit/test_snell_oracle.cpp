#include "helpers.hpp"

using namespace rbsde;
using namespace rbsde::test;

TEST_CASE("snell envelope") {
    const auto tree = one_period({0.5, 0.5});
    const auto flat = snell_envelope(tree, constant(tree, 1.5), {1.5, 1.5, 1.5});
    CHECK(max_abs_diff(flat.Y, constant(tree, 1.5)) == 0.0);
    CHECK(class_d_norm(tree, flat.parts.increasing) == 0.0);

    const auto avg = snell_envelope(tree, constant(tree, 0.0), {0, 2, 0});
    CHECK(avg.Y(0) == 1.0);

    const auto jump = snell_envelope(tree, slots({{0, 5}, {0, 0}, {0, 0}}), {0, 0, 0});
    CHECK(jump.Y(0) == 5.0);
    CHECK(jump_star(tree, jump.parts.increasing, 1) == 5.0);
    CHECK(jump.flat_off == 0.0);
    CHECK(jump.parts.residual <= 1e-12);
    CHECK(jump.system_rule.action(0) == Action::stop_plus);
}

TEST_CASE("localized representation") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1, 1);
    LatticeProcess payoff(tree.size());
    for (NodeId v : tree.order()) payoff(v) = payoff.plus(v) = u(rng);
    NodeValues term(tree.size());
    for (auto& x : term) x = u(rng);
    const auto s = snell_envelope(tree, payoff, term);
    CHECK(localized_representation_check(tree, payoff, s, StoppingRule::terminal(tree)).ok);
    CHECK(localized_representation_check(tree, payoff, s, StoppingRule::at_level(tree, 0)).ok);
    CHECK(localized_representation_check(tree, payoff, s, StoppingRule::at_level(tree, 1)).ok);
}

TEST_CASE("smallest majorant") {
    const auto tree = FilteredTree::binomial(2, 1.0, 0.5);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1, 1), pos(0, 0.5);
    LatticeProcess payoff(tree.size());
    for (NodeId v : tree.order()) {
        payoff(v) = u(rng);
        payoff.plus(v) = tree.stopped(v) ? payoff(v) : u(rng);
    }
    NodeValues term(tree.size());
    for (auto& x : term) x = u(rng);
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) payoff(v) = payoff.plus(v) = term[static_cast<std::size_t>(v)];
    }
    const auto s = snell_envelope(tree, payoff, term);
    std::vector<LatticeProcess> cands{s.Y, s.Y + constant(tree, 1.0)};
    for (int k = 0; k < 50; ++k) {
        LatticeProcess noisy = payoff;
        NodeValues nt = term;
        for (NodeId v : tree.order()) {
            noisy(v) += pos(rng);
            noisy.plus(v) += pos(rng);
            nt[static_cast<std::size_t>(v)] += pos(rng);
        }
        cands.push_back(snell_envelope(tree, noisy, nt).Y);
    }
    CHECK(smallest_majorant_check(tree, payoff, term, s.Y, cands));
    CHECK_THROWS_AS(smallest_majorant_check(tree, payoff, term, s.Y, {constant(tree, -10.0)}), Error);

    const auto rep = oracle_snell_smallest(tree, payoff, term, 50, 4);
    CHECK(rep.ok);
    CHECK(rep.worst >= -1e-12);
}

TEST_CASE("oracle optimal stopping") {
    const auto tree = one_period({0.5, 0.5});
    const auto a = oracle_optimal_stopping(tree, constant(tree, 0.0), {0, 2, 0}, zero_generator(), RuleKind::plain);
    CHECK(a.value == 1.0);
    CHECK(a.argmax.action(0) == Action::go_on);

    const auto b = oracle_optimal_stopping(tree, slots({{0, 5}, {0, 0}, {0, 0}}), {0, 0, 0}, zero_generator(),
                                           RuleKind::system);
    CHECK(b.value == 5.0);
    CHECK(b.argmax.action(0) == Action::stop_plus);
    CHECK(b.rules == 3);

    const auto c = oracle_optimal_stopping(tree, constant(tree, 0.7), {0.7, 0.7, 0.7}, zero_generator(),
                                           RuleKind::system);
    CHECK(c.value == 0.7);
    CHECK(c.argmax.action(0) == Action::stop_instant);
}

TEST_CASE("oracle game") {
    const auto tree = one_period({0.5, 0.5});
    const auto pinched = oracle_game(tree, {0.3, 0.3, 0.3}, zero_generator(), constant(tree, 0.3), constant(tree, 0.3));
    CHECK(pinched.supinf == 0.3);
    CHECK(pinched.infsup == 0.3);

    const auto U = slots({{0.4, 0.4}, {2, 2}, {2, 2}});
    const auto g = oracle_game(tree, {0, 0, 2}, zero_generator(), constant(tree, 0.0), U);
    CHECK(g.supinf == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(g.infsup == doctest::Approx(0.4).epsilon(1e-15));

    const auto L = slots({{0, 5}, {0, 0}, {0, 0}});
    const auto high = constant(tree, 1e9);
    const auto sys = oracle_game(tree, {0, 0, 0}, zero_generator(), L, high);
    const auto plain = oracle_game(tree, {0, 0, 0}, zero_generator(), L, high, RuleKind::plain, RuleKind::plain);
    CHECK(sys.supinf == 5.0);
    CHECK(plain.supinf == 0.0);

    const auto big = FilteredTree::binomial(4, 1.0, 0.5);
    OracleBudget tight;
    tight.max_rules = 10;
    try {
        oracle_game(big, NodeValues(big.size(), 0.0), zero_generator(), constant(big, -1), constant(big, 1),
                    RuleKind::system, RuleKind::system, tight);
        FAIL("expected a budget error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::budget);
        CHECK(std::string(e.what()).find("oracle size limit") != std::string::npos);
    }
}
