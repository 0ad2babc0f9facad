#include "helpers.hpp"

using namespace rbsde;
using namespace rbsde::test;

TEST_CASE("cond_expect averages children") {
    const auto tree = one_period({0.5, 0.5});
    const std::vector<double> v{NAN, 2.0, 0.0};
    CHECK(cond_expect(tree, v, 0)[0] == 1.0);

    const auto single = chain(1);
    CHECK(cond_expect(single, std::vector<double>{NAN, 7.25}, 0)[0] == 7.25);

    const auto three = one_period({0.2, 0.3, 0.5});
    CHECK(cond_expect(three, std::vector<double>{NAN, 1.0, 2.0, 3.0}, 0)[0] == doctest::Approx(2.3).epsilon(1e-15));
}

TEST_CASE("tree validation") {
    const std::vector<NodeSpec> bad{{0, no_node, 1.0}, {1, 0, 0.5}, {2, 0, 0.4}};
    CHECK_THROWS_AS(FilteredTree::from_nodes(1.0, bad), Error);
    const std::vector<NodeSpec> gap{{0, no_node, 1.0}, {2, 0, 1.0}};
    CHECK_THROWS_AS(FilteredTree::from_nodes(1.0, gap), Error);

    const auto b = FilteredTree::binomial(3, 0.5, 0.3);
    CHECK(b.size() == 15);
    CHECK(b.horizon() == 3);
    NodeId prev = -1;
    int prev_level = 0;
    for (NodeId v : b.order()) {
        CHECK((b.level(v) > prev_level || (b.level(v) == prev_level && v > prev)));
        prev = v;
        prev_level = b.level(v);
    }
}

TEST_CASE("class_d_norm") {
    const auto tree = one_period({0.5, 0.5});
    CHECK(class_d_norm(tree, constant(tree, -3.0)) == 3.0);
    CHECK(class_d_norm(tree, slots({{0, 0}, {2, 2}, {0, 0}})) == 1.0);
    CHECK(class_d_norm(tree, slots({{3, 3}, {2, 2}, {0, 0}})) == 3.0);
}

TEST_CASE("build_chain") {
    const auto tree = FilteredTree::binomial(3, 1.0, 0.5);
    const auto zero = build_chain(tree, std::vector<double>{1, 2, 3}, constant(tree, 0.0));
    for (const auto& tau : zero.times) {
        for (NodeId v : tree.order()) CHECK(tau.stops_at(v) == (tree.level(v) == 3));
    }

    const auto ones = build_chain(tree, std::vector<double>{1, 2, 3, 4}, constant(tree, 1.0));
    for (std::size_t k = 0; k < ones.times.size(); ++k) {
        const int want = std::min<int>(3, static_cast<int>(k) + 1);
        for (NodeId v : tree.order()) CHECK(ones.times[k].stops_at(v) == (tree.level(v) == want));
    }

    const auto two = FilteredTree::binomial(2, 1.0, 0.5);
    LatticeProcess load(two.size(), 0.0);
    for (NodeId v : two.order()) {
        if (two.level(v) > 0 && two.node(two.node(v).parent).children.back() == v) load(v) = load.plus(v) = 1.0;
    }
    const auto path = build_chain(two, std::vector<double>{1.0}, load);
    const NodeId up = two.node(two.root()).children.back();
    const NodeId down = two.node(two.root()).children.front();
    CHECK(path.times[0].stops_at(up));
    CHECK_FALSE(path.times[0].stops_at(down));
    for (NodeId w : two.node(down).children) CHECK(path.times[0].stops_at(w));
}

TEST_CASE("rule enumeration counts") {
    const auto single = chain(1);
    CHECK(count_rules(single, RuleKind::plain) == 2);
    CHECK(count_rules(single, RuleKind::system) == 3);
    const auto two = one_period({0.5, 0.5});
    int n = 0;
    enumerate_stopping_rules(two, RuleKind::plain, [&](const StoppingRule&) { ++n; });
    CHECK(n == 2);

    const auto big = FilteredTree::binomial(5, 1.0, 0.5);
    CHECK_THROWS_AS(enumerate_stopping_rules(big, RuleKind::system, [](const StoppingRule&) {}, 100.0), Error);
}

TEST_CASE("stopping rules") {
    const auto tree = one_period({0.5, 0.5});
    std::vector<Action> acts{Action::stop_plus, Action::stop_instant, Action::stop_instant};
    CHECK_THROWS_AS(StoppingRule(tree, {Action::stop_plus, Action::go_on, Action::go_on}, RuleKind::system), Error);
    CHECK_THROWS_AS(StoppingRule(tree, acts, RuleKind::plain), Error);
    const StoppingRule r(tree, acts, RuleKind::system);
    CHECK(r.stops_at(0));
    CHECK(r.stopped_by(1));
    CHECK(to_string(r.stop_slot(tree, 0)) == "0+");
    CHECK(parse_slot("3+").level == 3);
    CHECK(parse_slot("3+").phase == Phase::plus);
}
