#include "helpers.hpp"

#include <sstream>

using namespace rbsde;
using namespace rbsde::test;

TEST_CASE("jordan split") {
    const auto tree = chain(3);
    const std::vector<double> star{0, 1, -2, 3}, plus{0, 0, 0, 0};
    const auto k = from_increments(tree, star, plus);
    const auto [kp, km] = jordan(tree, k);
    for (NodeId v = 1; v <= 3; ++v) {
        CHECK(jump_star(tree, kp, v) == std::max(star[static_cast<std::size_t>(v)], 0.0));
        CHECK(jump_star(tree, km, v) == std::max(-star[static_cast<std::size_t>(v)], 0.0));
    }

    const auto [zp, zm] = jordan(tree, constant(tree, 0.0));
    CHECK(class_d_norm(tree, zp) == 0.0);
    CHECK(class_d_norm(tree, zm) == 0.0);

    const auto two = chain(2);
    const auto both = from_increments(two, std::vector<double>{0, 1, 0}, std::vector<double>{0, 1, 0});
    const auto [bp, bm] = jordan(two, both);
    CHECK(jump_star(two, bp, 1) == 1.0);
    CHECK(jump_plus(two, bp, 1) == 1.0);
    CHECK(class_d_norm(two, bm) == 0.0);
}

TEST_CASE("check_supermartingale") {
    const auto tree = one_period({0.5, 0.5});
    CHECK(check_supermartingale(tree, slots({{1, 1}, {2, 2}, {0, 0}})).ok);
    CHECK(check_supermartingale(tree, slots({{5, 5}, {0, 0}, {0, 0}})).ok);
    const auto bad = check_supermartingale(tree, slots({{0, 5}, {0, 0}, {0, 0}}));
    CHECK_FALSE(bad.ok);
    CHECK(bad.worst == 5.0);
    CHECK(bad.node == 0);
    CHECK(bad.slot.level == 0);
}

TEST_CASE("mertens decomposition") {
    const auto tree = one_period({0.5, 0.5});
    const auto drop = mertens_decompose(tree, slots({{5, 5}, {0, 0}, {0, 0}}));
    CHECK(class_d_norm(tree, drop.martingale) == 0.0);
    CHECK(jump_star(tree, drop.increasing, 1) == 5.0);
    CHECK(jump_star(tree, drop.increasing, 2) == 5.0);

    const auto mart = slots({{1, 1}, {3, 3}, {-1, -1}});
    const auto m = mertens_decompose(tree, mart);
    CHECK(class_d_norm(tree, m.increasing) == 0.0);
    CHECK(max_abs_diff(m.martingale, mart - constant(tree, 1.0)) == 0.0);

    const auto right = mertens_decompose(tree, slots({{2, 1}, {1, 1}, {1, 1}}));
    CHECK(jump_plus(tree, right.increasing, 0) == 1.0);
    CHECK(jump_star(tree, right.increasing, 1) == 0.0);
    CHECK(class_d_norm(tree, right.martingale) == 0.0);

    CHECK_THROWS_AS(mertens_decompose(tree, slots({{0, 5}, {0, 0}, {0, 0}})), Error);
}

TEST_CASE("left and right limits") {
    const auto tree = one_period({0.5, 0.5});
    const auto [l, r] = left_right_limits(tree, constant(tree, 4.0));
    CHECK(max_abs_diff(l, constant(tree, 4.0)) == 0.0);
    CHECK(max_abs_diff(r, constant(tree, 4.0)) == 0.0);

    const auto [l2, r2] = left_right_limits(tree, slots({{0, 5}, {0, 0}, {0, 0}}));
    CHECK(r2(0) == 5.0);
    CHECK(l2(1) == 5.0);
    CHECK(l2(2) == 5.0);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    const auto tb = FilteredTree::binomial(3, 1.0, 0.4);
    for (int k = 0; k < 100; ++k) {
        LatticeProcess x(tb.size());
        for (NodeId v : tb.order()) {
            x(v) = u(rng);
            x.plus(v) = tb.stopped(v) ? x(v) : u(rng);
        }
        CHECK(class_d_norm(tb, left_right_limits(tb, x).second) <= class_d_norm(tb, x) + 1e-15);
    }
}

TEST_CASE("doob decomposition reconstructs") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1, 1);
    const auto tb = FilteredTree::binomial(3, 0.5, 0.3);
    LatticeProcess x(tb.size());
    for (NodeId v : tb.order()) {
        x(v) = u(rng);
        x.plus(v) = tb.stopped(v) ? x(v) : u(rng);
    }
    const auto d = doob_decompose(tb, x);
    CHECK(d.residual <= 1e-12);
    CHECK(martingale_gap(tb, d.martingale) <= 1e-12);
    CHECK(predictability_gap(tb, d.drift) <= 1e-12);
}

TEST_CASE("csv round trip is bit exact") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    const auto tb = FilteredTree::binomial(3, 0.25, 0.5);
    LatticeProcess x(tb.size());
    for (NodeId v : tb.order()) {
        x(v) = u(rng) / 3.0;
        x.plus(v) = tb.stopped(v) ? x(v) : std::nextafter(u(rng), 0.0);
    }
    std::stringstream ss;
    write_csv(ss, tb, x);
    const std::string text = ss.str();
    CHECK(text.find(",0+,") != std::string::npos);
    std::istringstream in(text);
    CHECK(read_csv(in, tb) == x);
    CHECK(parse_double(format_double(0.1)) == 0.1);
}
