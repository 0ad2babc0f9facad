#pragma once

#include "rbsde/commands.hpp"
#include "rbsde/snell.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace rbsde::test {

inline constexpr double inf = std::numeric_limits<double>::infinity();

/// Root 0 with children 1..k carrying the given probabilities.
inline FilteredTree one_period(std::vector<double> probs, double h = 1.0) {
    std::vector<NodeSpec> nodes{{0, no_node, 1.0}};
    for (std::size_t i = 0; i < probs.size(); ++i) nodes.push_back({static_cast<NodeId>(i + 1), 0, probs[i]});
    return FilteredTree::from_nodes(h, nodes);
}

/// Single path of length n.
inline FilteredTree chain(int n, double h = 1.0) {
    std::vector<NodeSpec> nodes{{0, no_node, 1.0}};
    for (int i = 1; i <= n; ++i) nodes.push_back({i, i - 1, 1.0});
    return FilteredTree::from_nodes(h, nodes);
}

/// Per-slot process from (instant, plus) pairs listed by node id.
inline LatticeProcess slots(std::vector<std::pair<double, double>> v) {
    LatticeProcess x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        x(static_cast<NodeId>(i)) = v[i].first;
        x.plus(static_cast<NodeId>(i)) = v[i].second;
    }
    return x;
}

inline LatticeProcess constant(const FilteredTree& tree, double c) { return LatticeProcess(tree.size(), c); }

inline Generator fn(std::function<double(double)> g, std::optional<double> lipschitz = std::nullopt) {
    Generator f("test", [g](NodeId, double y) { return g(y); });
    f.lipschitz = lipschitz;
    return f;
}

inline Problem random_problem(const std::string& barrier, std::uint64_t seed, bool with_v = false) {
    std::mt19937_64 rng(seed);
    RandomFamily fam;
    fam.barrier = barrier;
    fam.with_v = with_v;
    return materialize(random_scenario(fam, rng));
}

}  // namespace rbsde::test
