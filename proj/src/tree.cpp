#include "rbsde/tree.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>

namespace rbsde {

namespace {

constexpr double prob_sum_tol = 1e-12;
const double nan = std::numeric_limits<double>::quiet_NaN();

}  // namespace

// ---------------------------------------------------------------------------
// FilteredTree

FilteredTree FilteredTree::binomial(int horizon, double step, double p_up) {
    if (horizon < 1) fail_validation("binomial tree needs N >= 1");
    if (!(step > 0.0)) fail_validation("time step h must be positive");
    if (!(p_up > 0.0 && p_up < 1.0)) fail_validation("branch probability p must lie in (0, 1)");
    if (horizon > 20) fail_validation("binomial event tree limited to N <= 20");

    FilteredTree tree;
    tree.step_ = step;
    tree.nodes_.reserve((std::size_t{1} << (horizon + 1)) - 1);
    tree.nodes_.push_back(Node{0, 0, no_node, {}, 1.0, 0});
    for (std::size_t i = 0; i < tree.nodes_.size(); ++i) {
        if (tree.nodes_[i].level == horizon) continue;
        for (int k = 0; k < 2; ++k) {
            Node child;
            child.id = static_cast<NodeId>(tree.nodes_.size());
            child.level = tree.nodes_[i].level + 1;
            child.parent = static_cast<NodeId>(i);
            child.prob = k == 0 ? 1.0 - p_up : p_up;
            tree.nodes_[i].children.push_back(child.id);
            tree.nodes_.push_back(std::move(child));
        }
    }
    tree.finalize();
    return tree;
}

FilteredTree FilteredTree::from_nodes(double step, std::span<const NodeSpec> specs) {
    if (!(step > 0.0)) fail_validation("time step h must be positive");
    if (specs.empty()) fail_validation("tree has no nodes");
    const auto n = specs.size();
    FilteredTree tree;
    tree.step_ = step;
    tree.nodes_.resize(n);
    std::vector<std::uint8_t> seen(n, 0);
    for (const auto& s : specs) {
        if (s.id < 0 || static_cast<std::size_t>(s.id) >= n) {
            fail_validation("node id " + std::to_string(s.id) + " is not dense in 0.." + std::to_string(n - 1));
        }
        if (seen[static_cast<std::size_t>(s.id)]) fail_validation("duplicate node id " + std::to_string(s.id));
        seen[static_cast<std::size_t>(s.id)] = 1;
        Node& nd = tree.nodes_[static_cast<std::size_t>(s.id)];
        nd.id = s.id;
        nd.parent = s.parent;
        nd.prob = s.parent == no_node ? 1.0 : s.prob;
    }
    int roots = 0;
    for (auto& nd : tree.nodes_) {
        if (nd.parent == no_node) {
            ++roots;
            tree.root_ = nd.id;
            continue;
        }
        if (nd.parent < 0 || static_cast<std::size_t>(nd.parent) >= n || nd.parent == nd.id) {
            fail_validation("node " + std::to_string(nd.id) + " has an invalid parent");
        }
        if (!(nd.prob > 0.0)) {
            fail_validation("branch probability into node " + std::to_string(nd.id) + " must be positive");
        }
        tree.nodes_[static_cast<std::size_t>(nd.parent)].children.push_back(nd.id);
    }
    if (roots != 1) fail_validation("tree must have exactly one root, found " + std::to_string(roots));

    for (auto& nd : tree.nodes_) {
        if (nd.children.empty()) continue;
        std::sort(nd.children.begin(), nd.children.end());
        double sum = 0.0;
        for (NodeId c : nd.children) sum += tree.nodes_[static_cast<std::size_t>(c)].prob;
        if (std::abs(sum - 1.0) > prob_sum_tol) {
            fail_validation("branch probabilities at node " + std::to_string(nd.id) + " sum to " +
                            std::to_string(sum));
        }
        for (NodeId c : nd.children) tree.nodes_[static_cast<std::size_t>(c)].prob /= sum;
    }

    // levels by traversal from the root; unreachable nodes mean a cycle
    std::vector<NodeId> stack{tree.root_};
    std::vector<std::uint8_t> reached(n, 0);
    reached[static_cast<std::size_t>(tree.root_)] = 1;
    tree.nodes_[static_cast<std::size_t>(tree.root_)].level = 0;
    while (!stack.empty()) {
        NodeId v = stack.back();
        stack.pop_back();
        for (NodeId c : tree.nodes_[static_cast<std::size_t>(v)].children) {
            reached[static_cast<std::size_t>(c)] = 1;
            tree.nodes_[static_cast<std::size_t>(c)].level = tree.nodes_[static_cast<std::size_t>(v)].level + 1;
            stack.push_back(c);
        }
    }
    if (std::count(reached.begin(), reached.end(), 0) != 0) fail_validation("node list contains a cycle");
    tree.finalize();
    return tree;
}

void FilteredTree::finalize() {
    const auto n = nodes_.size();
    horizon_ = 0;
    for (const auto& nd : nodes_) horizon_ = std::max(horizon_, nd.level);
    if (horizon_ < 1) fail_validation("tree horizon must be at least 1");
    for (const auto& nd : nodes_) {
        if (nd.level < horizon_ && nd.children.empty()) {
            fail_validation("node " + std::to_string(nd.id) + " at level " + std::to_string(nd.level) +
                            " < N has no children");
        }
    }
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](NodeId a, NodeId b) {
        const auto& na = nodes_[static_cast<std::size_t>(a)];
        const auto& nb = nodes_[static_cast<std::size_t>(b)];
        return na.level != nb.level ? na.level < nb.level : a < b;
    });
    level_start_.assign(static_cast<std::size_t>(horizon_) + 2, 0);
    for (const auto& nd : nodes_) ++level_start_[static_cast<std::size_t>(nd.level) + 1];
    for (std::size_t t = 1; t < level_start_.size(); ++t) level_start_[t] += level_start_[t - 1];

    reach_.assign(n, 0.0);
    for (NodeId v : order_) {
        auto& nd = nodes_[static_cast<std::size_t>(v)];
        if (nd.parent == no_node) {
            reach_[static_cast<std::size_t>(v)] = 1.0;
            nd.up_count = 0;
        } else {
            const auto& par = nodes_[static_cast<std::size_t>(nd.parent)];
            reach_[static_cast<std::size_t>(v)] = reach_[static_cast<std::size_t>(nd.parent)] * nd.prob;
            const auto idx = std::find(par.children.begin(), par.children.end(), v) - par.children.begin();
            nd.up_count = par.up_count + static_cast<int>(idx);
        }
    }
    stopped_.assign(n, 0);
    for (const auto& nd : nodes_) stopped_[static_cast<std::size_t>(nd.id)] = nd.level == horizon_ ? 1 : 0;
}

std::span<const NodeId> FilteredTree::level_nodes(int t) const {
    if (t < 0 || t > horizon_) return {};
    const auto b = level_start_[static_cast<std::size_t>(t)];
    const auto e = level_start_[static_cast<std::size_t>(t) + 1];
    return std::span<const NodeId>(order_).subspan(b, e - b);
}

bool FilteredTree::at_terminal(NodeId v) const {
    if (!stopped(v)) return false;
    const NodeId p = node(v).parent;
    return p == no_node || !stopped(p);
}

NodeId FilteredTree::terminal_ancestor(NodeId v) const {
    if (!stopped(v)) return no_node;
    while (!at_terminal(v)) v = node(v).parent;
    return v;
}

FilteredTree FilteredTree::with_terminal(const StoppingRule& terminal) const {
    if (terminal.size() != size()) fail_validation("terminal rule does not match tree size");
    if (terminal.kind() != RuleKind::plain) fail_validation("terminal time must be a plain stopping rule");
    FilteredTree out = *this;
    for (const auto& nd : nodes_) {
        out.stopped_[static_cast<std::size_t>(nd.id)] =
            (terminal.stopped_by(nd.id) || nd.level == horizon_) ? 1 : 0;
    }
    return out;
}

FilteredTree FilteredTree::truncated(int a) const {
    if (a < 0) fail_validation("truncation level must be nonnegative");
    FilteredTree out = *this;
    for (const auto& nd : nodes_) {
        if (nd.level >= a) out.stopped_[static_cast<std::size_t>(nd.id)] = 1;
    }
    return out;
}

double FilteredTree::expect_children(NodeId v, std::span<const double> per_node) const {
    double acc = 0.0;
    for (NodeId w : node(v).children) acc += node(w).prob * per_node[static_cast<std::size_t>(w)];
    return acc;
}

double FilteredTree::expect_children(NodeId v, const LatticeProcess& x) const {
    double acc = 0.0;
    for (NodeId w : node(v).children) acc += node(w).prob * x(w);
    return acc;
}

std::vector<NodeId> FilteredTree::path_to(NodeId v) const {
    std::vector<NodeId> path;
    for (NodeId u = v; u != no_node; u = node(u).parent) path.push_back(u);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<double> cond_expect(const FilteredTree& tree, std::span<const double> values, int level) {
    if (values.size() != tree.size()) fail_validation("incomplete section: value vector size mismatch");
    if (level < 0 || level >= tree.horizon()) fail_validation("conditional expectation level out of range");
    std::vector<double> out(tree.size(), nan);
    for (NodeId v : tree.level_nodes(level)) {
        double acc = 0.0;
        for (NodeId w : tree.node(v).children) {
            const double x = values[static_cast<std::size_t>(w)];
            if (std::isnan(x)) fail_validation("incomplete section: no value at node " + std::to_string(w));
            acc += tree.node(w).prob * x;
        }
        out[static_cast<std::size_t>(v)] = acc;
    }
    return out;
}

// ---------------------------------------------------------------------------
// StoppingRule

StoppingRule::StoppingRule(const FilteredTree& tree, std::vector<Action> actions, RuleKind kind)
    : actions_(std::move(actions)), first_(tree.size(), 0), kind_(kind) {
    if (actions_.size() != tree.size()) fail_validation("stopping rule size does not match tree");
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        const NodeId p = tree.node(v).parent;
        const bool parent_stopped = p != no_node && actions_[static_cast<std::size_t>(p)] != Action::go_on;
        if (parent_stopped) {
            if (actions_[i] == Action::go_on) {
                fail_validation("stopped region is not closed under descendants at node " + std::to_string(v));
            }
            actions_[i] = Action::stop_instant;
            continue;
        }
        if (tree.stopped(v)) {
            if (actions_[i] == Action::stop_plus) {
                fail_validation("stop at t+ is not allowed at the terminal time (node " + std::to_string(v) + ")");
            }
            actions_[i] = Action::stop_instant;
        }
        if (actions_[i] == Action::stop_plus && kind_ == RuleKind::plain) {
            fail_validation("plain stopping rules cannot stop at t+ (node " + std::to_string(v) + ")");
        }
        first_[i] = actions_[i] != Action::go_on ? 1 : 0;
    }
}

namespace {

void fill_subtree(const FilteredTree& tree, NodeId v, std::vector<Action>& acts) {
    for (NodeId w : tree.node(v).children) {
        acts[static_cast<std::size_t>(w)] = Action::stop_instant;
        fill_subtree(tree, w, acts);
    }
}

}  // namespace

StoppingRule StoppingRule::from_stops(const FilteredTree& tree,
                                      std::span<const std::pair<NodeId, Action>> stops,
                                      RuleKind kind) {
    std::vector<Action> acts(tree.size(), Action::go_on);
    for (const auto& [v, a] : stops) {
        if (v < 0 || static_cast<std::size_t>(v) >= tree.size()) fail_validation("stop node out of range");
        acts[static_cast<std::size_t>(v)] = a;
    }
    // close under descendants, keeping the first stop of each path
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        if (p != no_node && (acts[static_cast<std::size_t>(p)] != Action::go_on || tree.stopped(p))) {
            acts[static_cast<std::size_t>(v)] = Action::stop_instant;
        } else if (tree.stopped(v)) {
            acts[static_cast<std::size_t>(v)] = Action::stop_instant;
        }
    }
    return StoppingRule(tree, std::move(acts), kind);
}

StoppingRule StoppingRule::at_level(const FilteredTree& tree, int level, Phase phase) {
    std::vector<Action> acts(tree.size(), Action::go_on);
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        if (p != no_node && acts[static_cast<std::size_t>(p)] != Action::go_on) {
            acts[static_cast<std::size_t>(v)] = Action::stop_instant;
        } else if (tree.stopped(v)) {
            acts[static_cast<std::size_t>(v)] = Action::stop_instant;
        } else if (tree.level(v) == level) {
            acts[static_cast<std::size_t>(v)] = phase == Phase::plus ? Action::stop_plus : Action::stop_instant;
        }
    }
    return StoppingRule(tree, std::move(acts), phase == Phase::plus ? RuleKind::system : RuleKind::plain);
}

StoppingRule StoppingRule::terminal(const FilteredTree& tree) {
    return at_level(tree, tree.horizon());
}

Slot StoppingRule::stop_slot(const FilteredTree& tree, NodeId v) const {
    return Slot{tree.level(v), action(v) == Action::stop_plus ? Phase::plus : Phase::instant};
}

namespace {

/// Stopping slot on the path through each node, once the rule has stopped.
std::vector<Slot> propagated_slots(const FilteredTree& tree, const StoppingRule& r) {
    std::vector<Slot> out(tree.size());
    for (NodeId v : tree.order()) {
        if (r.stops_at(v)) {
            out[static_cast<std::size_t>(v)] = r.stop_slot(tree, v);
        } else if (tree.node(v).parent != no_node) {
            out[static_cast<std::size_t>(v)] = out[static_cast<std::size_t>(tree.node(v).parent)];
        }
    }
    return out;
}

}  // namespace

bool rule_leq(const FilteredTree& tree, const StoppingRule& a, const StoppingRule& b) {
    const auto sa = propagated_slots(tree, a);
    const auto sb = propagated_slots(tree, b);
    for (NodeId v : tree.order()) {
        if (!tree.node(v).children.empty()) continue;
        if (sb[static_cast<std::size_t>(v)] < sa[static_cast<std::size_t>(v)]) return false;
    }
    return true;
}

StoppingRule rule_min(const FilteredTree& tree, const StoppingRule& a, const StoppingRule& b) {
    std::vector<Action> acts(tree.size(), Action::go_on);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        const NodeId p = tree.node(v).parent;
        if (p != no_node && acts[static_cast<std::size_t>(p)] != Action::go_on) {
            acts[i] = Action::stop_instant;
            continue;
        }
        const Action x = a.stops_at(v) ? a.action(v) : Action::go_on;
        const Action y = b.stops_at(v) ? b.action(v) : Action::go_on;
        if (x == Action::go_on) {
            acts[i] = y;
        } else if (y == Action::go_on) {
            acts[i] = x;
        } else {
            acts[i] = (x == Action::stop_instant || y == Action::stop_instant) ? Action::stop_instant : Action::stop_plus;
        }
    }
    const RuleKind kind =
        (a.kind() == RuleKind::system || b.kind() == RuleKind::system) ? RuleKind::system : RuleKind::plain;
    return StoppingRule(tree, std::move(acts), kind);
}

std::vector<double> stopped_values(const FilteredTree& tree, const StoppingRule& rule, const LatticeProcess& x) {
    std::vector<double> out(tree.size(), nan);
    for (NodeId v : tree.order()) {
        if (rule.stops_at(v)) out[static_cast<std::size_t>(v)] = x(v, rule.stop_slot(tree, v).phase);
    }
    return out;
}

double expectation_at(const FilteredTree& tree, const StoppingRule& rule, const LatticeProcess& x) {
    double acc = 0.0;
    for (NodeId v : tree.order()) {
        if (rule.stops_at(v)) acc += tree.reach_probability(v) * x(v, rule.stop_slot(tree, v).phase);
    }
    return acc;
}

// ---------------------------------------------------------------------------
// Chains

Chain build_chain(const FilteredTree& tree, std::span<const double> thresholds, const LatticeProcess& load) {
    for (std::size_t k = 1; k < thresholds.size(); ++k) {
        if (thresholds[k] < thresholds[k - 1]) fail_validation("chain thresholds must be nondecreasing");
    }
    std::vector<double> accrued(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        if (load(v) < 0.0) fail_validation("chain load must be nonnegative");
        const NodeId p = tree.node(v).parent;
        if (p != no_node) accrued[static_cast<std::size_t>(v)] = accrued[static_cast<std::size_t>(p)] + tree.step() * load(v);
    }
    Chain chain;
    for (double threshold : thresholds) {
        std::vector<std::pair<NodeId, Action>> stops;
        std::vector<std::uint8_t> done(tree.size(), 0);
        for (NodeId v : tree.order()) {
            const NodeId p = tree.node(v).parent;
            if (p != no_node && done[static_cast<std::size_t>(p)]) {
                done[static_cast<std::size_t>(v)] = 1;
                continue;
            }
            if (accrued[static_cast<std::size_t>(v)] >= threshold || tree.stopped(v)) {
                stops.emplace_back(v, Action::stop_instant);
                done[static_cast<std::size_t>(v)] = 1;
            }
        }
        chain.times.push_back(StoppingRule::from_stops(tree, stops, RuleKind::plain));
    }
    return chain;
}

// ---------------------------------------------------------------------------
// Enumeration

namespace {

struct RuleCounts {
    std::vector<double> instant;
    std::vector<double> plus;
};

RuleCounts rule_counts(const FilteredTree& tree, RuleKind kind) {
    RuleCounts c{std::vector<double>(tree.size(), 1.0), std::vector<double>(tree.size(), 1.0)};
    const double nstop = kind == RuleKind::system ? 2.0 : 1.0;
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        if (tree.stopped(v)) continue;
        double prod = 1.0;
        for (NodeId w : tree.node(v).children) prod *= c.instant[static_cast<std::size_t>(w)];
        c.instant[static_cast<std::size_t>(v)] = nstop + prod;
        c.plus[static_cast<std::size_t>(v)] = 1.0 + prod;
    }
    return c;
}

void decode_into(const FilteredTree& tree, const RuleCounts& counts, RuleKind kind, NodeId v,
                 std::uint64_t idx, std::vector<Action>& acts) {
    if (tree.stopped(v)) {
        acts[static_cast<std::size_t>(v)] = Action::stop_instant;
        fill_subtree(tree, v, acts);
        return;
    }
    const std::uint64_t nstop = kind == RuleKind::system ? 2 : 1;
    if (idx < nstop) {
        acts[static_cast<std::size_t>(v)] = idx == 0 ? Action::stop_instant : Action::stop_plus;
        fill_subtree(tree, v, acts);
        return;
    }
    idx -= nstop;
    acts[static_cast<std::size_t>(v)] = Action::go_on;
    const auto& ch = tree.node(v).children;
    std::vector<std::uint64_t> digits(ch.size());
    for (std::size_t k = ch.size(); k-- > 0;) {
        const auto radix = static_cast<std::uint64_t>(counts.instant[static_cast<std::size_t>(ch[k])]);
        digits[k] = idx % radix;
        idx /= radix;
    }
    for (std::size_t k = 0; k < ch.size(); ++k) decode_into(tree, counts, kind, ch[k], digits[k], acts);
}

}  // namespace

double count_rules(const FilteredTree& tree, RuleKind kind, NodeId from, Phase phase) {
    const auto c = rule_counts(tree, kind);
    return phase == Phase::plus ? c.plus[static_cast<std::size_t>(from)] : c.instant[static_cast<std::size_t>(from)];
}

double count_rules(const FilteredTree& tree, RuleKind kind) {
    return count_rules(tree, kind, tree.root());
}

StoppingRule decode_rule(const FilteredTree& tree, RuleKind kind, double index) {
    const auto counts = rule_counts(tree, kind);
    const double total = counts.instant[static_cast<std::size_t>(tree.root())];
    if (index < 0 || index >= total || total > 9e15) fail_validation("rule index out of range");
    std::vector<Action> acts(tree.size(), Action::go_on);
    decode_into(tree, counts, kind, tree.root(), static_cast<std::uint64_t>(index), acts);
    return StoppingRule(tree, std::move(acts), kind);
}

void enumerate_stopping_rules(const FilteredTree& tree, RuleKind kind,
                              const std::function<void(const StoppingRule&)>& visit, double cap) {
    const auto counts = rule_counts(tree, kind);
    const double total = counts.instant[static_cast<std::size_t>(tree.root())];
    if (total > cap) {
        throw Error(ErrorKind::budget, "oracle size limit: " + std::to_string(total) + " rules exceed cap " +
                                           std::to_string(cap));
    }
    const auto n = static_cast<std::uint64_t>(total);
    std::vector<Action> acts(tree.size());
    for (std::uint64_t i = 0; i < n; ++i) {
        std::fill(acts.begin(), acts.end(), Action::go_on);
        decode_into(tree, counts, kind, tree.root(), i, acts);
        visit(StoppingRule(tree, acts, kind));
    }
}

double class_d_norm(const FilteredTree& tree, const LatticeProcess& x) {
    std::vector<double> s(tree.size(), 0.0);
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            s[i] = std::abs(x(v));
            continue;
        }
        const double cont = tree.expect_children(v, s);
        s[i] = std::max(std::abs(x(v)), std::max(std::abs(x.plus(v)), cont));
    }
    return s[static_cast<std::size_t>(tree.root())];
}

}  // namespace rbsde
