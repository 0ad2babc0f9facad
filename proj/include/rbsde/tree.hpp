#pragma once

#include "rbsde/lattice_process.hpp"

#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace rbsde {

/// Input record for explicit trees. The root has parent == no_node.
struct NodeSpec {
    NodeId id = 0;
    NodeId parent = no_node;
    double prob = 1.0;
};

struct Node {
    NodeId id = 0;
    int level = 0;
    NodeId parent = no_node;
    std::vector<NodeId> children;  ///< ascending id
    double prob = 1.0;             ///< branch probability from the parent
    int up_count = 0;              ///< sum of child indices along the path
};

class StoppingRule;

/// Finite filtered probability space realised as an event tree.
///
/// Each node is an atom of F_t at its level t. The terminal time T is a plain
/// stopping rule; nodes at or after T are "stopped" and every process is frozen
/// there. Immutable once built.
class FilteredTree {
public:
    /// Full binary event tree of depth `horizon`; child 0 is the down move,
    /// child 1 the up move (probability `p_up`), so up_count is the number of ups.
    static FilteredTree binomial(int horizon, double step, double p_up);

    /// Explicit node list. Ids must be dense 0..n-1; branch probabilities of
    /// every non-terminal node must be positive and sum to 1 within 1e-12.
    static FilteredTree from_nodes(double step, std::span<const NodeSpec> nodes);

    int horizon() const noexcept { return horizon_; }
    double step() const noexcept { return step_; }
    double time(int level) const noexcept { return step_ * level; }
    std::size_t size() const noexcept { return nodes_.size(); }
    NodeId root() const noexcept { return root_; }

    const Node& node(NodeId v) const { return nodes_[static_cast<std::size_t>(v)]; }
    int level(NodeId v) const { return node(v).level; }

    /// All nodes sorted by (level, id).
    std::span<const NodeId> order() const noexcept { return order_; }
    std::span<const NodeId> level_nodes(int t) const;

    /// P(path passes through v).
    double reach_probability(NodeId v) const { return reach_[static_cast<std::size_t>(v)]; }

    /// True when T <= level(v) on the path through v.
    bool stopped(NodeId v) const { return stopped_[static_cast<std::size_t>(v)] != 0; }
    /// True when T == level(v) on the path through v.
    bool at_terminal(NodeId v) const;
    /// The node where the path through a stopped node v reached T.
    NodeId terminal_ancestor(NodeId v) const;

    /// Same tree with a different terminal time (a plain rule; T is capped at N).
    FilteredTree with_terminal(const StoppingRule& terminal) const;
    /// Terminal time T ∧ a.
    FilteredTree truncated(int a) const;

    /// Sum over children w of p(v -> w) * values[w], in child-id order.
    double expect_children(NodeId v, std::span<const double> per_node) const;
    /// Same, reading the instant slot of a lattice process.
    double expect_children(NodeId v, const LatticeProcess& x) const;

    /// Ancestors of v from the root down to v inclusive.
    std::vector<NodeId> path_to(NodeId v) const;

private:
    void finalize();

    int horizon_ = 0;
    double step_ = 1.0;
    NodeId root_ = 0;
    std::vector<Node> nodes_;
    std::vector<NodeId> order_;
    std::vector<std::size_t> level_start_;
    std::vector<double> reach_;
    std::vector<std::uint8_t> stopped_;
};

/// E(values | F_t) on level t, from values defined on level t+1.
/// Entries are indexed by node id; NaN marks an undefined entry. The result
/// is NaN outside level t. Throws "incomplete section" on missing children.
std::vector<double> cond_expect(const FilteredTree& tree, std::span<const double> values, int level);

enum class Action : std::uint8_t { go_on = 0, stop_instant = 1, stop_plus = 2 };
enum class RuleKind : std::uint8_t { plain, system };

/// Stopping rule on the doubled grid.
///
/// A stopping system (tau, H) is stop-at-tau on H and stop-at-tau+ on H^c;
/// plain stopping times never use the plus slot. The stopped region is closed
/// under descendants and every path stops by T.
class StoppingRule {
public:
    StoppingRule() = default;

    /// `actions[v]` is the decision at v. Decisions below a stopping node must
    /// be stops (they are normalised to stop_instant). go_on at T is turned into
    /// stop_instant; stop_plus at T is rejected.
    StoppingRule(const FilteredTree& tree, std::vector<Action> actions, RuleKind kind);

    /// Build from the first stopping node of each path.
    static StoppingRule from_stops(const FilteredTree& tree,
                                   std::span<const std::pair<NodeId, Action>> stops,
                                   RuleKind kind);
    /// Deterministic time `level` (capped by T), at the given phase.
    static StoppingRule at_level(const FilteredTree& tree, int level,
                                 Phase phase = Phase::instant);
    static StoppingRule terminal(const FilteredTree& tree);

    RuleKind kind() const noexcept { return kind_; }
    std::size_t size() const noexcept { return actions_.size(); }
    Action action(NodeId v) const { return actions_[static_cast<std::size_t>(v)]; }
    /// True when v is the first stopping node on its path.
    bool stops_at(NodeId v) const { return first_[static_cast<std::size_t>(v)] != 0; }
    /// True when the rule has stopped at v or at an ancestor.
    bool stopped_by(NodeId v) const { return actions_[static_cast<std::size_t>(v)] != Action::go_on; }
    /// Stopping slot when stops_at(v).
    Slot stop_slot(const FilteredTree& tree, NodeId v) const;
    std::span<const Action> actions() const noexcept { return actions_; }

    friend bool operator==(const StoppingRule& a, const StoppingRule& b) {
        return a.kind_ == b.kind_ && a.actions_ == b.actions_;
    }

private:
    std::vector<Action> actions_;
    std::vector<std::uint8_t> first_;
    RuleKind kind_ = RuleKind::plain;
};

/// a <= b on every path (slot order).
bool rule_leq(const FilteredTree& tree, const StoppingRule& a, const StoppingRule& b);
/// Pathwise minimum; the kind is system if either argument is.
StoppingRule rule_min(const FilteredTree& tree, const StoppingRule& a, const StoppingRule& b);

/// Value of a lattice process at the stopping slot of `rule`, per stopping node
/// (NaN at nodes where the rule does not stop).
std::vector<double> stopped_values(const FilteredTree& tree, const StoppingRule& rule,
                                   const LatticeProcess& x);

/// E(X_rule) from the root.
double expectation_at(const FilteredTree& tree, const StoppingRule& rule, const LatticeProcess& x);

/// Increasing sequence of plain rules that reaches T on every path.
struct Chain {
    std::vector<StoppingRule> times;
};

/// tau_k = min(T, first t with accrued load >= thresholds[k]), where the load
/// accrued at a node of level t is sum over path nodes u with 0 < level(u) <= t
/// of h * load(u) (load(u) is the rate on the interval ending at u).
Chain build_chain(const FilteredTree& tree, std::span<const double> thresholds,
                  const LatticeProcess& load);

/// Number of rules starting at (from, phase). Returned as double: counts grow
/// doubly exponentially with depth.
double count_rules(const FilteredTree& tree, RuleKind kind, NodeId from, Phase phase = Phase::instant);
double count_rules(const FilteredTree& tree, RuleKind kind);

/// Decode the index-th rule (canonical order) of the rules counted by
/// count_rules(tree, kind). Canonical order at a node: stop at t, stop at t+
/// (system only), then continuation combinations with the first child most
/// significant.
StoppingRule decode_rule(const FilteredTree& tree, RuleKind kind, double index);

/// Calls `visit` for every rule in canonical order. Throws Error(budget)
/// "oracle size limit" before any work if the count exceeds `cap`.
void enumerate_stopping_rules(const FilteredTree& tree, RuleKind kind,
                              const std::function<void(const StoppingRule&)>& visit,
                              double cap = 1e7);

/// ||X||_1 = sup over stopping rules of E|X_rule|, computed as the root value of
/// the Snell envelope of |X| over all slots of the doubled grid.
double class_d_norm(const FilteredTree& tree, const LatticeProcess& x);

}  // namespace rbsde
