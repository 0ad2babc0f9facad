#include "rbsde/oracle.hpp"

#include "rbsde/error.hpp"
#include "rbsde/snell.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

namespace rbsde {

namespace {

const double nan = std::numeric_limits<double>::quiet_NaN();

/// How a node's value lists are formed from its children's lists. The plus
/// list holds one value per rule started at t+, the instant list one per rule
/// started at t, both in canonical order.
struct ListSpec {
    std::function<double(NodeId)> terminal;
    std::function<double(NodeId)> stop_instant;       // stop at t, started at t
    std::function<double(NodeId)> stop_plus_from_t;   // stop at t+, started at t
    std::function<double(NodeId)> stop_plus;          // stop at t+, started at t+
    std::function<double(NodeId, NodeId)> shift;      // added to child w's value
    std::function<double(NodeId, double)> cont_plus;  // continuation, started at t+
    std::function<double(NodeId, double)> cont_instant;  // from the t+ continuation value
};

struct ValueLists {
    std::vector<std::vector<double>> instant;
    std::vector<std::vector<double>> plus;
};

class Deadline {
public:
    explicit Deadline(double seconds)
        : end_(std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(std::chrono::duration<double>(seconds))) {}
    void check() const {
        if (std::chrono::steady_clock::now() > end_) throw Error(ErrorKind::budget, "oracle wall-clock budget exceeded");
    }

private:
    std::chrono::steady_clock::time_point end_;
};

void require_rule_budget(double count, double cap) {
    if (count > cap) {
        throw Error(ErrorKind::budget, "oracle size limit: " + std::to_string(count) + " rules exceed cap " +
                                           std::to_string(cap));
    }
}

ValueLists build_lists(const FilteredTree& tree, RuleKind kind, const ListSpec& spec, const Deadline& deadline) {
    ValueLists out;
    out.instant.resize(tree.size());
    out.plus.resize(tree.size());
    const bool system = kind == RuleKind::system;
    auto ord = tree.order();
    std::size_t ticks = 0;
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const auto i = static_cast<std::size_t>(v);
        if (tree.stopped(v)) {
            if (tree.at_terminal(v)) {
                out.instant[i] = {spec.terminal(v)};
                out.plus[i] = out.instant[i];
            }
            continue;
        }
        const auto& ch = tree.node(v).children;
        std::size_t combos = 1;
        for (NodeId w : ch) combos *= out.instant[static_cast<std::size_t>(w)].size();
        auto& inst = out.instant[i];
        auto& plus = out.plus[i];
        inst.reserve(combos + 2);
        plus.reserve(combos + 1);
        inst.push_back(spec.stop_instant(v));
        if (system) {
            inst.push_back(spec.stop_plus_from_t(v));
            plus.push_back(spec.stop_plus(v));
        }
        std::vector<double> shifts(ch.size()), probs(ch.size());
        std::vector<const std::vector<double>*> lists(ch.size());
        for (std::size_t k = 0; k < ch.size(); ++k) {
            shifts[k] = spec.shift(v, ch[k]);
            probs[k] = tree.node(ch[k]).prob;
            lists[k] = &out.instant[static_cast<std::size_t>(ch[k])];
        }
        // odometer, last child fastest so the first child is most significant
        std::vector<std::size_t> digit(ch.size(), 0);
        for (std::size_t c = 0; c < combos; ++c) {
            double target = 0.0;
            for (std::size_t k = 0; k < ch.size(); ++k) target += probs[k] * ((*lists[k])[digit[k]] + shifts[k]);
            const double cp = spec.cont_plus(v, target);
            plus.push_back(cp);
            inst.push_back(spec.cont_instant(v, cp));
            for (std::size_t k = ch.size(); k-- > 0;) {
                if (++digit[k] < lists[k]->size()) break;
                digit[k] = 0;
            }
            if ((++ticks & 0x3fff) == 0) deadline.check();
        }
    }
    return out;
}

std::pair<std::size_t, double> best_of(const std::vector<double>& xs, bool maximize) {
    std::size_t arg = 0;
    double best = xs.front();
    for (std::size_t k = 1; k < xs.size(); ++k) {
        if (maximize ? xs[k] > best : xs[k] < best) {
            best = xs[k];
            arg = k;
        }
    }
    return {arg, best};
}

LatticeProcess list_values(const FilteredTree& tree, const ValueLists& lists, bool maximize) {
    LatticeProcess values(tree.size(), nan);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        if (lists.instant[i].empty()) continue;
        values(v) = best_of(lists.instant[i], maximize).second;
        values.plus(v) = best_of(lists.plus[i], maximize).second;
    }
    freeze_after_terminal(tree, values);
    return values;
}

std::vector<StoppingRule> all_rules(const FilteredTree& tree, RuleKind kind, double cap) {
    std::vector<StoppingRule> rules;
    enumerate_stopping_rules(tree, kind, [&](const StoppingRule& r) { rules.push_back(r); }, cap);
    return rules;
}

}  // namespace

StoppingOracle oracle_optimal_stopping(const FilteredTree& tree, const LatticeProcess& payoff,
                                       const NodeValues& terminal, const Generator& f, RuleKind kind,
                                       const OracleBudget& budget) {
    return oracle_optimal_stopping(tree, payoff, terminal, f, LatticeProcess(tree.size()), kind, budget);
}

StoppingOracle oracle_optimal_stopping(const FilteredTree& tree, const LatticeProcess& payoff,
                                       const NodeValues& terminal, const Generator& f, const LatticeProcess& V,
                                       RuleKind kind, const OracleBudget& budget) {
    const double count = count_rules(tree, kind);
    require_rule_budget(count, budget.max_rules);
    const Deadline deadline(budget.seconds);
    const double h = tree.step();
    auto dplus = [&](NodeId v) { return V.plus(v) - V(v); };
    ListSpec spec;
    spec.terminal = [&](NodeId v) { return terminal[static_cast<std::size_t>(v)]; };
    spec.stop_instant = [&](NodeId v) { return payoff(v); };
    spec.stop_plus_from_t = [&](NodeId v) { return payoff.plus(v) + dplus(v); };
    spec.stop_plus = [&](NodeId v) { return payoff.plus(v); };
    spec.shift = [&](NodeId v, NodeId w) { return V(w) - V.plus(v); };
    spec.cont_plus = [&](NodeId v, double target) { return implicit_step(target, h, f, v); };
    spec.cont_instant = [&](NodeId v, double cp) { return cp + dplus(v); };
    const auto lists = build_lists(tree, kind, spec, deadline);

    StoppingOracle res;
    res.rules = count;
    res.values = list_values(tree, lists, true);
    const auto [arg, best] = best_of(lists.instant[static_cast<std::size_t>(tree.root())], true);
    res.value = best;
    res.argmax = decode_rule(tree, kind, static_cast<double>(arg));
    return res;
}

LatticeProcess pair_payoff_process(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& L, const LatticeProcess& U, const StoppingRule& rho,
                                   const StoppingRule& delta) {
    LatticeProcess w(tree.size(), nan);
    const double h = tree.step();
    auto ord = tree.order();
    for (auto it = ord.rbegin(); it != ord.rend(); ++it) {
        const NodeId v = *it;
        const NodeId p = tree.node(v).parent;
        if (p != no_node && (rho.stopped_by(p) || delta.stopped_by(p))) continue;
        if (tree.stopped(v)) {
            w(v) = xi[static_cast<std::size_t>(v)];
            w.plus(v) = w(v);
        } else if (rho.stops_at(v)) {
            const Phase ph = rho.action(v) == Action::stop_plus ? Phase::plus : Phase::instant;
            w(v) = L(v, ph);
            w.plus(v) = ph == Phase::plus ? L.plus(v) : nan;
        } else if (delta.stops_at(v)) {
            const Phase ph = delta.action(v) == Action::stop_plus ? Phase::plus : Phase::instant;
            w(v) = U(v, ph);
            w.plus(v) = ph == Phase::plus ? U.plus(v) : nan;
        } else {
            double m = 0.0;
            for (NodeId c : tree.node(v).children) m += tree.node(c).prob * w(c);
            w.plus(v) = implicit_step(m, h, f, v);
            w(v) = w.plus(v);
        }
    }
    return w;
}

double pair_payoff(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& L,
                   const LatticeProcess& U, const StoppingRule& rho, const StoppingRule& delta) {
    return pair_payoff_process(tree, xi, f, L, U, rho, delta)(tree.root());
}

GameOracle oracle_game(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& L,
                       const LatticeProcess& U, RuleKind max_kind, RuleKind min_kind, const OracleBudget& budget) {
    GameOracle res;
    res.max_rules = count_rules(tree, max_kind);
    res.min_rules = count_rules(tree, min_kind);
    require_rule_budget(res.max_rules, budget.max_rules);
    require_rule_budget(res.min_rules, budget.max_rules);
    const Deadline deadline(budget.seconds);
    const double h = tree.step();
    const bool max_sys = max_kind == RuleKind::system;
    const bool min_sys = min_kind == RuleKind::system;
    auto lmax = [&](NodeId v) { return max_sys ? std::max(L(v), L.plus(v)) : L(v); };
    auto terminal = [&](NodeId v) { return xi[static_cast<std::size_t>(v)]; };
    auto no_shift = [](NodeId, NodeId) { return 0.0; };

    // maximiser enumerated, minimiser best-responds
    ListSpec up;
    up.terminal = terminal;
    up.stop_instant = [&](NodeId v) { return L(v); };
    up.stop_plus_from_t = [&](NodeId v) { return L.plus(v); };
    up.stop_plus = [&](NodeId v) { return L.plus(v); };
    up.shift = no_shift;
    up.cont_plus = [&](NodeId v, double t) {
        const double c = implicit_step(t, h, f, v);
        return min_sys ? std::min(U.plus(v), c) : c;
    };
    up.cont_instant = [&](NodeId v, double cp) { return std::min(U(v), cp); };
    const auto up_lists = build_lists(tree, max_kind, up, deadline);

    // minimiser enumerated, maximiser best-responds
    ListSpec down;
    down.terminal = terminal;
    down.stop_instant = [&](NodeId v) { return std::max(lmax(v), U(v)); };
    down.stop_plus_from_t = [&](NodeId v) { return std::max(lmax(v), U.plus(v)); };
    down.stop_plus = [&](NodeId v) { return max_sys ? std::max(L.plus(v), U.plus(v)) : U.plus(v); };
    down.shift = no_shift;
    down.cont_plus = [&](NodeId v, double t) {
        const double c = implicit_step(t, h, f, v);
        return max_sys ? std::max(L.plus(v), c) : c;
    };
    down.cont_instant = [&](NodeId v, double cp) { return std::max(L(v), cp); };
    const auto down_lists = build_lists(tree, min_kind, down, deadline);

    res.supinf_values = list_values(tree, up_lists, true);
    res.infsup_values = list_values(tree, down_lists, false);
    const auto root = static_cast<std::size_t>(tree.root());
    const auto [amax, vmax] = best_of(up_lists.instant[root], true);
    const auto [amin, vmin] = best_of(down_lists.instant[root], false);
    res.supinf = vmax;
    res.infsup = vmin;
    res.max_rule = decode_rule(tree, max_kind, static_cast<double>(amax));
    res.min_rule = decode_rule(tree, min_kind, static_cast<double>(amin));

    if (res.max_rules * res.min_rules <= budget.max_pairs) {
        const auto maxers = all_rules(tree, max_kind, budget.max_rules);
        const auto miners = all_rules(tree, min_kind, budget.max_rules);
        std::vector<double> matrix(maxers.size() * miners.size());
        for (std::size_t i = 0; i < maxers.size(); ++i) {
            for (std::size_t j = 0; j < miners.size(); ++j) {
                matrix[i * miners.size() + j] = pair_payoff(tree, xi, f, L, U, maxers[i], miners[j]);
            }
            if ((i & 0x3f) == 0) deadline.check();
        }
        double supinf = -std::numeric_limits<double>::infinity();
        std::size_t arg_max = 0;
        for (std::size_t i = 0; i < maxers.size(); ++i) {
            double worst = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < miners.size(); ++j) worst = std::min(worst, matrix[i * miners.size() + j]);
            if (worst > supinf) {
                supinf = worst;
                arg_max = i;
            }
        }
        double infsup = std::numeric_limits<double>::infinity();
        std::size_t arg_min = 0;
        for (std::size_t j = 0; j < miners.size(); ++j) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < maxers.size(); ++i) best = std::max(best, matrix[i * miners.size() + j]);
            if (best < infsup) {
                infsup = best;
                arg_min = j;
            }
        }
        res.supinf = supinf;
        res.infsup = infsup;
        res.max_rule = maxers[arg_max];
        res.min_rule = miners[arg_min];
        res.literal_pairs = true;
    }
    return res;
}

MajorantReport oracle_snell_smallest(const FilteredTree& tree, const LatticeProcess& payoff,
                                     const NodeValues& terminal, int candidates, std::uint64_t seed) {
    const auto env = snell_envelope(tree, payoff, terminal).Y;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MajorantReport rep;
    rep.candidates = candidates;
    for (int c = 0; c < candidates; ++c) {
        LatticeProcess bumped = payoff;
        NodeValues term = terminal;
        for (double& x : bumped.raw()) x += unit(rng) < 0.5 ? 0.0 : unit(rng);
        for (double& x : term) x += unit(rng) < 0.5 ? 0.0 : unit(rng);
        LatticeProcess cand = snell_envelope(tree, bumped, term).Y;
        if (c % 2 == 1) {
            // add a positive decreasing supermartingale
            const double scale = unit(rng);
            for (NodeId v : tree.order()) {
                const double t = tree.level(tree.stopped(v) ? tree.terminal_ancestor(v) : v);
                cand(v) += scale * (1.0 + tree.horizon() - t);
                cand.plus(v) += scale * (1.0 + tree.horizon() - t - (tree.stopped(v) ? 0.0 : 0.5));
            }
        }
        for (std::size_t k = 0; k < cand.raw().size(); ++k) {
            rep.worst = std::min(rep.worst, cand.raw()[k] - env.raw()[k]);
        }
    }
    rep.ok = rep.worst >= -1e-10;
    return rep;
}

}  // namespace rbsde
