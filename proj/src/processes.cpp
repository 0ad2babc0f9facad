#include "rbsde/processes.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace rbsde {

double jump_star(const FilteredTree& tree, const LatticeProcess& k, NodeId v) {
    const NodeId p = tree.node(v).parent;
    if (p == no_node || tree.stopped(p)) return 0.0;
    return k(v) - k.plus(p);
}

double jump_plus(const FilteredTree& tree, const LatticeProcess& k, NodeId v) {
    if (tree.stopped(v)) return 0.0;
    return k.plus(v) - k(v);
}

LatticeProcess from_increments(const FilteredTree& tree, std::span<const double> star,
                               std::span<const double> plus) {
    LatticeProcess k(tree.size());
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        if (p == no_node) {
            k(v) = 0.0;
        } else if (tree.stopped(p)) {
            k(v) = k(p);
        } else {
            k(v) = k.plus(p) + star[static_cast<std::size_t>(v)];
        }
        k.plus(v) = tree.stopped(v) ? k(v) : k(v) + plus[static_cast<std::size_t>(v)];
    }
    return k;
}

void freeze_after_terminal(const FilteredTree& tree, LatticeProcess& x) {
    for (NodeId v : tree.order()) {
        if (!tree.stopped(v)) continue;
        if (tree.at_terminal(v)) {
            x.plus(v) = x(v);
        } else {
            const NodeId p = tree.node(v).parent;
            x(v) = x(p);
            x.plus(v) = x(p);
        }
    }
}

std::pair<LatticeProcess, LatticeProcess> jordan(const FilteredTree& tree, const LatticeProcess& k) {
    std::vector<double> sp(tree.size(), 0.0), pp(tree.size(), 0.0), sm(tree.size(), 0.0), pm(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        const auto i = static_cast<std::size_t>(v);
        const double s = jump_star(tree, k, v);
        const double q = jump_plus(tree, k, v);
        sp[i] = std::max(s, 0.0);
        sm[i] = std::max(-s, 0.0);
        pp[i] = std::max(q, 0.0);
        pm[i] = std::max(-q, 0.0);
    }
    return {from_increments(tree, sp, pp), from_increments(tree, sm, pm)};
}

double worst_decrease(const FilteredTree& tree, const LatticeProcess& k) {
    double worst = 0.0;
    for (NodeId v : tree.order()) {
        worst = std::min({worst, jump_star(tree, k, v), jump_plus(tree, k, v)});
    }
    return worst;
}

double predictability_gap(const FilteredTree& tree, const LatticeProcess& k) {
    double gap = 0.0;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        const auto& ch = tree.node(v).children;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (NodeId w : ch) {
            const double s = jump_star(tree, k, w);
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        if (!ch.empty()) gap = std::max(gap, hi - lo);
    }
    return gap;
}

double expected_variation(const FilteredTree& tree, const LatticeProcess& k) {
    double acc = 0.0;
    for (NodeId v : tree.order()) {
        acc += tree.reach_probability(v) * (std::abs(jump_star(tree, k, v)) + std::abs(jump_plus(tree, k, v)));
    }
    return acc;
}

Violation check_supermartingale(const FilteredTree& tree, const LatticeProcess& x, double tol) {
    Violation out;
    auto note = [&](double amount, NodeId v, Phase ph) {
        if (amount > out.worst) {
            out.worst = amount;
            out.node = v;
            out.slot = Slot{tree.level(v), ph};
        }
    };
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        note(x.plus(v) - x(v), v, Phase::instant);
        note(tree.expect_children(v, x) - x.plus(v), v, Phase::plus);
    }
    out.ok = out.worst <= tol;
    return out;
}

double martingale_gap(const FilteredTree& tree, const LatticeProcess& m) {
    double gap = 0.0;
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        gap = std::max(gap, std::abs(m.plus(v) - m(v)));
        gap = std::max(gap, std::abs(tree.expect_children(v, m) - m.plus(v)));
    }
    return gap;
}

DoobDecomposition doob_decompose(const FilteredTree& tree, const LatticeProcess& x) {
    std::vector<double> hs(tree.size(), 0.0), cs(tree.size(), 0.0), cp(tree.size(), 0.0), zero(tree.size(), 0.0);
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        const double e = tree.expect_children(v, x);
        cp[static_cast<std::size_t>(v)] = x.plus(v) - x(v);
        for (NodeId w : tree.node(v).children) {
            hs[static_cast<std::size_t>(w)] = x(w) - e;
            cs[static_cast<std::size_t>(w)] = e - x.plus(v);
        }
    }
    DoobDecomposition d;
    d.x0 = x(tree.root());
    d.martingale = from_increments(tree, hs, zero);
    d.drift = from_increments(tree, cs, cp);
    LatticeProcess rebuilt = d.martingale + d.drift;
    for (double& r : rebuilt.raw()) r += d.x0;
    LatticeProcess frozen = x;
    freeze_after_terminal(tree, frozen);
    d.residual = max_abs_diff(rebuilt, frozen);
    return d;
}

MertensDecomposition mertens_decompose(const FilteredTree& tree, const LatticeProcess& x) {
    const auto check = check_supermartingale(tree, x);
    if (!check.ok) {
        fail_validation("not a supermartingale: violation " + format_double(check.worst) + " at node " +
                        std::to_string(check.node) + " slot " + to_string(check.slot));
    }
    auto d = doob_decompose(tree, x);
    MertensDecomposition m;
    m.x0 = d.x0;
    m.martingale = std::move(d.martingale);
    m.increasing = -d.drift;
    m.residual = d.residual;
    return m;
}

std::pair<LatticeProcess, LatticeProcess> left_right_limits(const FilteredTree& tree, const LatticeProcess& x) {
    LatticeProcess left = x;
    LatticeProcess right = x;
    for (NodeId v : tree.order()) {
        const NodeId p = tree.node(v).parent;
        left(v) = p == no_node ? x(v) : x.plus(p);
        right(v) = x.plus(v);
    }
    return {left, right};
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double x = 0.0;
    const char* b = text.data();
    const char* e = b + text.size();
    if (b != e && *b == '+') ++b;
    auto res = std::from_chars(b, e, x);
    if (res.ec != std::errc{} || res.ptr != e) fail_validation("malformed number '" + text + "'");
    return x;
}

void write_csv(std::ostream& out, const FilteredTree& tree, const LatticeProcess& x) {
    out << "node_id,slot,value\n";
    for (NodeId v : tree.order()) {
        const int t = tree.level(v);
        out << v << ',' << to_string(Slot{t, Phase::instant}) << ',' << format_double(x(v)) << '\n';
        if (!tree.stopped(v)) {
            out << v << ',' << to_string(Slot{t, Phase::plus}) << ',' << format_double(x.plus(v)) << '\n';
        }
    }
}

LatticeProcess read_csv(std::istream& in, const FilteredTree& tree) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    LatticeProcess x(tree.size(), nan);
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("node_id", 0) == 0) continue;
        }
        std::stringstream ss(line);
        std::string id, slot, value;
        if (!std::getline(ss, id, ',') || !std::getline(ss, slot, ',') || !std::getline(ss, value)) {
            fail_validation("malformed CSV row '" + line + "'");
        }
        const auto v = static_cast<NodeId>(parse_double(id));
        if (v < 0 || static_cast<std::size_t>(v) >= tree.size()) fail_validation("CSV node id out of range");
        const Slot s = parse_slot(slot);
        if (s.level != tree.level(v)) fail_validation("CSV slot level does not match node " + id);
        x(v, s.phase) = parse_double(value);
    }
    for (NodeId v : tree.order()) {
        if (std::isnan(x(v))) fail_validation("CSV has no value for node " + std::to_string(v));
        if (std::isnan(x.plus(v))) x.plus(v) = x(v);
    }
    return x;
}

}  // namespace rbsde
