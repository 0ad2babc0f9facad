#include "rbsde/scenario.hpp"

#include "rbsde/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

namespace rbsde {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Expressions

struct Expression::Node {
    enum class Op { num, var, neg, add, sub, mul, div, pow, call };
    Op op = Op::num;
    double value = 0.0;
    std::string name;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

const std::set<std::string> known_vars{"t", "time", "u", "d", "h", "N", "id", "plus", "inf"};
const std::set<std::string> known_funcs{"min", "max", "abs", "exp", "log", "sqrt", "pow"};

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    NodePtr parse() {
        auto e = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        fail_validation("expression '" + s_ + "' at position " + std::to_string(pos_) + ": " + what);
    }
    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static NodePtr binary(Op op, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Expression::Node>();
        n->op = op;
        n->args = {std::move(a), std::move(b)};
        return n;
    }
    NodePtr expr() {
        auto lhs = term();
        while (true) {
            if (eat('+')) {
                lhs = binary(Op::add, lhs, term());
            } else if (eat('-')) {
                lhs = binary(Op::sub, lhs, term());
            } else {
                return lhs;
            }
        }
    }
    NodePtr term() {
        auto lhs = power();
        while (true) {
            if (eat('*')) {
                lhs = binary(Op::mul, lhs, power());
            } else if (eat('/')) {
                lhs = binary(Op::div, lhs, power());
            } else {
                return lhs;
            }
        }
    }
    NodePtr power() {
        auto lhs = unary();
        while (eat('^')) lhs = binary(Op::pow, lhs, unary());
        return lhs;
    }
    NodePtr unary() {
        if (eat('-')) {
            auto n = std::make_shared<Expression::Node>();
            n->op = Op::neg;
            n->args = {unary()};
            return n;
        }
        if (eat('+')) return unary();
        return primary();
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end");
        const char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = expr();
            if (!eat(')')) fail("missing ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
            if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
                std::size_t q = pos_ + 1;
                if (q < s_.size() && (s_[q] == '+' || s_[q] == '-')) ++q;
                if (q < s_.size() && std::isdigit(static_cast<unsigned char>(s_[q]))) {
                    pos_ = q;
                    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
                }
            }
            auto n = std::make_shared<Expression::Node>();
            try {
                n->value = parse_double(s_.substr(start, pos_ - start));
            } catch (const Error&) {
                pos_ = start;
                fail("bad number");
            }
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            auto n = std::make_shared<Expression::Node>();
            n->name = name;
            if (eat('(')) {
                if (!known_funcs.count(name)) {
                    pos_ = start;
                    fail("unknown function '" + name + "'");
                }
                n->op = Op::call;
                if (!eat(')')) {
                    do {
                        n->args.push_back(expr());
                    } while (eat(','));
                    if (!eat(')')) fail("missing ')' after arguments of " + name);
                }
                const std::size_t want = (name == "min" || name == "max" || name == "pow") ? 2 : 1;
                if (n->args.size() != want) fail(name + " takes " + std::to_string(want) + " argument(s)");
                return n;
            }
            if (!known_vars.count(name)) {
                pos_ = start;
                fail("unknown variable '" + name + "'");
            }
            n->op = Op::var;
            return n;
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    std::size_t pos_ = 0;
};

double eval_node(const Expression::Node& n, const Expression::Vars& x) {
    switch (n.op) {
        case Op::num: return n.value;
        case Op::var:
            if (n.name == "t") return x.t;
            if (n.name == "time") return x.time;
            if (n.name == "u") return x.u;
            if (n.name == "d") return x.d;
            if (n.name == "h") return x.h;
            if (n.name == "N") return x.N;
            if (n.name == "id") return x.id;
            if (n.name == "plus") return x.plus;
            return std::numeric_limits<double>::infinity();
        case Op::neg: return -eval_node(*n.args[0], x);
        case Op::add: return eval_node(*n.args[0], x) + eval_node(*n.args[1], x);
        case Op::sub: return eval_node(*n.args[0], x) - eval_node(*n.args[1], x);
        case Op::mul: return eval_node(*n.args[0], x) * eval_node(*n.args[1], x);
        case Op::div: return eval_node(*n.args[0], x) / eval_node(*n.args[1], x);
        case Op::pow: return std::pow(eval_node(*n.args[0], x), eval_node(*n.args[1], x));
        case Op::call: {
            const double a = eval_node(*n.args[0], x);
            if (n.name == "abs") return std::abs(a);
            if (n.name == "exp") return std::exp(a);
            if (n.name == "log") return std::log(a);
            if (n.name == "sqrt") return std::sqrt(a);
            const double b = eval_node(*n.args[1], x);
            if (n.name == "min") return std::min(a, b);
            if (n.name == "max") return std::max(a, b);
            return std::pow(a, b);
        }
    }
    return 0.0;
}

}  // namespace

Expression::Expression(std::string text) : text_(std::move(text)) { root_ = Parser(text_).parse(); }

double Expression::eval(const Vars& vars) const { return root_ ? eval_node(*root_, vars) : 0.0; }

// ---------------------------------------------------------------------------
// Value specs

ValueSpec ValueSpec::constant(double c) { return of_table({c}); }

ValueSpec ValueSpec::expression(std::string text) {
    ValueSpec s;
    s.kind = Kind::expr;
    s.expr = std::move(text);
    return s;
}

ValueSpec ValueSpec::of_table(std::vector<double> values) {
    ValueSpec s;
    s.kind = Kind::table;
    s.table = std::move(values);
    return s;
}

ValueSpec ValueSpec::split(ValueSpec instant, ValueSpec plus) {
    ValueSpec s;
    s.kind = Kind::split;
    s.parts = {std::move(instant), std::move(plus)};
    return s;
}

namespace {

Expression::Vars vars_at(const FilteredTree& tree, NodeId v, Phase ph) {
    Expression::Vars x;
    const auto& n = tree.node(v);
    x.t = n.level;
    x.time = tree.time(n.level);
    x.u = n.up_count;
    x.d = n.level - n.up_count;
    x.h = tree.step();
    x.N = tree.horizon();
    x.id = v;
    x.plus = ph == Phase::plus ? 1.0 : 0.0;
    return x;
}

double spec_value(const ValueSpec& s, const FilteredTree& tree, NodeId v, Phase ph, const Expression* e,
                  double fallback, const std::string& what) {
    switch (s.kind) {
        case ValueSpec::Kind::none: return fallback;
        case ValueSpec::Kind::expr: return e->eval(vars_at(tree, v, ph));
        case ValueSpec::Kind::table:
            if (s.table.size() == 1) return s.table[0];
            if (s.table.size() != tree.size()) {
                fail_validation("table for " + what + " has " + std::to_string(s.table.size()) + " entries, tree has " +
                                std::to_string(tree.size()) + " nodes");
            }
            return s.table[static_cast<std::size_t>(v)];
        case ValueSpec::Kind::split: break;
    }
    return fallback;
}

}  // namespace

LatticeProcess ValueSpec::eval(const FilteredTree& tree, double fallback, const std::string& what) const {
    LatticeProcess out(tree.size(), fallback);
    if (kind == Kind::split) {
        if (parts.size() != 2) fail_validation(what + " needs instant and plus parts");
        const auto a = parts[0].eval(tree, fallback, what + ".instant");
        const auto b = parts[1].eval(tree, fallback, what + ".plus");
        for (NodeId v : tree.order()) {
            out(v) = a(v);
            out.plus(v) = b.plus(v);
        }
        return out;
    }
    std::optional<Expression> e;
    if (kind == Kind::expr) e.emplace(expr);
    for (NodeId v : tree.order()) {
        for (Phase ph : {Phase::instant, Phase::plus}) {
            const double x = spec_value(*this, tree, v, ph, e ? &*e : nullptr, fallback, what);
            if (std::isnan(x)) fail_validation(what + " is NaN at node " + std::to_string(v));
            out(v, ph) = x;
        }
    }
    return out;
}

NodeValues ValueSpec::eval_nodes(const FilteredTree& tree, double fallback, const std::string& what) const {
    return eval(tree, fallback, what).instants();
}

// ---------------------------------------------------------------------------
// JSON

namespace {

json number_json(double x) {
    if (std::isfinite(x)) return x;
    return format_double(x);
}

double number_from(const json& j, const std::string& what) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        try {
            return parse_double(j.get<std::string>());
        } catch (const Error&) {
        }
    }
    fail_validation(what + " must be a number");
}

json value_to_json(const ValueSpec& s) {
    switch (s.kind) {
        case ValueSpec::Kind::none: return nullptr;
        case ValueSpec::Kind::expr: return s.expr;
        case ValueSpec::Kind::table: {
            json arr = json::array();
            for (double x : s.table) arr.push_back(number_json(x));
            return arr;
        }
        case ValueSpec::Kind::split: {
            json o = json::object();
            o["instant"] = value_to_json(s.parts.at(0));
            o["plus"] = value_to_json(s.parts.at(1));
            return o;
        }
    }
    return nullptr;
}

ValueSpec value_from_json(const json& j, const std::string& what) {
    if (j.is_null()) return {};
    if (j.is_string()) {
        Expression check(j.get<std::string>());
        return ValueSpec::expression(j.get<std::string>());
    }
    if (j.is_number()) return ValueSpec::constant(j.get<double>());
    if (j.is_array()) {
        std::vector<double> t;
        for (std::size_t i = 0; i < j.size(); ++i) t.push_back(number_from(j[i], what + "[" + std::to_string(i) + "]"));
        return ValueSpec::of_table(std::move(t));
    }
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (it.key() != "instant" && it.key() != "plus") fail_validation(what + ": unknown key '" + it.key() + "'");
        }
        if (!j.contains("instant") || !j.contains("plus")) fail_validation(what + " needs both instant and plus");
        return ValueSpec::split(value_from_json(j["instant"], what + ".instant"),
                                value_from_json(j["plus"], what + ".plus"));
    }
    fail_validation(what + " has an unsupported type");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& what) {
    if (!j.is_object()) fail_validation(what + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) fail_validation(what + ": unknown key '" + it.key() + "'");
    }
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key) || j[key].is_null()) return fallback;
    try {
        return j[key].get<T>();
    } catch (const std::exception&) {
        fail_validation(std::string("field '") + key + "' has the wrong type");
    }
}

std::vector<double> ladder_from(const json& j, const char* key) {
    std::vector<double> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) fail_validation(std::string(key) + " must be an array");
    for (std::size_t i = 0; i < j[key].size(); ++i) out.push_back(number_from(j[key][i], key));
    return out;
}

json to_json(const Scenario& s) {
    json o = json::object();
    o["name"] = s.name;
    json t = json::object();
    t["kind"] = s.tree.kind;
    if (s.tree.kind == "binomial") {
        t["N"] = s.tree.N;
        t["h"] = s.tree.h;
        t["p"] = s.tree.p;
    } else {
        t["h"] = s.tree.h;
        json nodes = json::array();
        for (const auto& n : s.tree.nodes) {
            json r = json::object();
            r["id"] = n.id;
            r["parent"] = n.parent == no_node ? json(nullptr) : json(n.parent);
            r["prob"] = n.prob;
            nodes.push_back(r);
        }
        t["nodes"] = nodes;
    }
    o["tree"] = t;
    if (s.terminal.level || !s.terminal.stops.empty()) {
        json term = json::object();
        if (s.terminal.level) term["level"] = *s.terminal.level;
        if (!s.terminal.stops.empty()) term["stops"] = s.terminal.stops;
        o["terminal"] = term;
    }
    o["xi"] = value_to_json(s.xi);
    json g = json::object();
    g["family"] = s.generator.family;
    if (s.generator.a.present()) g["a"] = value_to_json(s.generator.a);
    g["b"] = s.generator.b;
    g["c"] = s.generator.c;
    g["p"] = s.generator.p;
    if (!s.generator.knots.empty()) {
        json k = json::array();
        for (const auto& [y, v] : s.generator.knots) k.push_back(json::array({y, v}));
        g["knots"] = k;
    }
    if (s.generator.lower_bound.present()) g["lower_bound"] = value_to_json(s.generator.lower_bound);
    if (s.generator.lipschitz) g["lipschitz"] = *s.generator.lipschitz;
    o["generator"] = g;
    if (s.v_star.present() || s.v_plus.present()) {
        json v = json::object();
        v["star"] = value_to_json(s.v_star);
        v["plus"] = value_to_json(s.v_plus);
        o["V"] = v;
    }
    if (s.L.present()) o["L"] = value_to_json(s.L);
    if (s.U.present()) o["U"] = value_to_json(s.U);
    if (s.S.present()) o["S"] = value_to_json(s.S);
    json sv = json::object();
    sv["barrier"] = s.solver.barrier;
    sv["scheme"] = s.solver.scheme;
    sv["tol"] = s.solver.tol;
    sv["max_iter"] = s.solver.max_iter;
    if (!s.solver.ladder.empty()) sv["ladder"] = s.solver.ladder;
    if (!s.solver.moreau_ladder.empty()) sv["moreau_ladder"] = s.solver.moreau_ladder;
    sv["weighted"] = s.solver.weighted;
    if (s.solver.floor.present()) sv["floor"] = value_to_json(s.solver.floor);
    o["solver"] = sv;
    json ve = json::object();
    ve["suites"] = s.verify.suites;
    ve["trials"] = s.verify.trials;
    ve["seed"] = s.verify.seed;
    ve["max_rules"] = s.verify.max_rules;
    ve["max_pairs"] = s.verify.max_pairs;
    ve["seconds"] = s.verify.seconds;
    if (s.verify.family) {
        const auto& f = *s.verify.family;
        json fam = json::object();
        fam["max_depth"] = f.max_depth;
        fam["max_branching"] = f.max_branching;
        fam["barrier"] = f.barrier;
        fam["with_v"] = f.with_v;
        fam["random_terminal"] = f.random_terminal;
        fam["max_system_rules"] = f.max_system_rules;
        ve["family"] = fam;
    }
    o["verify"] = ve;
    return o;
}

Scenario from_json(const json& o) {
    check_keys(o, {"name", "tree", "terminal", "xi", "generator", "V", "L", "U", "S", "solver", "verify"}, "scenario");
    Scenario s;
    s.name = get_or<std::string>(o, "name", "");
    if (!o.contains("tree")) fail_validation("scenario has no tree");
    const json& t = o["tree"];
    check_keys(t, {"kind", "N", "h", "p", "nodes"}, "tree");
    s.tree.kind = get_or<std::string>(t, "kind", "binomial");
    s.tree.h = get_or<double>(t, "h", 1.0);
    if (s.tree.kind == "binomial") {
        s.tree.N = get_or<int>(t, "N", 1);
        s.tree.p = get_or<double>(t, "p", 0.5);
    } else if (s.tree.kind == "explicit") {
        if (!t.contains("nodes") || !t["nodes"].is_array()) fail_validation("explicit tree needs a nodes array");
        for (const auto& r : t["nodes"]) {
            check_keys(r, {"id", "parent", "prob"}, "tree node");
            NodeSpec n;
            n.id = get_or<NodeId>(r, "id", 0);
            n.parent = r.contains("parent") && !r["parent"].is_null() ? r["parent"].get<NodeId>() : no_node;
            n.prob = get_or<double>(r, "prob", 1.0);
            s.tree.nodes.push_back(n);
        }
    } else {
        fail_validation("unknown tree kind '" + s.tree.kind + "'");
    }
    if (o.contains("terminal")) {
        const json& term = o["terminal"];
        check_keys(term, {"level", "stops"}, "terminal");
        if (term.contains("level")) s.terminal.level = term["level"].get<int>();
        if (term.contains("stops")) s.terminal.stops = term["stops"].get<std::vector<NodeId>>();
    }
    s.xi = value_from_json(o.value("xi", json(nullptr)), "xi");
    if (o.contains("generator")) {
        const json& g = o["generator"];
        check_keys(g, {"family", "a", "b", "c", "p", "knots", "lower_bound", "lipschitz"}, "generator");
        s.generator.family = get_or<std::string>(g, "family", "zero");
        s.generator.a = value_from_json(g.value("a", json(nullptr)), "generator.a");
        s.generator.b = get_or<double>(g, "b", 0.0);
        s.generator.c = get_or<double>(g, "c", 1.0);
        s.generator.p = get_or<double>(g, "p", 1.0);
        if (g.contains("knots")) {
            for (const auto& k : g["knots"]) {
                if (!k.is_array() || k.size() != 2) fail_validation("generator knots must be [y, f] pairs");
                s.generator.knots.emplace_back(number_from(k[0], "knot"), number_from(k[1], "knot"));
            }
        }
        s.generator.lower_bound = value_from_json(g.value("lower_bound", json(nullptr)), "generator.lower_bound");
        if (g.contains("lipschitz")) s.generator.lipschitz = number_from(g["lipschitz"], "lipschitz");
    }
    if (o.contains("V")) {
        const json& v = o["V"];
        check_keys(v, {"star", "plus"}, "V");
        s.v_star = value_from_json(v.value("star", json(nullptr)), "V.star");
        s.v_plus = value_from_json(v.value("plus", json(nullptr)), "V.plus");
    }
    s.L = value_from_json(o.value("L", json(nullptr)), "L");
    s.U = value_from_json(o.value("U", json(nullptr)), "U");
    s.S = value_from_json(o.value("S", json(nullptr)), "S");
    if (o.contains("solver")) {
        const json& sv = o["solver"];
        check_keys(sv, {"barrier", "scheme", "tol", "max_iter", "ladder", "moreau_ladder", "weighted", "floor"},
                   "solver");
        s.solver.barrier = get_or<std::string>(sv, "barrier", "lower");
        s.solver.scheme = get_or<std::string>(sv, "scheme", "direct");
        s.solver.tol = get_or<double>(sv, "tol", 1e-10);
        s.solver.max_iter = get_or<int>(sv, "max_iter", 10000);
        s.solver.ladder = ladder_from(sv, "ladder");
        s.solver.moreau_ladder = ladder_from(sv, "moreau_ladder");
        s.solver.weighted = get_or<bool>(sv, "weighted", false);
        s.solver.floor = value_from_json(sv.value("floor", json(nullptr)), "solver.floor");
    }
    if (o.contains("verify")) {
        const json& ve = o["verify"];
        check_keys(ve, {"suites", "trials", "seed", "max_rules", "max_pairs", "seconds", "family"}, "verify");
        s.verify.suites = get_or<std::vector<std::string>>(ve, "suites", {});
        s.verify.trials = get_or<int>(ve, "trials", 200);
        s.verify.seed = get_or<std::uint64_t>(ve, "seed", 1);
        s.verify.max_rules = get_or<double>(ve, "max_rules", 1e7);
        s.verify.max_pairs = get_or<double>(ve, "max_pairs", 1e6);
        s.verify.seconds = get_or<double>(ve, "seconds", 600.0);
        if (ve.contains("family")) {
            const json& f = ve["family"];
            check_keys(f, {"max_depth", "max_branching", "barrier", "with_v", "random_terminal", "max_system_rules"},
                       "verify.family");
            RandomFamily fam;
            fam.max_depth = get_or<int>(f, "max_depth", 3);
            fam.max_branching = get_or<int>(f, "max_branching", 3);
            fam.barrier = get_or<std::string>(f, "barrier", "double");
            fam.with_v = get_or<bool>(f, "with_v", false);
            fam.random_terminal = get_or<bool>(f, "random_terminal", true);
            fam.max_system_rules = get_or<double>(f, "max_system_rules", 0.0);
            s.verify.family = fam;
        }
    }
    return s;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail_validation(std::string("scenario is not valid structured text: ") + e.what());
    }
    try {
        return from_json(j);
    } catch (const json::exception& e) {
        fail_validation(std::string("scenario field has the wrong type: ") + e.what());
    }
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_validation("cannot read scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

bool same_scenario(const Scenario& a, const Scenario& b) { return to_json(a) == to_json(b); }

// ---------------------------------------------------------------------------
// Materialisation

FilteredTree build_tree(const Scenario& s) {
    FilteredTree base = s.tree.kind == "binomial" ? FilteredTree::binomial(s.tree.N, s.tree.h, s.tree.p)
                                                  : FilteredTree::from_nodes(s.tree.h, s.tree.nodes);
    if (!s.terminal.stops.empty()) {
        std::vector<std::pair<NodeId, Action>> stops;
        for (NodeId v : s.terminal.stops) {
            if (v < 0 || static_cast<std::size_t>(v) >= base.size()) {
                fail_validation("terminal stop " + std::to_string(v) + " is not a node");
            }
            stops.emplace_back(v, Action::stop_instant);
        }
        base = base.with_terminal(StoppingRule::from_stops(base, stops, RuleKind::plain));
    }
    if (s.terminal.level) {
        if (*s.terminal.level < 0) fail_validation("terminal level must be nonnegative");
        base = base.truncated(*s.terminal.level);
    }
    return base;
}

Generator build_generator(const GeneratorSpec& g, const FilteredTree& tree) {
    const NodeValues a = g.a.eval_nodes(tree, 0.0, "generator.a");
    Generator f;
    if (g.family == "zero") {
        f = zero_generator();
    } else if (g.family == "constant") {
        f = constant_generator(a);
    } else if (g.family == "affine") {
        f = affine_generator(a, g.b);
    } else if (g.family == "power") {
        f = power_generator(a, g.b, g.p);
    } else if (g.family == "logistic") {
        f = logistic_generator(a, g.b, g.c);
    } else if (g.family == "tabulated") {
        f = tabulated_generator(a, g.knots);
    } else {
        fail_validation("unknown generator family '" + g.family + "'");
    }
    if (g.lower_bound.present()) f.lower_bound = g.lower_bound.eval_nodes(tree, 0.0, "generator.lower_bound");
    if (g.lipschitz) f.lipschitz = *g.lipschitz;
    probe_check(tree, f);
    return f;
}

Problem materialize(const Scenario& s) {
    const double inf = std::numeric_limits<double>::infinity();
    Problem p{build_tree(s), {}, {}, {}, {}, {}, std::nullopt, {}, {}};
    const auto& tree = p.tree;
    if (!s.xi.present()) fail_validation("scenario has no terminal value xi");
    p.xi = s.xi.eval_nodes(tree, 0.0, "xi");
    for (NodeId v : tree.order()) {
        if (tree.at_terminal(v) && !std::isfinite(p.xi[static_cast<std::size_t>(v)])) {
            fail_validation("xi is not finite at leaf " + std::to_string(v));
        }
    }
    p.f = build_generator(s.generator, tree);
    if (s.v_star.present() || s.v_plus.present()) {
        const auto star = s.v_star.eval_nodes(tree, 0.0, "V.star");
        const auto plus = s.v_plus.eval_nodes(tree, 0.0, "V.plus");
        p.V = from_increments(tree, star, plus);
    } else {
        p.V = LatticeProcess(tree.size());
    }
    const std::string& barrier = s.solver.barrier;
    if (barrier != "none" && barrier != "lower" && barrier != "upper" && barrier != "double") {
        fail_validation("unknown barrier configuration '" + barrier + "'");
    }
    p.L = s.L.eval(tree, -inf, "L");
    p.U = s.U.eval(tree, inf, "U");
    if (barrier == "none" || barrier == "upper") p.L = LatticeProcess(tree.size(), -inf);
    if (barrier == "none" || barrier == "lower") p.U = LatticeProcess(tree.size(), inf);
    require_separation(tree, p.L, p.U, p.xi);
    if (s.S.present()) p.S = s.S.eval(tree, 0.0, "S");
    if (s.solver.floor.present()) {
        p.floor = s.solver.floor.eval_nodes(tree, 1.0, "solver.floor");
    } else {
        p.floor.resize(tree.size());
        for (NodeId v : tree.order()) p.floor[static_cast<std::size_t>(v)] = std::exp(-tree.time(tree.level(v)));
    }
    p.budget = OracleBudget{s.verify.max_rules, s.verify.max_pairs, s.verify.seconds};
    return p;
}

// ---------------------------------------------------------------------------
// Random families

Scenario random_scenario(const RandomFamily& family, std::mt19937_64& rng, const std::string& name) {
    if (family.max_depth < 1 || family.max_branching < 1) fail_validation("random family needs depth, branching >= 1");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uni = [&](double a, double b) { return a + (b - a) * unit(rng); };
    auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

    Scenario s;
    s.name = name;
    s.tree.kind = "explicit";
    const double steps[] = {0.25, 0.5, 1.0};
    s.tree.h = steps[pick(0, 2)];
    FilteredTree tree = FilteredTree::binomial(1, 1.0, 0.5);
    while (true) {
        const int depth = pick(1, family.max_depth);
        std::vector<NodeSpec> nodes{{0, no_node, 1.0}};
        std::vector<int> level{0};
        for (std::size_t i = 0; i < nodes.size(); ++i) {
            if (level[i] == depth) continue;
            const int k = pick(1, family.max_branching);
            std::vector<double> w(static_cast<std::size_t>(k));
            double total = 0.0;
            for (double& x : w) total += (x = uni(0.2, 1.0));
            for (double x : w) {
                nodes.push_back({static_cast<NodeId>(nodes.size()), static_cast<NodeId>(i), x / total});
                level.push_back(level[i] + 1);
            }
        }
        s.tree.nodes = nodes;
        s.terminal = {};
        if (family.random_terminal && unit(rng) < 0.3) {
            std::vector<std::uint8_t> marked(nodes.size(), 0);
            for (std::size_t i = 1; i < nodes.size(); ++i) {
                const auto par = static_cast<std::size_t>(nodes[i].parent);
                marked[i] = marked[par];
                if (!marked[i] && level[i] < depth && unit(rng) < 0.2) {
                    marked[i] = 1;
                    s.terminal.stops.push_back(static_cast<NodeId>(i));
                }
            }
        }
        tree = build_tree(s);
        if (family.max_system_rules <= 0.0 || count_rules(tree, RuleKind::system) <= family.max_system_rules) break;
    }
    const std::size_t n = tree.size();
    auto table = [&](double lo, double hi) {
        std::vector<double> t(n);
        for (double& x : t) x = uni(lo, hi);
        return t;
    };

    std::vector<double> xi = table(-1.0, 1.0);
    s.xi = ValueSpec::of_table(xi);

    const int fam = pick(0, 4);
    s.generator.a = ValueSpec::of_table(table(-1.0, 1.0));
    switch (fam) {
        case 0:
            s.generator.family = "constant";
            break;
        case 1:
            s.generator.family = "affine";
            s.generator.b = uni(0.0, 1.5);
            break;
        case 2:
            s.generator.family = "power";
            s.generator.b = uni(0.0, 1.0);
            s.generator.p = pick(1, 3);
            break;
        case 3:
            s.generator.family = "logistic";
            s.generator.b = uni(0.0, 2.0);
            s.generator.c = uni(0.5, 2.0);
            break;
        default: {
            s.generator.family = "tabulated";
            double y = -2.0, f = uni(-1.0, 1.0);
            for (int k = 0; k < 4; ++k) {
                s.generator.knots.emplace_back(y, f);
                y += uni(0.3, 1.5);
                f -= uni(0.0, 1.0);
            }
            break;
        }
    }

    if (family.with_v) {
        s.v_star = ValueSpec::of_table(table(-0.3, 0.3));
        s.v_plus = ValueSpec::of_table(table(-0.3, 0.3));
    }

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> li(n), lp(n), ui(n, inf), up(n, inf);
    for (std::size_t i = 0; i < n; ++i) {
        li[i] = uni(-1.5, 0.3);
        lp[i] = uni(-1.5, 0.3);
        if (family.barrier == "double") {
            const double top = std::max(li[i], lp[i]);
            const bool touch = unit(rng) < 0.1;
            ui[i] = touch ? top : top + uni(0.0, 1.0);
            up[i] = top + uni(0.0, 1.0);
        }
        const auto v = static_cast<NodeId>(i);
        if (tree.stopped(v)) {
            li[i] = lp[i] = std::min(li[i], xi[i]);
            if (family.barrier == "double") ui[i] = up[i] = std::max(ui[i], xi[i]);
        }
    }
    s.solver.barrier = family.barrier;
    if (family.barrier != "none") s.L = ValueSpec::split(ValueSpec::of_table(li), ValueSpec::of_table(lp));
    if (family.barrier == "double") s.U = ValueSpec::split(ValueSpec::of_table(ui), ValueSpec::of_table(up));
    s.solver.scheme = family.barrier == "double" ? "decoupled" : "direct";
    return s;
}

unsigned thread_count() {
    if (const char* env = std::getenv("RBSDE_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

}  // namespace rbsde
