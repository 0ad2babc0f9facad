#pragma once

#include "rbsde/dynkin.hpp"
#include "rbsde/rbsde_double.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rbsde {

/// Compiled arithmetic expression over node labels.
///
/// Variables: t (level), time (t h), u (up moves), d (down moves), h, N, id,
/// plus (1 on the t+ slot). Functions: min, max, abs, exp, log, sqrt, pow.
/// Binary operators + - * / ^ all associate strictly left to right.
class Expression {
public:
    Expression() = default;
    /// Throws Error(validation) with the offending position on a syntax error.
    explicit Expression(std::string text);

    struct Vars {
        double t = 0, time = 0, u = 0, d = 0, h = 0, N = 0, id = 0, plus = 0;
    };
    double eval(const Vars& vars) const;
    const std::string& text() const noexcept { return text_; }

    struct Node;

private:
    std::string text_;
    std::shared_ptr<const Node> root_;
};

/// Per-slot data: an expression, a per-node table, or separate instant / plus specs.
struct ValueSpec {
    enum class Kind { none, expr, table, split };
    Kind kind = Kind::none;
    std::string expr;
    std::vector<double> table;
    std::vector<ValueSpec> parts;   ///< {instant, plus} when split

    static ValueSpec constant(double c);
    static ValueSpec expression(std::string text);
    static ValueSpec of_table(std::vector<double> values);
    static ValueSpec split(ValueSpec instant, ValueSpec plus);

    bool present() const noexcept { return kind != Kind::none; }
    /// Values on every slot; `fallback` fills an absent spec. `what` names the field in errors.
    LatticeProcess eval(const FilteredTree& tree, double fallback, const std::string& what) const;
    /// Instant-slot values only.
    NodeValues eval_nodes(const FilteredTree& tree, double fallback, const std::string& what) const;
};

struct TreeSpec {
    std::string kind = "binomial";   ///< binomial | explicit
    int N = 1;
    double h = 1.0;
    double p = 0.5;
    std::vector<NodeSpec> nodes;
};

struct TerminalSpec {
    std::optional<int> level;        ///< T = level (capped by N)
    std::vector<NodeId> stops;       ///< or T = first listed node on each path
};

struct GeneratorSpec {
    std::string family = "zero";     ///< zero | constant | affine | power | logistic | tabulated
    ValueSpec a;                     ///< intercept per node
    double b = 0.0;
    double c = 1.0;
    double p = 1.0;
    std::vector<std::pair<double, double>> knots;
    ValueSpec lower_bound;           ///< declared l(t), when known
    std::optional<double> lipschitz;
};

struct SolverSpec {
    std::string barrier = "lower";   ///< none | lower | upper | double
    std::string scheme = "direct";
    double tol = 1e-10;
    int max_iter = 10000;
    std::vector<double> ladder;        ///< truncation levels (monotone)
    std::vector<double> moreau_ladder; ///< inf-convolution indices
    bool weighted = false;
    ValueSpec floor;                   ///< truncation floor g, default exp(-time)
};

struct RandomFamily {
    int max_depth = 3;
    int max_branching = 3;
    std::string barrier = "double";    ///< none | lower | double
    bool with_v = false;               ///< random driving term (one-barrier families)
    bool random_terminal = true;       ///< occasionally stop T before N
    double max_system_rules = 0.0;     ///< redraw trees with more rules (0 = no limit)
};

struct VerifySpec {
    std::vector<std::string> suites;
    int trials = 200;
    std::uint64_t seed = 1;
    double max_rules = 1e7;
    double max_pairs = 1e6;
    double seconds = 600.0;
    std::optional<RandomFamily> family;
};

struct Scenario {
    std::string name;
    TreeSpec tree;
    TerminalSpec terminal;
    ValueSpec xi;
    GeneratorSpec generator;
    ValueSpec v_star;     ///< increments dV* of the driving term
    ValueSpec v_plus;     ///< increments d+V
    ValueSpec L;
    ValueSpec U;
    ValueSpec S;          ///< reference semimartingale for the shift preprocessing
    SolverSpec solver;
    VerifySpec verify;
};

/// Parse / emit the structured-text form (JSON). Errors are Error(validation).
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);
std::string emit_scenario(const Scenario& s);
bool same_scenario(const Scenario& a, const Scenario& b);

/// Scenario evaluated on its tree.
struct Problem {
    FilteredTree tree;
    NodeValues xi;
    Generator f;
    LatticeProcess V;
    LatticeProcess L;
    LatticeProcess U;
    std::optional<LatticeProcess> S;
    std::vector<double> floor;
    OracleBudget budget;
    ProblemData data() const { return ProblemData{xi, f, V, L, U}; }
};

FilteredTree build_tree(const Scenario& s);
Generator build_generator(const GeneratorSpec& g, const FilteredTree& tree);
/// Builds everything and pre-checks separation and terminal compatibility.
Problem materialize(const Scenario& s);

/// One random scenario of the family; the tree is emitted as an explicit node list.
Scenario random_scenario(const RandomFamily& family, std::mt19937_64& rng, const std::string& name = "random");

/// Worker count from RBSDE_THREADS, default the hardware concurrency.
unsigned thread_count();

}  // namespace rbsde
