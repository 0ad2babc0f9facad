#pragma once

#include "rbsde/fexp.hpp"
#include "rbsde/generator.hpp"
#include "rbsde/tree.hpp"

#include <cstdint>

namespace rbsde {

/// Limits enforced before any brute-force work starts.
struct OracleBudget {
    double max_rules = 1e7;
    double max_pairs = 1e6;
    double seconds = 600.0;
};

/// sup over rules of E^{f,V}(payoff at the rule), from every slot.
struct StoppingOracle {
    LatticeProcess values;     ///< best value starting from each slot
    double value = 0.0;        ///< values at the root instant
    StoppingRule argmax;       ///< first maximiser in canonical order
    double rules = 0.0;        ///< number of rules from the root
};

/// Each rule's value is computed literally, reusing subtree evaluations: the
/// list of values of every subtree rule is built once per node. Stopping at
/// t+ collects payoff(t+) plus the right jump of V.
StoppingOracle oracle_optimal_stopping(const FilteredTree& tree, const LatticeProcess& payoff,
                                       const NodeValues& terminal, const Generator& f, RuleKind kind,
                                       const OracleBudget& budget = {});
StoppingOracle oracle_optimal_stopping(const FilteredTree& tree, const LatticeProcess& payoff,
                                       const NodeValues& terminal, const Generator& f, const LatticeProcess& V,
                                       RuleKind kind, const OracleBudget& budget = {});

/// Value process of the pair (rho, delta): E^f_{., tau ^ sigma}(Z) with
/// Z = L^u_rho on {tau <= sigma < T}, U^l_delta on {sigma < tau}, xi on {tau = sigma = T}.
/// Times are compared by level; at equal times the maximiser's payoff is paid.
LatticeProcess pair_payoff_process(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& L, const LatticeProcess& U, const StoppingRule& rho,
                                   const StoppingRule& delta);
double pair_payoff(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& L,
                   const LatticeProcess& U, const StoppingRule& rho, const StoppingRule& delta);

struct GameOracle {
    double supinf = 0.0;
    double infsup = 0.0;
    StoppingRule max_rule;      ///< maximiser attaining supinf
    StoppingRule min_rule;      ///< minimiser attaining infsup
    LatticeProcess supinf_values;  ///< from every slot
    LatticeProcess infsup_values;
    double max_rules = 0.0;
    double min_rules = 0.0;
    bool literal_pairs = false;  ///< true when every pair was evaluated
};

/// Sup-inf and inf-sup over stopping-rule pairs. Every rule of the outer
/// player is enumerated and evaluated against the exact best response of the
/// inner player; when the pair count fits budget.max_pairs the full pair
/// matrix is evaluated as well and its values are reported.
GameOracle oracle_game(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                       const LatticeProcess& L, const LatticeProcess& U, RuleKind max_kind = RuleKind::system,
                       RuleKind min_kind = RuleKind::system, const OracleBudget& budget = {});

/// Perturb-and-envelope falsification of the smallest-majorant property:
/// builds `candidates` random supermartingales dominating the payoff and
/// reports whether any of them dips below the Snell envelope.
struct MajorantReport {
    bool ok = true;
    int candidates = 0;
    double worst = 0.0;   ///< most negative candidate - envelope
};
MajorantReport oracle_snell_smallest(const FilteredTree& tree, const LatticeProcess& payoff,
                                     const NodeValues& terminal, int candidates, std::uint64_t seed);

}  // namespace rbsde
