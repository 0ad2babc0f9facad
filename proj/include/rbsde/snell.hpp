#pragma once

#include "rbsde/oracle.hpp"
#include "rbsde/processes.hpp"
#include "rbsde/tree.hpp"

#include <vector>

namespace rbsde {

struct SnellResult {
    LatticeProcess Y;
    MertensDecomposition parts;
    StoppingRule plain_rule;   ///< first instant where Y = payoff
    StoppingRule system_rule;  ///< first slot where Y = payoff
    double flat_off = 0.0;     ///< E sum |(Y - payoff) dK| over both channels
};

/// Y(T) = terminal, Y(t+) = max(payoff(t+), E[Y_{t+1} | F_t]), Y(t) = max(payoff(t), Y(t+)).
SnellResult snell_envelope(const FilteredTree& tree, const LatticeProcess& payoff, const NodeValues& terminal);

/// E sum |(Y(t-1)+ - payoff(t-1)+) dK*_t| + |(Y(t) - payoff(t)) d+K_t|.
double flat_off_residual(const FilteredTree& tree, const LatticeProcess& Y, const LatticeProcess& payoff,
                         const LatticeProcess& K);

/// Checks Y = sup over tau in [., sigma] of E(payoff_tau 1_{tau<sigma} + Y_sigma 1_{tau=sigma})
/// by enumeration, at every slot before sigma. Returns the worst gap.
struct LocalizedReport {
    bool ok = true;
    double worst_gap = 0.0;
};
LocalizedReport localized_representation_check(const FilteredTree& tree, const LatticeProcess& payoff,
                                               const SnellResult& snell, const StoppingRule& sigma,
                                               const OracleBudget& budget = {}, double tol = 1e-10);

/// Y <= candidate everywhere for every candidate. Candidates that are not
/// supermartingales or do not dominate the payoff are rejected with Error(validation).
bool smallest_majorant_check(const FilteredTree& tree, const LatticeProcess& payoff, const NodeValues& terminal,
                             const LatticeProcess& Y, const std::vector<LatticeProcess>& candidates,
                             double tol = 1e-10);

}  // namespace rbsde
