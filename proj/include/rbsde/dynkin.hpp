#pragma once

#include "rbsde/oracle.hpp"
#include "rbsde/rbsde_double.hpp"

#include <optional>
#include <string>

namespace rbsde {

enum class GameMode { dp, exact, both };
GameMode parse_game_mode(const std::string& name);
std::string to_string(GameMode m);

struct GameValue {
    std::optional<LatticeProcess> dp;      ///< saddle recursion, every slot
    std::optional<GameOracle> exact;       ///< enumeration over system-rule pairs
    double dp_exact_gap = 0.0;             ///< max |dp - supinf| over slots, when both exist
};

/// Game value with V = 0. DP: Y(t+) = min(U, max(L, step)), Y(t) = min(U, max(L, Y(t+))).
GameValue game_value(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& L,
                     const LatticeProcess& U, GameMode mode, const OracleBudget& budget = {});

/// Game value read at the stopping slots of alpha (NaN where alpha does not stop).
NodeValues game_value_at(const FilteredTree& tree, const LatticeProcess& values, const StoppingRule& alpha);

struct SaddleReport {
    bool ok = true;
    double supinf = 0.0;
    double infsup = 0.0;
    double order_gap = 0.0;   ///< max |supinf - infsup| over slots
    double value_gap = 0.0;   ///< max |supinf - Y| over slots
};
SaddleReport saddle_check(const FilteredTree& tree, const LatticeProcess& Y, const Generator& f,
                          const LatticeProcess& L, const LatticeProcess& U, const NodeValues& xi,
                          const OracleBudget& budget = {}, double tol = 1e-9);

/// tau_eps = first slot with Y <= L + eps, sigma_eps = first slot with Y >= U - eps
/// (both capped by T); the plus slot is used when attainment happens there.
struct EpsilonStrategies {
    StoppingRule rho;
    StoppingRule delta;
    double payoff = 0.0;   ///< E^f of the pair payoff from the root
    double value = 0.0;    ///< Y at the root
    double gap = 0.0;      ///< |payoff - value|
    double bound = 0.0;    ///< eps (N + 2)
    bool within_bound = true;
};
EpsilonStrategies epsilon_optimal(const FilteredTree& tree, const LatticeProcess& Y, const Generator& f,
                                  const LatticeProcess& L, const LatticeProcess& U, const NodeValues& xi,
                                  double eps);

/// ||Y1 - Y2||_1 <= E|xi1 - xi2| + 2||L1 - L2||_1 + 2||U1 - U2||_1
///   + sup over pairs of E sum_{before tau ^ sigma} h |f1 - f2|(r, E^{f1}_{r, tau ^ sigma}(Z)).
struct StabilityReport {
    bool ok = true;
    double lhs = 0.0;
    double rhs = 0.0;
    double xi_term = 0.0;
    double l_term = 0.0;
    double u_term = 0.0;
    double generator_term = 0.0;
    double pairs = 0.0;
};
StabilityReport stability_bound_check(const FilteredTree& tree, const ProblemData& a, const ProblemData& b,
                                      const OracleBudget& budget = {}, double slack = 1e-9);

}  // namespace rbsde
