#pragma once

#include "rbsde/rbsde_lower.hpp"

#include <string>
#include <vector>

namespace rbsde {

/// L <= U on every live slot and L_T <= xi <= U_T at T. On a finite tree any
/// adapted process is a special semimartingale of integrable variation, so this
/// is all that remains of the Mokobodzki condition.
struct SeparationReport {
    bool ok = true;
    double worst_gap = 0.0;       ///< max (L - U)^+ over live slots, or terminal violation
    NodeId node = no_node;
    Slot slot{};
    bool terminal = false;        ///< the worst violation is xi outside [L_T, U_T]
    /// L(t+) <= U(t) and L(t) <= U(t+): needed for the game over stopping
    /// systems to coincide with the slotwise clamp.
    bool cross_ok = true;
    double cross_gap = 0.0;
    std::string message;
};
SeparationReport check_separation(const FilteredTree& tree, const LatticeProcess& L, const LatticeProcess& U,
                                  const NodeValues& xi);
/// Throws Error(validation) with the report's message when separation fails.
void require_separation(const FilteredTree& tree, const LatticeProcess& L, const LatticeProcess& U,
                        const NodeValues& xi);

struct DoubleBarrierSolution {
    LatticeProcess Y;
    LatticeProcess M;
    LatticeProcess R_plus;    ///< increasing, acts at L
    LatticeProcess R_minus;   ///< increasing, acts at U
    ReflectedSolution first;  ///< (Y1, M1, K1), empty for the direct sweep
    ReflectedSolution second; ///< (Y2, M2, K2)
    Scheme scheme = Scheme::direct;
    int iterations = 0;
    std::vector<IterationRecord> log;
};

struct DecoupledOptions {
    double tol = 1e-10;
    int max_iter = 10000;
    Scheme inner = Scheme::direct;   ///< one-barrier scheme for the Y1 problems
    SolverOptions inner_opts{};
};

/// Y1^n = lower(xi, f(., y - Y2^{n-1}) + dV, L + Y2^{n-1}),
/// Y2^n = lower(0, 0, Y1^{n-1} - U), from Y1^0 = BSDE solution and Y2^0 = 0.
/// Both sequences must be nondecreasing. Y = Y1 - Y2, M = M1 - M2, R = K1 - K2.
DoubleBarrierSolution solve_decoupled(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                      const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                      const DecoupledOptions& opts = {});

/// Single sweep Y(t+) = min(U, max(L, step)), Y(t) = min(U, max(L, Y(t+) + d+V)).
DoubleBarrierSolution solve_double_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                          const LatticeProcess& V, const LatticeProcess& L,
                                          const LatticeProcess& U);

/// Decoupled solves with f_{n,m} for every (n, m) in ladder x ladder; returns the
/// last one and logs the class-(D) gap between consecutive rungs.
struct FnmOptions {
    std::vector<double> ladder{1, 2, 4, 8};
    double rho = 1e12;
    DecoupledOptions decoupled{};
};
DoubleBarrierSolution solve_fnm(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                const FnmOptions& opts = {});

/// Split a net reflection into its increasing and decreasing parts.
void assemble_reflection(const FilteredTree& tree, const LatticeProcess& R, DoubleBarrierSolution& sol);

struct DoubleChecks {
    bool ok = true;
    double barrier_gap = 0.0;   ///< max of (L - Y)^+ and (Y - U)^+
    double dynamics = 0.0;
    double minimality_lower = 0.0;
    double minimality_upper = 0.0;
    bool singular = true;       ///< R+ and R- never move on the same slot
    double r_decrease = 0.0;    ///< most negative increment of R+ or R-
    double r_predictability = 0.0;
    double generator_cost = 0.0;
    std::string failure;
};
DoubleChecks check_double_solution(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                   const DoubleBarrierSolution& sol);

/// Lower-only solution >= Y >= upper-only solution; returns the worst violation.
double sandwich_gap(const FilteredTree& tree, const NodeValues& xi, const Generator& f, const LatticeProcess& V,
                    const LatticeProcess& L, const LatticeProcess& U, const LatticeProcess& Y);

DoubleBarrierSolution solve_double(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                   const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& U,
                                   Scheme scheme, const DecoupledOptions& opts = {});

}  // namespace rbsde
