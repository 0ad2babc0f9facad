#pragma once

#include "rbsde/fexp.hpp"
#include "rbsde/oracle.hpp"
#include "rbsde/processes.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rbsde {

enum class Scheme { direct, linear, picard, moreau, monotone, decoupled, fnm };

std::string to_string(Scheme s);
Scheme parse_scheme(const std::string& name);

struct IterationRecord {
    std::string stage;
    int index = 0;
    double change = 0.0;  ///< class-(D) norm of the step
};

/// (Y, M, K) for one barrier. K is the net reflection: increasing for a lower
/// barrier, decreasing for an upper one.
struct ReflectedSolution {
    LatticeProcess Y;
    LatticeProcess M;
    LatticeProcess K;
    Scheme scheme = Scheme::direct;
    int iterations = 0;
    std::vector<IterationRecord> log;
    /// Plain Picard steps where evens failed to increase or odds failed to decrease.
    int chain_breaks = 0;
};

struct PicardOptions {
    double tol = 1e-10;
    int max_iter = 10000;
};

struct MonotoneOptions {
    std::vector<double> ladder{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};          ///< truncation levels n
    std::vector<double> moreau_ladder{1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024};   ///< inf-convolution indices
    double tol = 1e-10;
    std::optional<std::vector<double>> floor;   ///< g per node, defaults to exp(-t)
    bool weighted = false;                      ///< c_n = n rho / (1 + n rho), rho = exp(-t)
    PicardOptions picard{};
};

/// Clamped backward Euler sweep, Y(t+) = max(L(t+), step), Y(t) = max(L(t), Y(t+) + d+V).
ReflectedSolution solve_lower_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                     const LatticeProcess& V, const LatticeProcess& L);

/// f independent of y: shift by the accumulated drift, take the Snell envelope, shift back.
ReflectedSolution solve_linear(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                               const LatticeProcess& V, const LatticeProcess& L);

/// Y^0 = BSDE solution, Y^n = linear solution with f(., Y^{n-1}). Needs f.lipschitz.
/// When lambda h >= 1 the plain map stops contracting on a tree and the
/// isotone variant with generator -lambda y + f(., Y^{n-1}) + lambda Y^{n-1} is used.
ReflectedSolution solve_lipschitz_picard(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                         const LatticeProcess& V, const LatticeProcess& L,
                                         const PicardOptions& opts = {});

/// Picard solutions for the inf-convolutions f_n along `ladder` (nondecreasing in n).
ReflectedSolution solve_moreau(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                               const LatticeProcess& V, const LatticeProcess& L, const MonotoneOptions& opts = {});

/// Outer truncation f v (-n g) (nonincreasing in n), inner Moreau ladder and Picard.
ReflectedSolution solve_monotone(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                 const LatticeProcess& V, const LatticeProcess& L, const MonotoneOptions& opts = {});

struct SolverOptions {
    PicardOptions picard{};
    MonotoneOptions monotone{};
};

ReflectedSolution solve_lower(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                              const LatticeProcess& V, const LatticeProcess& L, Scheme scheme,
                              const SolverOptions& opts = {});

/// Upper barrier: solve the lower problem for (-xi, -f(., -y), -V, -U) and negate.
ReflectedSolution solve_upper(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                              const LatticeProcess& V, const LatticeProcess& U, Scheme scheme,
                              const SolverOptions& opts = {});
/// Clamped sweep for the upper barrier, min instead of max.
ReflectedSolution solve_upper_direct(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                     const LatticeProcess& V, const LatticeProcess& U);

/// Minimality residual E sum |(Y(t-1)+ - L(t-1)+) dK*_t| + |(Y(t) - L(t)) d+K_t|.
double lower_minimality(const FilteredTree& tree, const LatticeProcess& Y, const LatticeProcess& L,
                        const LatticeProcess& K);

struct LowerChecks {
    bool ok = true;
    double barrier_gap = 0.0;      ///< max (L - Y)^+
    double dynamics = 0.0;
    double minimality = 0.0;
    double k_decrease = 0.0;       ///< most negative K increment
    double k_predictability = 0.0;
    double generator_cost = 0.0;
    std::string failure;
};
LowerChecks check_lower_solution(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                 const LatticeProcess& V, const LatticeProcess& L, const ReflectedSolution& sol);

/// Gaps between sol.Y and the two representations, over every start slot:
/// sup over system rules of E^{f,V} of the stopped payoff, and the same with
/// the generator frozen along sol.Y.
struct RepresentationReport {
    double nonlinear_gap = 0.0;
    double frozen_gap = 0.0;
    double rules = 0.0;
};
RepresentationReport representation_check(const FilteredTree& tree, const ReflectedSolution& sol,
                                          const Generator& f, const NodeValues& xi, const LatticeProcess& L,
                                          const LatticeProcess& V, const OracleBudget& budget = {});

/// Martingale identity M_t = E(xi + sum h f(r, Y_r) + V_T + K_T | F_t) - Y_0 and the
/// terms of the a priori estimate, for a certificate X >= L.
struct AprioriReport {
    double identity_residual = 0.0;
    double stated_identity_residual = 0.0;  ///< same identity without xi
    double generator_cost = 0.0;            ///< E sum h |f(r, Y_r)|
    double expected_k = 0.0;                ///< E K_T
    double lhs = 0.0;
    double rhs_aggregate = 0.0;             ///< bracket of the estimate, constant not applied
    double norm_y = 0.0;
    double norm_x = 0.0;
    double free_cost = 0.0;                 ///< E sum h |f(r, 0)|
    double v_variation = 0.0;
    double x_negative_cost = 0.0;           ///< E sum h f^-(r, X_r)
    double c_variation = 0.0;
};
AprioriReport apriori_diagnostics(const FilteredTree& tree, const ReflectedSolution& sol, const Generator& f,
                                  const LatticeProcess& V, const NodeValues& xi, const LatticeProcess& L,
                                  const LatticeProcess& X);

/// Remark shift: solve with f(r, y + S_r) and data shifted by a reference
/// semimartingale S, then shift back.
ReflectedSolution solve_lower_shifted(const FilteredTree& tree, const NodeValues& xi, const Generator& f,
                                      const LatticeProcess& V, const LatticeProcess& L, const LatticeProcess& S,
                                      Scheme scheme, const SolverOptions& opts = {});

}  // namespace rbsde
