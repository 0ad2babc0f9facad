#pragma once

#include "rbsde/tree.hpp"

#include <iosfwd>
#include <utility>

namespace rbsde {

// Finite-variation processes are stored as plain lattice processes K with
// K(root) = 0. Their increments on the grid are
//   dK*(v)  = K(v) - K(parent+)   jump of the cadlag part at t (0 at the root)
//   d+K(v)  = K(v+) - K(v)        right jump at t
// Everything is frozen on stopped nodes, so both vanish past T.

double jump_star(const FilteredTree& tree, const LatticeProcess& k, NodeId v);
double jump_plus(const FilteredTree& tree, const LatticeProcess& k, NodeId v);

/// Rebuild K from per-node increments (entries on the root and past T are ignored).
LatticeProcess from_increments(const FilteredTree& tree, std::span<const double> star,
                               std::span<const double> plus);

/// Copy values down from T so that X is constant past the terminal time.
void freeze_after_terminal(const FilteredTree& tree, LatticeProcess& x);

/// Signwise split K = K+ - K-; at most one part moves per increment.
std::pair<LatticeProcess, LatticeProcess> jordan(const FilteredTree& tree, const LatticeProcess& k);

/// Most negative increment (0 when K is increasing).
double worst_decrease(const FilteredTree& tree, const LatticeProcess& k);
/// Largest spread of dK* across siblings (0 when K is predictable).
double predictability_gap(const FilteredTree& tree, const LatticeProcess& k);
/// E|K|_T.
double expected_variation(const FilteredTree& tree, const LatticeProcess& k);

struct Violation {
    bool ok = true;
    double worst = 0.0;
    NodeId node = no_node;
    Slot slot{};
};

/// X(t) >= X(t+) >= E[X_{t+1} | F_t] at every live node.
Violation check_supermartingale(const FilteredTree& tree, const LatticeProcess& x, double tol = 1e-10);

/// Worst of |E[dM | F_t]| and |d+M| (0 for a grid martingale).
double martingale_gap(const FilteredTree& tree, const LatticeProcess& m);

/// X = X_0 + C + H with H a right-continuous martingale and C predictable.
struct DoobDecomposition {
    double x0 = 0.0;
    LatticeProcess martingale;
    LatticeProcess drift;
    double residual = 0.0;
};
DoobDecomposition doob_decompose(const FilteredTree& tree, const LatticeProcess& x);

/// X = X_0 + M - K for a supermartingale, K increasing and predictable.
struct MertensDecomposition {
    double x0 = 0.0;
    LatticeProcess martingale;
    LatticeProcess increasing;
    double residual = 0.0;
};
/// Throws Error(validation) carrying the worst violation if X is not a supermartingale.
MertensDecomposition mertens_decompose(const FilteredTree& tree, const LatticeProcess& x);

/// (left limit, right limit): left(t) = X((t-1)+), right(t) = X(t+).
std::pair<LatticeProcess, LatticeProcess> left_right_limits(const FilteredTree& tree,
                                                            const LatticeProcess& x);

/// Rows "node_id,slot,value" in (level, id) order; no plus row on stopped nodes.
void write_csv(std::ostream& out, const FilteredTree& tree, const LatticeProcess& x);
/// Inverse of write_csv. A missing plus row copies the instant value.
LatticeProcess read_csv(std::istream& in, const FilteredTree& tree);

/// Shortest decimal that parses back to the same double.
std::string format_double(double x);
double parse_double(const std::string& text);

}  // namespace rbsde
