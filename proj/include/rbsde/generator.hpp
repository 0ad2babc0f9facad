#pragma once

#include "rbsde/tree.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rbsde {

/// Coefficient f(t, y) of the equation, evaluated at a node (which fixes t and
/// the path) and a real y. Nonincreasing and continuous in y.
class Generator {
public:
    using Fn = std::function<double(NodeId, double)>;

    Generator();
    Generator(std::string label, Fn fn);

    double operator()(NodeId v, double y) const { return fn_(v, y); }
    const std::string& label() const noexcept { return label_; }

    /// Lipschitz constant in y, when known.
    std::optional<double> lipschitz;
    /// Per-node lower bound l(t) with f(t, y) >= l(t) for all y, when known.
    std::optional<std::vector<double>> lower_bound;
    /// f(v, y) = f(v, 0) - slope * y exactly (slope 0 means independent of y).
    std::optional<double> affine_slope;

    bool y_free() const noexcept { return affine_slope && *affine_slope == 0.0; }

private:
    std::string label_;
    Fn fn_;
};

// Builtin families. `a` holds a per-node intercept.
Generator zero_generator();
Generator constant_generator(std::vector<double> a);
/// f = a - b y, b >= 0.
Generator affine_generator(std::vector<double> a, double b);
/// f = a - b sign(y) |y|^p, b >= 0, p >= 1.
Generator power_generator(std::vector<double> a, double b, double p);
/// f = a + b (1 / (1 + exp(c y)) - 1/2), b, c >= 0. Bounded in [a - b/2, a + b/2].
Generator logistic_generator(std::vector<double> a, double b, double c);
/// f = a + interpolation of nonincreasing knots (y_i, f_i), flat outside.
Generator tabulated_generator(std::vector<double> a, std::vector<std::pair<double, double>> knots);

// Transforms.

/// f(v, y(v+)) with y frozen, independent of y afterwards.
Generator frozen_generator(const Generator& f, const LatticeProcess& y);
/// f(v, y + shift(v)).
Generator shifted_generator(const Generator& f, std::vector<double> shift);
/// -f(v, -y): the generator seen by -Y.
Generator mirrored_generator(const Generator& f);
/// f(v, y) on nodes with mask[v] != 0, zero elsewhere.
Generator masked_generator(const Generator& f, std::vector<std::uint8_t> mask);
/// f + g pointwise; used for the shifted Picard map.
Generator sum_generator(const Generator& f, const Generator& g);
/// max(f, floor(v)).
Generator floored_generator(const Generator& f, std::vector<double> floor);

/// c(v) * inf_x { f(v, x) + n |y - x| }. `weight` = c, defaults to 1.
/// Throws "Moreau scheme requires declared lower bound" without f.lower_bound.
Generator moreau_approx(const Generator& f, double n, std::optional<std::vector<double>> weight = std::nullopt);
/// Direct evaluation of the Moreau infimum at one point (the building block of moreau_approx).
double moreau_value(const Generator& f, NodeId v, double y, double n, double lower);

/// (n rho / (1 + n rho)) * max(min(f, n), -m).
Generator fnm_ladder(const Generator& f, double n, double m, std::vector<double> rho);

/// 64-point monotonicity probe per live node; throws Error(validation) on the
/// first increase or non-finite value.
void probe_check(const FilteredTree& tree, const Generator& f);

/// Probe points used by probe_check.
std::vector<double> probe_grid();

}  // namespace rbsde
