#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rbsde {

using NodeId = std::int32_t;
inline constexpr NodeId no_node = -1;

/// Phase of a slot on the doubled time grid: the instant t or its right limit t+.
enum class Phase : std::uint8_t { instant = 0, plus = 1 };

/// Position on the doubled grid 0 < 0+ < 1 < 1+ < ... < N.
struct Slot {
    int level = 0;
    Phase phase = Phase::instant;

    auto operator<=>(const Slot&) const = default;
};

/// "3" for the instant, "3+" for the right limit.
std::string to_string(Slot s);
Slot parse_slot(const std::string& text);

/// Real-valued process indexed by (node, phase).
///
/// Value at (v, instant) is X_t on the atom v of F_t, value at (v, plus) is the
/// right limit X_{t+}. Both are F_t-measurable since they depend only on v.
class LatticeProcess {
public:
    LatticeProcess() = default;
    explicit LatticeProcess(std::size_t nodes, double fill = 0.0)
        : values_(2 * nodes, fill) {}

    /// Copies each instant value to the plus slot of the same node.
    static LatticeProcess from_instants(std::span<const double> per_node);

    std::size_t nodes() const noexcept { return values_.size() / 2; }

    double operator()(NodeId v, Phase ph = Phase::instant) const {
        return values_[2 * static_cast<std::size_t>(v) + static_cast<std::size_t>(ph)];
    }
    double& operator()(NodeId v, Phase ph = Phase::instant) {
        return values_[2 * static_cast<std::size_t>(v) + static_cast<std::size_t>(ph)];
    }
    double plus(NodeId v) const { return (*this)(v, Phase::plus); }
    double& plus(NodeId v) { return (*this)(v, Phase::plus); }

    std::span<const double> raw() const noexcept { return values_; }
    std::span<double> raw() noexcept { return values_; }

    /// Instant values as a per-node vector.
    std::vector<double> instants() const;

    LatticeProcess& operator+=(const LatticeProcess& o);
    LatticeProcess& operator-=(const LatticeProcess& o);
    LatticeProcess& operator*=(double c);

    friend LatticeProcess operator+(LatticeProcess a, const LatticeProcess& b) { return a += b; }
    friend LatticeProcess operator-(LatticeProcess a, const LatticeProcess& b) { return a -= b; }
    friend LatticeProcess operator*(double c, LatticeProcess a) { return a *= c; }
    friend LatticeProcess operator-(LatticeProcess a) { return a *= -1.0; }

    friend bool operator==(const LatticeProcess&, const LatticeProcess&) = default;

private:
    std::vector<double> values_;
};

/// Largest absolute slotwise difference.
double max_abs_diff(const LatticeProcess& a, const LatticeProcess& b);

/// Per-node scalar data (terminal values, barrier tables read at one phase, ...).
using NodeValues = std::vector<double>;

}  // namespace rbsde
