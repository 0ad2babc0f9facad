#include "rbsde/lattice_process.hpp"

#include "rbsde/error.hpp"

#include <algorithm>
#include <cmath>

namespace rbsde {


std::string to_string(Slot s) {
    std::string out = std::to_string(s.level);
    if (s.phase == Phase::plus) out += '+';
    return out;
}

Slot parse_slot(const std::string& text) {
    if (text.empty()) fail_validation("empty slot label");
    Slot s;
    std::string digits = text;
    if (digits.back() == '+') {
        s.phase = Phase::plus;
        digits.pop_back();
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        fail_validation("malformed slot label '" + text + "'");
    }
    s.level = std::stoi(digits);
    return s;
}

LatticeProcess LatticeProcess::from_instants(std::span<const double> per_node) {
    LatticeProcess x(per_node.size());
    for (std::size_t v = 0; v < per_node.size(); ++v) {
        x(static_cast<NodeId>(v)) = per_node[v];
        x.plus(static_cast<NodeId>(v)) = per_node[v];
    }
    return x;
}

std::vector<double> LatticeProcess::instants() const {
    std::vector<double> out(nodes());
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = values_[2 * v];
    return out;
}

LatticeProcess& LatticeProcess::operator+=(const LatticeProcess& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
}

LatticeProcess& LatticeProcess::operator-=(const LatticeProcess& o) {
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
}

LatticeProcess& LatticeProcess::operator*=(double c) {
    for (double& x : values_) x *= c;
    return *this;
}

double max_abs_diff(const LatticeProcess& a, const LatticeProcess& b) {
    double worst = 0.0;
    auto ra = a.raw();
    auto rb = b.raw();
    for (std::size_t i = 0; i < ra.size(); ++i) worst = std::max(worst, std::abs(ra[i] - rb[i]));
    return worst;
}

}  // namespace rbsde
