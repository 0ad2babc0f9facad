#include "rbsde/generator.hpp"

#include "rbsde/error.hpp"
#include "rbsde/processes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rbsde {

namespace {

using Table = std::shared_ptr<const std::vector<double>>;

Table share(std::vector<double> v) { return std::make_shared<const std::vector<double>>(std::move(v)); }

double at(const Table& t, NodeId v) { return (*t)[static_cast<std::size_t>(v)]; }

double sign(double y) { return y > 0 ? 1.0 : (y < 0 ? -1.0 : 0.0); }

std::vector<double> shifted_bound(const std::vector<double>& a, double offset) {
    std::vector<double> out(a);
    for (double& x : out) x += offset;
    return out;
}

}  // namespace

Generator::Generator() : affine_slope(0.0), label_("zero"), fn_([](NodeId, double) { return 0.0; }) {
    lipschitz = 0.0;
}

Generator::Generator(std::string label, Fn fn) : label_(std::move(label)), fn_(std::move(fn)) {}

Generator zero_generator() { return Generator(); }

Generator constant_generator(std::vector<double> a) {
    auto tab = share(a);
    Generator g("constant", [tab](NodeId v, double) { return at(tab, v); });
    g.affine_slope = 0.0;
    g.lipschitz = 0.0;
    g.lower_bound = std::move(a);
    return g;
}

Generator affine_generator(std::vector<double> a, double b) {
    if (!(b >= 0.0)) fail_validation("affine generator needs b >= 0");
    auto tab = share(a);
    Generator g("affine", [tab, b](NodeId v, double y) { return at(tab, v) - b * y; });
    g.affine_slope = b;
    g.lipschitz = b;
    if (b == 0.0) g.lower_bound = std::move(a);
    return g;
}

Generator power_generator(std::vector<double> a, double b, double p) {
    if (!(b >= 0.0)) fail_validation("power generator needs b >= 0");
    if (!(p >= 1.0)) fail_validation("power generator needs p >= 1");
    auto tab = share(a);
    Generator g("power", [tab, b, p](NodeId v, double y) {
        return at(tab, v) - b * sign(y) * std::pow(std::abs(y), p);
    });
    if (p == 1.0 || b == 0.0) {
        g.affine_slope = b;
        g.lipschitz = b;
    }
    if (b == 0.0) g.lower_bound = std::move(a);
    return g;
}

Generator logistic_generator(std::vector<double> a, double b, double c) {
    if (!(b >= 0.0) || !(c >= 0.0)) fail_validation("logistic generator needs b, c >= 0");
    auto tab = share(a);
    Generator g("logistic", [tab, b, c](NodeId v, double y) {
        // 1/(1+e^{cy}) - 1/2 = -tanh(cy/2)/2, which stays accurate for large |y|
        return at(tab, v) - 0.5 * b * std::tanh(0.5 * c * y);
    });
    g.lipschitz = 0.25 * b * c;
    g.lower_bound = shifted_bound(a, -0.5 * b);
    return g;
}

Generator tabulated_generator(std::vector<double> a, std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) fail_validation("tabulated generator needs at least one knot");
    std::sort(knots.begin(), knots.end());
    double lip = 0.0;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (knots[i].first == knots[i - 1].first) fail_validation("tabulated generator has repeated knot");
        if (knots[i].second > knots[i - 1].second) {
            fail_validation("tabulated generator must be nonincreasing in y (knot " + std::to_string(i) + ")");
        }
        lip = std::max(lip, (knots[i - 1].second - knots[i].second) / (knots[i].first - knots[i - 1].first));
    }
    auto tab = share(a);
    auto ks = std::make_shared<const std::vector<std::pair<double, double>>>(knots);
    Generator g("tabulated", [tab, ks](NodeId v, double y) {
        const auto& k = *ks;
        double val;
        if (y <= k.front().first) {
            val = k.front().second;
        } else if (y >= k.back().first) {
            val = k.back().second;
        } else {
            auto it = std::upper_bound(k.begin(), k.end(), y,
                                       [](double x, const std::pair<double, double>& kn) { return x < kn.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (y - lo.first) / (hi.first - lo.first);
            val = lo.second + w * (hi.second - lo.second);
        }
        return at(tab, v) + val;
    });
    g.lipschitz = lip;
    g.lower_bound = shifted_bound(a, knots.back().second);
    if (knots.size() == 1) g.affine_slope = 0.0;
    return g;
}

Generator frozen_generator(const Generator& f, const LatticeProcess& y) {
    std::vector<double> vals(y.nodes());
    for (std::size_t v = 0; v < vals.size(); ++v) vals[v] = f(static_cast<NodeId>(v), y.plus(static_cast<NodeId>(v)));
    return constant_generator(std::move(vals));
}

Generator shifted_generator(const Generator& f, std::vector<double> shift) {
    auto tab = share(std::move(shift));
    Generator g(f.label() + "-shifted", [f, tab](NodeId v, double y) { return f(v, y + at(tab, v)); });
    g.lipschitz = f.lipschitz;
    g.lower_bound = f.lower_bound;
    if (f.y_free()) g.affine_slope = 0.0;
    return g;
}

Generator mirrored_generator(const Generator& f) {
    Generator g(f.label() + "-mirrored", [f](NodeId v, double y) { return -f(v, -y); });
    g.lipschitz = f.lipschitz;
    g.affine_slope = f.affine_slope;
    return g;
}

Generator masked_generator(const Generator& f, std::vector<std::uint8_t> mask) {
    auto m = std::make_shared<const std::vector<std::uint8_t>>(std::move(mask));
    Generator g(f.label() + "-masked", [f, m](NodeId v, double y) {
        return (*m)[static_cast<std::size_t>(v)] ? f(v, y) : 0.0;
    });
    g.lipschitz = f.lipschitz;
    g.affine_slope = f.y_free() ? std::optional<double>(0.0) : std::nullopt;
    return g;
}

Generator sum_generator(const Generator& f, const Generator& h) {
    Generator g(f.label() + "+" + h.label(), [f, h](NodeId v, double y) { return f(v, y) + h(v, y); });
    if (f.lipschitz && h.lipschitz) g.lipschitz = *f.lipschitz + *h.lipschitz;
    if (f.affine_slope && h.affine_slope) g.affine_slope = *f.affine_slope + *h.affine_slope;
    if (f.lower_bound && h.lower_bound) {
        std::vector<double> lb = *f.lower_bound;
        for (std::size_t i = 0; i < lb.size(); ++i) lb[i] += (*h.lower_bound)[i];
        g.lower_bound = std::move(lb);
    }
    return g;
}

Generator floored_generator(const Generator& f, std::vector<double> floor) {
    auto tab = share(floor);
    Generator g(f.label() + "-floored", [f, tab](NodeId v, double y) { return std::max(f(v, y), at(tab, v)); });
    g.lipschitz = f.lipschitz;
    if (f.lower_bound) {
        for (std::size_t i = 0; i < floor.size(); ++i) floor[i] = std::max(floor[i], (*f.lower_bound)[i]);
    }
    g.lower_bound = std::move(floor);
    if (f.y_free()) g.affine_slope = 0.0;
    return g;
}

double moreau_value(const Generator& f, NodeId v, double y, double n, double lower) {
    // For nonincreasing f the infimum over x < y is never below f(y), and
    // beyond y + (f(y) - lower) / n the penalty alone exceeds f(y).
    const double fy = f(v, y);
    const double width = (fy - lower) / n;
    if (!(width > 0.0)) return fy;
    auto g = [&](double x) { return f(v, x) + n * (x - y); };
    constexpr int grid = 64;
    double best = fy;
    int best_k = 0;
    for (int k = 1; k <= grid; ++k) {
        const double x = y + width * k / grid;
        const double gx = g(x);
        if (gx < best) {
            best = gx;
            best_k = k;
        }
    }
    double a = y + width * std::max(best_k - 1, 0) / grid;
    double b = y + width * std::min(best_k + 1, grid) / grid;
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - invphi * (b - a);
    double d = a + invphi * (b - a);
    double gc = g(c);
    double gd = g(d);
    for (int it = 0; it < 200 && (b - a) > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
        if (gc < gd) {
            b = d;
            d = c;
            gd = gc;
            c = b - invphi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + invphi * (b - a);
            gd = g(d);
        }
    }
    return std::min({best, gc, gd});
}

Generator moreau_approx(const Generator& f, double n, std::optional<std::vector<double>> weight) {
    if (!f.lower_bound) fail_validation("Moreau scheme requires declared lower bound");
    if (!(n > 0.0)) fail_validation("Moreau index n must be positive");
    auto lower = share(*f.lower_bound);
    Table w = weight ? share(std::move(*weight)) : nullptr;
    Generator g("moreau(" + f.label() + "," + format_double(n) + ")", [f, n, lower, w](NodeId v, double y) {
        const double c = w ? at(w, v) : 1.0;
        return c * moreau_value(f, v, y, n, at(lower, v));
    });
    g.lipschitz = n;
    std::vector<double> lb = *f.lower_bound;
    if (w) {
        for (std::size_t i = 0; i < lb.size(); ++i) lb[i] = std::min(0.0, (*w)[i] * lb[i]);
    }
    g.lower_bound = std::move(lb);
    if (f.y_free()) g.affine_slope = 0.0;
    return g;
}

Generator fnm_ladder(const Generator& f, double n, double m, std::vector<double> rho) {
    std::vector<double> w(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (!(rho[i] > 0.0)) fail_validation("fnm weight rho must be positive");
        w[i] = n * rho[i] / (1.0 + n * rho[i]);
    }
    auto tab = share(w);
    Generator g("fnm(" + f.label() + "," + format_double(n) + "," + format_double(m) + ")",
                [f, n, m, tab](NodeId v, double y) { return at(tab, v) * std::max(std::min(f(v, y), n), -m); });
    if (f.lipschitz) g.lipschitz = f.lipschitz;
    for (double& x : w) x *= -m;
    g.lower_bound = std::move(w);
    if (f.y_free()) g.affine_slope = 0.0;
    return g;
}

std::vector<double> probe_grid() {
    std::vector<double> pts;
    pts.reserve(64);
    for (int k = 0; k < 64; ++k) pts.push_back(std::sinh(-6.0 + 12.0 * k / 63.0) * 0.25);
    return pts;
}

void probe_check(const FilteredTree& tree, const Generator& f) {
    const auto pts = probe_grid();
    for (NodeId v : tree.order()) {
        if (tree.stopped(v)) continue;
        double prev = f(v, pts.front());
        for (std::size_t k = 0; k < pts.size(); ++k) {
            const double cur = f(v, pts[k]);
            if (!std::isfinite(cur)) {
                fail_validation("generator '" + f.label() + "' is not finite at node " + std::to_string(v) +
                                ", y = " + format_double(pts[k]));
            }
            if (k > 0 && cur > prev) {
                fail_validation("generator '" + f.label() + "' is not nonincreasing in y at node " +
                                std::to_string(v) + ": f(" + format_double(pts[k - 1]) + ") = " + format_double(prev) +
                                " < f(" + format_double(pts[k]) + ") = " + format_double(cur));
            }
            prev = cur;
        }
    }
}

}  // namespace rbsde
