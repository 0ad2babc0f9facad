#pragma once

#include "rbsde/scenario.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace rbsde {

struct SuiteResult {
    std::string name;
    bool passed = true;
    bool skipped = false;        ///< a budget was exceeded; never reported as a pass
    std::string skip_reason;
    int trials = 0;
    double worst = 0.0;          ///< worst value of the suite's main quantity
    double threshold = 0.0;      ///< pass iff worst <= threshold
    std::string witness;         ///< first failing trial, with its seed
    std::map<std::string, double> metrics;
    double minimality_worst = 0.0;   ///< worst flat-off residual over every solve
    bool singular = true;            ///< R+ / R- mutual singularity over every solve
    std::string minimality_witness;
};

struct VerifyConfig {
    int trials = 200;
    std::uint64_t seed = 1;
    OracleBudget budget{};
    std::optional<RandomFamily> family;   ///< overrides the suite's default family
    unsigned threads = 1;
    /// Test hook: applied to the solution of the upper problem of each comparison pair.
    std::function<void(const FilteredTree&, LatticeProcess&)> tamper;
};

/// comparison, representation, minimality, game-value, scheme-agreement, stability,
/// monotone-stability, decomposition, fexp-properties, lemma-bound.
std::vector<std::string> suite_names();

SuiteResult run_suite(const std::string& name, const VerifyConfig& cfg);

/// Seed of trial k under a base seed.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Calls fn(k) for k in [0, n) on `threads` workers; results are collected by index.
void parallel_trials(int n, unsigned threads, const std::function<void(int)>& fn);

/// Solver choice used for one-barrier random trials: linear for y-free f,
/// Picard when a Lipschitz constant is declared, the clamped sweep otherwise.
Scheme default_lower_scheme(const Generator& f);

struct HorizonRow {
    int a = 0;
    double y0 = 0.0;
    double diff = 0.0;    ///< |Y^a_0 - Y^{a+1}_0|, 0 on the last row
    double ratio = 0.0;   ///< diff_a / diff_{a-1}
};
struct HorizonStudy {
    std::vector<HorizonRow> rows;
    bool asserted = false;     ///< affine f = -lambda y with constant data
    double lambda = 0.0;
    double bound = 0.0;        ///< 1 / (1 + lambda h) + 1e-6
    double worst_ratio = 0.0;
    bool ok = true;
    std::string note;
};
/// Solves the truncations T ^ a for a = 1..a_max with the scenario's barrier configuration.
HorizonStudy horizon_study(const Problem& p, const std::string& barrier, int a_max);

}  // namespace rbsde
