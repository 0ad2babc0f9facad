#pragma once

#include "rbsde/error.hpp"
#include "rbsde/verify.hpp"

#include <json.hpp>

#include <optional>
#include <string>

namespace rbsde {

using Report = nlohmann::ordered_json;

inline constexpr const char* version = "0.1.0";

/// Exit code for a run whose invariants or verification suites failed.
inline constexpr int exit_failed_check = 1;

struct SolveFlags {
    std::optional<std::string> barrier;   ///< overrides the scenario
    std::optional<std::string> scheme;
    std::optional<double> tol;
    std::string out;                      ///< artifact directory, empty = none
};

struct DynkinFlags {
    std::string mode = "dp";
    std::optional<double> epsilon;
    bool plain = false;                   ///< also evaluate the game over plain rules
    std::string out;
};

struct VerifyFlags {
    std::vector<std::string> suites;      ///< empty = scenario list, else every suite
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::string out;
};

struct HorizonFlags {
    int a_max = 0;                        ///< 0 = the tree horizon
    std::string out;
};

/// Each command returns its report; "ok" is the pass flag and "exit_code" the
/// process exit code. Errors propagate as rbsde::Error.
Report run_solve(const Scenario& s, const SolveFlags& flags);
Report run_dynkin(const Scenario& s, const DynkinFlags& flags);
Report run_verify(const Scenario& s, const VerifyFlags& flags);
Report run_horizon(const Scenario& s, const HorizonFlags& flags);

/// Machine-readable record of an error.
Report error_record(const std::string& command, const Error& e);
Report error_record(const std::string& command, const std::exception& e);

/// Writes report.json (or error.json) into dir, creating it.
void write_report(const std::string& dir, const std::string& file, const Report& r);

}  // namespace rbsde
