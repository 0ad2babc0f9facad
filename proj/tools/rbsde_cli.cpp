#include "rbsde/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

int finish(const rbsde::Report& r) {
    std::cout << r.dump(2) << '\n';
    return r.value("exit_code", 0);
}

int fail(const std::string& out, const rbsde::Report& err) {
    std::cerr << err.dump() << '\n';
    if (!out.empty()) {
        try {
            rbsde::write_report(out, "error.json", err);
        } catch (const std::exception&) {
        }
    }
    return err.value("exit_code", 2);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reflected BSDE solver on finite event trees"};
    app.require_subcommand(1);
    std::string scenario_path;

    auto* solve = app.add_subcommand("solve", "solve one scenario");
    rbsde::SolveFlags sf;
    solve->add_option("--scenario", scenario_path, "scenario file")->required();
    solve->add_option("--barrier", sf.barrier, "none | lower | upper | double");
    solve->add_option("--scheme", sf.scheme, "direct | linear | picard | moreau | monotone | decoupled | fnm");
    solve->add_option("--tol", sf.tol, "fixed-point tolerance");
    solve->add_option("--out", sf.out, "artifact directory");

    auto* dynkin = app.add_subcommand("dynkin", "game value over stopping systems");
    rbsde::DynkinFlags df;
    dynkin->add_option("--scenario", scenario_path, "scenario file")->required();
    dynkin->add_option("--mode", df.mode, "dp | exact | both");
    dynkin->add_option("--epsilon", df.epsilon, "epsilon-optimal strategies");
    dynkin->add_flag("--plain", df.plain, "also play over plain stopping times");
    dynkin->add_option("--out", df.out, "artifact directory");

    auto* verify = app.add_subcommand("verify", "randomised oracle comparisons");
    rbsde::VerifyFlags vf;
    verify->add_option("--scenario", scenario_path, "scenario with a verify section");
    verify->add_option("--suites", vf.suites, "suite names")->delimiter(',');
    verify->add_option("--trials", vf.trials, "trials per suite");
    verify->add_option("--seed", vf.seed, "base seed");
    verify->add_option("--out", vf.out, "report directory");

    auto* horizon = app.add_subcommand("horizon-study", "truncated horizons a = 1..a_max");
    rbsde::HorizonFlags hf;
    horizon->add_option("--scenario", scenario_path, "scenario file")->required();
    horizon->add_option("--a-max", hf.a_max, "largest truncation");
    horizon->add_option("--out", hf.out, "artifact directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    const std::string out = solve->parsed() ? sf.out : dynkin->parsed() ? df.out : verify->parsed() ? vf.out : hf.out;
    try {
        rbsde::Scenario s;
        if (!scenario_path.empty()) s = rbsde::load_scenario(scenario_path);
        else s.name = "random";
        if (solve->parsed()) return finish(rbsde::run_solve(s, sf));
        if (dynkin->parsed()) return finish(rbsde::run_dynkin(s, df));
        if (verify->parsed()) return finish(rbsde::run_verify(s, vf));
        return finish(rbsde::run_horizon(s, hf));
    } catch (const rbsde::Error& e) {
        return fail(out, rbsde::error_record(command, e));
    } catch (const std::exception& e) {
        return fail(out, rbsde::error_record(command, e));
    }
}
