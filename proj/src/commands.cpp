#include "rbsde/commands.hpp"

#include "rbsde/error.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

namespace rbsde {

namespace {

namespace fs = std::filesystem;

Report num(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail_validation("cannot create output directory '" + dir + "': " + ec.message());
}

void write_process(const std::string& dir, const std::string& name, const FilteredTree& tree,
                   const LatticeProcess& x) {
    if (dir.empty()) return;
    std::ofstream out(fs::path(dir) / (name + ".csv"));
    if (!out) fail_validation("cannot write " + name + ".csv in '" + dir + "'");
    write_csv(out, tree, x);
}

void write_log(const std::string& dir, const std::vector<IterationRecord>& log) {
    if (dir.empty()) return;
    std::ofstream out(fs::path(dir) / "iterations.csv");
    out << "stage,index,change\n";
    for (const auto& r : log) out << r.stage << ',' << r.index << ',' << format_double(r.change) << '\n';
}

Report header(const char* command, const Scenario& s) {
    Report r;
    r["command"] = command;
    r["scenario"] = s.name;
    r["version"] = version;
    return r;
}

Report lower_checks(const LowerChecks& c) {
    Report r;
    r["ok"] = c.ok;
    r["barrier_gap"] = num(c.barrier_gap);
    r["dynamics"] = num(c.dynamics);
    r["minimality"] = num(c.minimality);
    r["k_decrease"] = num(c.k_decrease);
    r["k_predictability"] = num(c.k_predictability);
    r["generator_cost"] = num(c.generator_cost);
    if (!c.ok) r["failure"] = c.failure;
    return r;
}

Report double_checks(const DoubleChecks& c) {
    Report r;
    r["ok"] = c.ok;
    r["barrier_gap"] = num(c.barrier_gap);
    r["dynamics"] = num(c.dynamics);
    r["minimality_lower"] = num(c.minimality_lower);
    r["minimality_upper"] = num(c.minimality_upper);
    r["singular"] = c.singular;
    r["r_decrease"] = num(c.r_decrease);
    r["r_predictability"] = num(c.r_predictability);
    r["generator_cost"] = num(c.generator_cost);
    if (!c.ok) r["failure"] = c.failure;
    return r;
}

Report separation(const SeparationReport& s) {
    Report r;
    r["ok"] = s.ok;
    r["worst_gap"] = num(s.worst_gap);
    r["cross_ok"] = s.cross_ok;
    r["cross_gap"] = num(s.cross_gap);
    r["note"] = "on a finite tree L <= U is the whole semimartingale separation condition";
    return r;
}

Report rule_json(const FilteredTree& tree, const StoppingRule& rule) {
    Report stops = Report::array();
    for (NodeId v : tree.order()) {
        if (!rule.stops_at(v)) continue;
        stops.push_back({{"node", v}, {"slot", to_string(rule.stop_slot(tree, v))}});
    }
    return stops;
}

SolverOptions solver_options(const Scenario& s, const Problem& p) {
    SolverOptions o;
    o.picard.tol = s.solver.tol;
    o.picard.max_iter = s.solver.max_iter;
    o.monotone.tol = s.solver.tol;
    o.monotone.picard = o.picard;
    if (!s.solver.ladder.empty()) o.monotone.ladder = s.solver.ladder;
    if (!s.solver.moreau_ladder.empty()) o.monotone.moreau_ladder = s.solver.moreau_ladder;
    o.monotone.weighted = s.solver.weighted;
    o.monotone.floor = p.floor;
    return o;
}

Report iteration_report(const std::vector<IterationRecord>& log, int iterations) {
    Report r;
    r["iterations"] = iterations;
    r["log_entries"] = log.size();
    if (!log.empty()) r["last_change"] = num(log.back().change);
    return r;
}

}  // namespace

Report run_solve(const Scenario& scenario, const SolveFlags& flags) {
    Scenario s = scenario;
    if (flags.barrier) s.solver.barrier = *flags.barrier;
    if (flags.scheme) s.solver.scheme = *flags.scheme;
    if (flags.tol) s.solver.tol = *flags.tol;
    if (!(s.solver.tol > 0.0)) fail_validation("tolerance must be positive");
    const Problem p = materialize(s);
    const auto& tree = p.tree;
    const std::string& dir = flags.out;
    if (!dir.empty()) ensure_dir(dir);

    Report r = header("solve", s);
    r["barrier"] = s.solver.barrier;
    r["tolerance"] = s.solver.tol;
    r["separation"] = separation(check_separation(tree, p.L, p.U, p.xi));
    bool ok = true;

    const std::string& barrier = s.solver.barrier;
    if (barrier == "none") {
        const auto b = solve_bsde(tree, p.xi, p.f, p.V);
        r["scheme"] = "sweep";
        r["root_value"] = num(b.Y(tree.root()));
        r["residuals"] = {{"dynamics", num(b.residual)}, {"generator_cost", num(b.generator_cost)}};
        ok = b.residual <= 1e-9 && std::isfinite(b.generator_cost);
        write_process(dir, "Y", tree, b.Y);
        write_process(dir, "M", tree, b.M);
    } else if (barrier == "lower" || barrier == "upper") {
        const Scheme scheme = parse_scheme(s.solver.scheme);
        const SolverOptions opts = solver_options(s, p);
        ReflectedSolution sol;
        LowerChecks checks;
        if (barrier == "lower") {
            sol = p.S ? solve_lower_shifted(tree, p.xi, p.f, p.V, p.L, *p.S, scheme, opts)
                      : solve_lower(tree, p.xi, p.f, p.V, p.L, scheme, opts);
            checks = check_lower_solution(tree, p.xi, p.f, p.V, p.L, sol);
            r["shifted"] = p.S.has_value();
        } else {
            sol = solve_upper(tree, p.xi, p.f, p.V, p.U, scheme, opts);
            NodeValues mxi = p.xi;
            for (double& x : mxi) x = -x;
            ReflectedSolution mirror{-sol.Y, -sol.M, -sol.K, sol.scheme, sol.iterations, {}, 0};
            checks = check_lower_solution(tree, mxi, mirrored_generator(p.f), -p.V, -p.U, mirror);
        }
        r["scheme"] = to_string(scheme);
        r["root_value"] = num(sol.Y(tree.root()));
        r["iterations"] = iteration_report(sol.log, sol.iterations);
        if (scheme == Scheme::picard || scheme == Scheme::moreau || scheme == Scheme::monotone) {
            r["iterations"]["even_odd_chain_breaks"] = sol.chain_breaks;
        }
        r["residuals"] = lower_checks(checks);
        ok = checks.ok;
        write_process(dir, "Y", tree, sol.Y);
        write_process(dir, "M", tree, sol.M);
        write_process(dir, "K", tree, sol.K);
        write_log(dir, sol.log);
    } else {
        const Scheme scheme = parse_scheme(s.solver.scheme);
        if (scheme != Scheme::decoupled && scheme != Scheme::direct && scheme != Scheme::fnm) {
            fail_validation("two barriers take the decoupled, direct or fnm scheme, not '" + s.solver.scheme + "'");
        }
        DecoupledOptions dopts;
        dopts.tol = s.solver.tol;
        dopts.max_iter = s.solver.max_iter;
        DoubleBarrierSolution sol;
        if (scheme == Scheme::fnm) {
            FnmOptions fo;
            fo.decoupled = dopts;
            if (!s.solver.ladder.empty()) fo.ladder = s.solver.ladder;
            sol = solve_fnm(tree, p.xi, p.f, p.V, p.L, p.U, fo);
        } else {
            sol = solve_double(tree, p.xi, p.f, p.V, p.L, p.U, scheme, dopts);
        }
        const auto checks = check_double_solution(tree, p.xi, p.f, p.V, p.L, p.U, sol);
        r["scheme"] = to_string(scheme);
        r["root_value"] = num(sol.Y(tree.root()));
        Report it = iteration_report(sol.log, sol.iterations);
        it["first_component"] = sol.first.iterations;
        it["second_component"] = sol.second.iterations;
        r["iterations"] = it;
        r["residuals"] = double_checks(checks);
        r["sandwich_gap"] = num(sandwich_gap(tree, p.xi, p.f, p.V, p.L, p.U, sol.Y));
        ok = checks.ok;
        write_process(dir, "Y", tree, sol.Y);
        write_process(dir, "M", tree, sol.M);
        write_process(dir, "R_plus", tree, sol.R_plus);
        write_process(dir, "R_minus", tree, sol.R_minus);
        if (sol.first.Y.nodes() > 0) {
            write_process(dir, "Y1", tree, sol.first.Y);
            write_process(dir, "Y2", tree, sol.second.Y);
        }
        write_log(dir, sol.log);
    }
    r["ok"] = ok;
    r["exit_code"] = ok ? 0 : exit_failed_check;
    if (!dir.empty()) write_report(dir, "report.json", r);
    return r;
}

Report run_dynkin(const Scenario& scenario, const DynkinFlags& flags) {
    Scenario s = scenario;
    s.solver.barrier = "double";
    const GameMode mode = parse_game_mode(flags.mode);
    const Problem p = materialize(s);
    const auto& tree = p.tree;
    const std::string& dir = flags.out;
    if (!dir.empty()) ensure_dir(dir);

    Report r = header("dynkin", s);
    r["mode"] = to_string(mode);
    const auto sep = check_separation(tree, p.L, p.U, p.xi);
    r["separation"] = separation(sep);
    if (!sep.cross_ok) {
        r["separation"]["warning"] =
            "L(t+) > U(t) or L(t) > U(t+) somewhere: the game over stopping systems may differ from the clamp";
    }
    const auto g = game_value(tree, p.xi, p.f, p.L, p.U, mode, p.budget);
    bool ok = true;
    LatticeProcess values;
    if (g.dp) {
        values = *g.dp;
        r["dp_value"] = num((*g.dp)(tree.root()));
        write_process(dir, "value", tree, *g.dp);
    }
    if (g.exact) {
        r["supinf"] = num(g.exact->supinf);
        r["infsup"] = num(g.exact->infsup);
        r["system_rules"] = g.exact->max_rules;
        r["literal_pairs"] = g.exact->literal_pairs;
        r["max_rule"] = rule_json(tree, g.exact->max_rule);
        r["min_rule"] = rule_json(tree, g.exact->min_rule);
        write_process(dir, "supinf", tree, g.exact->supinf_values);
        write_process(dir, "infsup", tree, g.exact->infsup_values);
        if (!g.dp) values = g.exact->supinf_values;
        const double order = std::abs(g.exact->supinf - g.exact->infsup);
        r["order_gap"] = num(order);
        ok = ok && order <= 1e-9;
    }
    if (g.dp && g.exact) {
        r["dp_exact_gap"] = num(g.dp_exact_gap);
        ok = ok && g.dp_exact_gap <= 1e-8;
    }
    if (flags.plain) {
        const auto plain = oracle_game(tree, p.xi, p.f, p.L, p.U, RuleKind::plain, RuleKind::plain, p.budget);
        r["plain_supinf"] = num(plain.supinf);
        r["plain_infsup"] = num(plain.infsup);
        r["plain_rules"] = plain.max_rules;
    }
    if (flags.epsilon) {
        const auto e = epsilon_optimal(tree, values, p.f, p.L, p.U, p.xi, *flags.epsilon);
        Report er;
        er["epsilon"] = *flags.epsilon;
        er["rho"] = rule_json(tree, e.rho);
        er["delta"] = rule_json(tree, e.delta);
        er["payoff"] = num(e.payoff);
        er["value"] = num(e.value);
        er["gap"] = num(e.gap);
        er["bound"] = num(e.bound);
        er["bound_factor"] = "epsilon * (N + 2)";
        er["within_bound"] = e.within_bound;
        r["epsilon_optimal"] = er;
        ok = ok && e.within_bound;
    }
    r["ok"] = ok;
    r["exit_code"] = ok ? 0 : exit_failed_check;
    if (!dir.empty()) write_report(dir, "report.json", r);
    return r;
}

Report run_verify(const Scenario& s, const VerifyFlags& flags) {
    VerifyConfig cfg;
    cfg.trials = flags.trials.value_or(s.verify.trials);
    cfg.seed = flags.seed.value_or(s.verify.seed);
    cfg.budget = OracleBudget{s.verify.max_rules, s.verify.max_pairs, s.verify.seconds};
    cfg.family = s.verify.family;
    cfg.threads = thread_count();
    if (cfg.trials < 1) fail_validation("trials must be at least 1");
    std::vector<std::string> suites = flags.suites.empty() ? s.verify.suites : flags.suites;
    if (suites.empty()) suites = suite_names();

    Report r = header("verify", s);
    r["seed"] = cfg.seed;
    r["trials"] = cfg.trials;
    r["budget"] = {{"max_rules", cfg.budget.max_rules},
                   {"max_pairs", cfg.budget.max_pairs},
                   {"seconds", cfg.budget.seconds}};
    bool ok = true, failed = false, skipped = false;
    Report list = Report::array();
    for (const auto& name : suites) {
        const SuiteResult res = run_suite(name, cfg);
        Report e;
        e["suite"] = res.name;
        e["status"] = res.skipped ? "skipped" : (res.passed ? "pass" : "fail");
        if (res.skipped) e["skip_reason"] = res.skip_reason;
        e["worst"] = num(res.worst);
        e["threshold"] = num(res.threshold);
        if (!res.witness.empty()) e["witness"] = res.witness;
        Report m;
        for (const auto& [k, v] : res.metrics) m[k] = num(v);
        e["metrics"] = m;
        e["minimality_worst"] = num(res.minimality_worst);
        e["singular"] = res.singular;
        if (!res.minimality_witness.empty()) e["invariant_witness"] = res.minimality_witness;
        list.push_back(e);
        ok = ok && res.passed;
        if (res.skipped) skipped = true;
        else if (!res.passed) failed = true;
    }
    r["suites"] = list;
    r["ok"] = ok;
    r["exit_code"] = failed ? exit_failed_check : skipped ? static_cast<int>(ErrorKind::budget) : 0;
    if (!flags.out.empty()) {
        ensure_dir(flags.out);
        write_report(flags.out, "report.json", r);
    }
    return r;
}

Report run_horizon(const Scenario& s, const HorizonFlags& flags) {
    const Problem p = materialize(s);
    const int a_max = flags.a_max > 0 ? flags.a_max : p.tree.horizon();
    const auto st = horizon_study(p, s.solver.barrier, a_max);
    Report r = header("horizon-study", s);
    r["barrier"] = s.solver.barrier;
    r["a_max"] = a_max;
    Report rows = Report::array();
    for (const auto& row : st.rows) {
        rows.push_back({{"a", row.a}, {"y0", num(row.y0)}, {"diff", num(row.diff)}, {"ratio", num(row.ratio)}});
    }
    r["rows"] = rows;
    r["asserted"] = st.asserted;
    if (st.asserted) {
        r["lambda"] = st.lambda;
        r["bound"] = st.bound;
        r["worst_ratio"] = num(st.worst_ratio);
    }
    r["note"] = st.note;
    r["ok"] = st.ok;
    r["exit_code"] = st.ok ? 0 : exit_failed_check;
    if (!flags.out.empty()) {
        ensure_dir(flags.out);
        std::ofstream out(fs::path(flags.out) / "horizon.csv");
        out << "a,y0,diff,ratio\n";
        for (const auto& row : st.rows) {
            out << row.a << ',' << format_double(row.y0) << ',' << format_double(row.diff) << ','
                << format_double(row.ratio) << '\n';
        }
        write_report(flags.out, "report.json", r);
    }
    return r;
}

Report error_record(const std::string& command, const Error& e) {
    Report r;
    r["command"] = command;
    r["error"] = to_string(e.kind());
    r["message"] = e.what();
    r["exit_code"] = e.exit_code();
    r["version"] = version;
    return r;
}

Report error_record(const std::string& command, const std::exception& e) {
    return error_record(command, Error(ErrorKind::validation, e.what()));
}

void write_report(const std::string& dir, const std::string& file, const Report& r) {
    ensure_dir(dir);
    std::ofstream out(fs::path(dir) / file);
    if (!out) fail_validation("cannot write " + file + " in '" + dir + "'");
    out << r.dump(2) << '\n';
}

}  // namespace rbsde
