#include "rbsde/commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>

using namespace rbsde;

namespace {

constexpr std::uint64_t seed = 20240611;

struct Outcome {
    bool pass = false;
    std::string detail;
};

VerifyConfig config(int trials) {
    VerifyConfig cfg;
    cfg.trials = trials;
    cfg.seed = seed;
    cfg.threads = thread_count();
    return cfg;
}

std::string describe(const SuiteResult& r) {
    std::string s = r.name + " worst=" + format_double(r.worst);
    for (const auto& [k, v] : r.metrics) s += " " + k + "=" + format_double(v);
    if (r.skipped) s += " skipped: " + r.skip_reason;
    if (!r.witness.empty()) s += " witness: " + r.witness;
    return s;
}

Outcome suite(const std::string& name, int trials) {
    const auto r = run_suite(name, config(trials));
    return {r.passed, describe(r)};
}

std::string scenario_path(const std::string& file) { return std::string(RBSDE_SOURCE_DIR) + "/scenarios/" + file; }

Outcome game_value() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_suite("game-value", config(200));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {r.passed && secs <= 120.0, describe(r) + " seconds=" + format_double(secs)};
}

Outcome minimality() {
    bool pass = true;
    std::string detail;
    for (const auto& [name, trials] : std::initializer_list<std::pair<const char*, int>>{
             {"game-value", 200}, {"scheme-agreement", 200}, {"representation", 200}, {"comparison", 500}}) {
        const auto r = run_suite(name, config(trials));
        const bool ok = !r.skipped && r.minimality_worst <= 1e-9 && r.singular && r.minimality_witness.empty();
        pass = pass && ok;
        detail += std::string(name) + " residual=" + format_double(r.minimality_worst) +
                  (r.singular ? " singular" : " NOT singular") +
                  (r.minimality_witness.empty() ? "" : " (" + r.minimality_witness + ")") + "; ";
    }
    const auto m = run_suite("minimality", config(200));
    pass = pass && m.passed;
    return {pass, detail + describe(m)};
}

Outcome witness() {
    const Scenario s = load_scenario(scenario_path("plus_jump_witness.json"));
    const Problem p = materialize(s);
    const auto sys = oracle_game(p.tree, p.xi, p.f, p.L, p.U, RuleKind::system, RuleKind::system, p.budget);
    const auto plain = oracle_game(p.tree, p.xi, p.f, p.L, p.U, RuleKind::plain, RuleKind::plain, p.budget);
    const auto dp = game_value(p.tree, p.xi, p.f, p.L, p.U, GameMode::dp).dp->operator()(p.tree.root());
    const bool pass = plain.supinf == 0.0 && plain.infsup == 0.0 && sys.supinf == 5.0 && sys.infsup == 5.0 && dp == 5.0;
    return {pass, "plain=" + format_double(plain.supinf) + "/" + format_double(plain.infsup) +
                      " system=" + format_double(sys.supinf) + "/" + format_double(sys.infsup) +
                      " dp=" + format_double(dp)};
}

Outcome horizon() {
    const Scenario s = load_scenario(scenario_path("horizon_affine.json"));
    const Problem p = materialize(s);
    const auto st = horizon_study(p, s.solver.barrier, 12);
    return {st.asserted && st.ok, "worst_ratio=" + format_double(st.worst_ratio) + " bound=" + format_double(st.bound) +
                                      " rows=" + std::to_string(st.rows.size())};
}

const std::function<Outcome()> criteria[] = {
    game_value,
    [] { return suite("scheme-agreement", 200); },
    [] { return suite("representation", 200); },
    [] { return suite("comparison", 500); },
    minimality,
    [] { return suite("decomposition", 200); },
    [] { return suite("lemma-bound", 200); },
    witness,
    [] { return suite("monotone-stability", 200); },
    [] { return suite("stability", 50); },
    horizon,
};

}  // namespace

int main(int argc, char** argv) {
    constexpr int count = static_cast<int>(std::size(criteria));
    int first = 1, last = count;
    if (argc > 1) first = last = std::atoi(argv[1]);
    if (first < 1 || last > count) {
        std::fprintf(stderr, "criterion must be 1..%d\n", count);
        return 2;
    }
    bool all = true;
    for (int k = first; k <= last; ++k) {
        Outcome o;
        try {
            o = criteria[k - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %d: %s  %s\n", k, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
    }
    return all ? 0 : 1;
}
