#include "helpers.hpp"

#include <filesystem>

using namespace rbsde;
using namespace rbsde::test;

namespace {

std::string shipped(const std::string& name) { return std::string(RBSDE_SOURCE_DIR) + "/scenarios/" + name; }

double eval(const std::string& text) { return Expression(text).eval({}); }

}  // namespace

TEST_CASE("expressions associate left to right") {
    CHECK(eval("2^3^2") == 64.0);
    CHECK(eval("8/4/2") == 1.0);
    CHECK(eval("10-4-3") == 3.0);
    CHECK(eval("-2^2") == 4.0);
    CHECK(eval("1 + 2*3") == 7.0);
    CHECK(eval("max(1, min(4, 3))") == 3.0);
    Expression::Vars v;
    v.u = 2;
    v.plus = 1;
    CHECK(Expression("u*(1+plus)").eval(v) == 4.0);
    try {
        Expression("1 + * 2");
        FAIL("expected a syntax error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(std::string(e.what()).find("position") != std::string::npos);
    }
    CHECK_THROWS_AS(Expression("foo(1)"), Error);
    CHECK_THROWS_AS(Expression("(1"), Error);
}

TEST_CASE("scenario round trip") {
    for (const auto& entry : std::filesystem::directory_iterator(std::string(RBSDE_SOURCE_DIR) + "/scenarios")) {
        const auto s = load_scenario(entry.path().string());
        CHECK(same_scenario(parse_scenario(emit_scenario(s)), s));
    }
    std::mt19937_64 rng(4);
    for (int k = 0; k < 20; ++k) {
        const auto s = random_scenario(RandomFamily{}, rng);
        const auto back = parse_scenario(emit_scenario(s));
        CHECK(same_scenario(back, s));
        CHECK(emit_scenario(back) == emit_scenario(s));
    }
    CHECK_THROWS_AS(parse_scenario(R"({"tree": {"kind": "binomial", "N": 1}, "colour": 3})"), Error);
    CHECK_THROWS_AS(parse_scenario("{not json"), Error);
}

TEST_CASE("solve command") {
    const auto pin = run_solve(load_scenario(shipped("pinched.json")), {});
    CHECK(pin["ok"] == true);
    CHECK(pin["exit_code"] == 0);

    const auto touch = run_solve(load_scenario(shipped("upper_touch.json")), {});
    CHECK(touch["ok"] == true);
    CHECK(touch["root_value"].get<double>() == doctest::Approx(0.4).epsilon(1e-9));

    try {
        run_solve(load_scenario(shipped("separation_violation.json")), {});
        FAIL("expected a separation error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::validation);
        CHECK(e.exit_code() == 2);
        CHECK(std::string(e.what()).find("separation violation") != std::string::npos);
    }
}

TEST_CASE("verify is deterministic") {
    auto s = load_scenario(shipped("pinched.json"));
    VerifyFlags flags;
    flags.suites = {"comparison", "representation"};
    flags.trials = 10;
    flags.seed = 17;
    auto a = run_verify(s, flags);
    auto b = run_verify(s, flags);
    for (auto* r : {&a, &b}) {
        for (auto& suite : (*r)["suites"]) suite["metrics"].erase("seconds");
    }
    CHECK(a.dump() == b.dump());
    CHECK(a["ok"] == true);
}

TEST_CASE("representation on a two-period family") {
    VerifyConfig cfg;
    cfg.trials = 20;
    cfg.seed = 3;
    RandomFamily fam;
    fam.max_depth = 2;
    fam.barrier = "lower";
    fam.with_v = true;
    cfg.family = fam;
    const auto r = run_suite("representation", cfg);
    CHECK(r.passed);
    CHECK(r.worst <= 1e-8);
}

TEST_CASE("tampered comparison fails with a witness") {
    VerifyConfig cfg;
    cfg.trials = 5;
    cfg.seed = 2;
    cfg.tamper = [](const FilteredTree&, LatticeProcess& y) { y(0) -= 1.0; };
    const auto r = run_suite("comparison", cfg);
    CHECK_FALSE(r.passed);
    CHECK(r.worst >= 0.5);
    CHECK_FALSE(r.witness.empty());
}

TEST_CASE("horizon study") {
    const auto affine = horizon_study(materialize(load_scenario(shipped("horizon_affine.json"))), "none", 12);
    CHECK(affine.asserted);
    CHECK(affine.ok);
    CHECK(affine.worst_ratio <= affine.bound);

    auto s = load_scenario(shipped("horizon_affine.json"));
    s.generator = GeneratorSpec{};
    s.xi = ValueSpec::expression("u - d");
    const auto mart = horizon_study(materialize(s), "none", 6);
    for (const auto& row : mart.rows) CHECK(row.diff == doctest::Approx(0.0).epsilon(1e-12));

    const auto mixed = horizon_study(materialize(load_scenario(shipped("horizon_mixed.json"))), "lower", 8);
    for (std::size_t k = 1; k + 1 < mixed.rows.size(); ++k) CHECK(mixed.rows[k].diff <= mixed.rows[k - 1].diff + 1e-12);
}

TEST_CASE("budget overrun skips a suite") {
    const auto s = parse_scenario(
        R"({"name": "b", "tree": {"kind": "binomial", "N": 1}, "xi": 0,
            "verify": {"suites": ["game-value"], "trials": 2, "max_rules": 1}})");
    const auto r = run_verify(s, {});
    CHECK(r["suites"][0]["status"] == "skipped");
    CHECK(r["ok"] == false);
    CHECK(r["exit_code"] == 4);
}
