#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "warpspec/scenario.hpp"

using namespace warpspec;
using nlohmann::json;

namespace {

const char* kHyperbolicScenario = R"({
  "profile": {"kind": "closed_form_sigma", "family": "hyperbolic", "params": {"k": 1.0}},
  "m": 2, "l": 0, "r_phi": "inf", "H": 0.0,
  "assumptions": {"proper": false}
})";

const char* kPolyExpScenario = R"({
  "profile": {"kind": "closed_form_sigma", "family": "poly_exp",
              "params": {"poly_coeffs": [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
                         "exp_coeffs": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.16666666666666666]}},
  "m": 2, "r_phi": "inf", "H": 0.0,
  "assumptions": {"proper": true}
})";

std::string write_temp(const std::string& text, const char* name) {
    std::string path = std::string("/tmp/") + name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

struct CmdResult {
    int code;
    std::string out;
};

CmdResult run_cmd(const std::string& cmd) {
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

}  // namespace

TEST_CASE("scenario JSON parses and drives the pipeline") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    CHECK(s.profile.kind == ProfileKind::closed_form_sigma);
    CHECK(s.profile.r_phi == kInf);
    Pipeline pl = run_analysis(s);
    CHECK(pl.report.lambda_lower == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(exit_code_for(pl.report) == 0);
}

TEST_CASE("scenario round-trips through its serialized form") {
    Scenario s = scenario_from_json(json::parse(kPolyExpScenario));
    auto j1 = scenario_to_json(s);
    Scenario s2 = scenario_from_json(json::parse(j1.dump()));
    auto j2 = scenario_to_json(s2);
    CHECK(j1.dump() == j2.dump());
}

TEST_CASE("report serialization is deterministic and round-trips") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    Pipeline pl1 = run_analysis(s);
    Pipeline pl2 = run_analysis(s);
    std::string a = report_to_json(s, pl1).dump(2);
    std::string b = report_to_json(s, pl2).dump(2);
    CHECK(a == b);
    CHECK(nlohmann::ordered_json::parse(a).dump(2) == a);  // lossless reparse
}

TEST_CASE("malformed scenarios raise ParseError") {
    std::string path = write_temp("{ this is not json", "warpspec_bad.json");
    try {
        load_scenario(path);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::parse_error);
    }
    CHECK_THROWS_AS(scenario_from_json(json::parse(R"({"m": 2})")), Error);
}

TEST_CASE("sweep over H0 reproduces [(1-H0) k (m-1)]^2 / 4") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    SweepSpec spec{"H0", {0.0, 0.25, 0.5, 0.75, 1.0}};
    std::string csv = run_sweep_csv(s, spec);
    auto lines = split(csv, '\n');
    REQUIRE(lines.size() >= 6);
    std::vector<double> expected{0.25, 0.140625, 0.0625, 0.015625, 0.0};
    for (int i = 0; i < 5; ++i) {
        auto cols = split(lines[static_cast<std::size_t>(i + 1)], ',');
        REQUIRE(cols.size() >= 13);
        CHECK(std::stod(cols[3]) == doctest::Approx(expected[static_cast<std::size_t>(i)])
                                        .epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("sweep over m reproduces (m-1)^2/4") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    std::string csv = run_sweep_csv(s, {"m", {2.0, 3.0, 4.0}});
    auto lines = split(csv, '\n');
    std::vector<double> expected{0.25, 1.0, 2.25};
    for (int i = 0; i < 3; ++i) {
        auto cols = split(lines[static_cast<std::size_t>(i + 1)], ',');
        CHECK(std::stod(cols[3]) ==
              doctest::Approx(expected[static_cast<std::size_t>(i)]).epsilon(1e-6));
    }
}

TEST_CASE("sweep over r_phi carries the exit-time column, including divergence") {
    Scenario s;
    s.profile = config_euclidean(2, 1.0, 0.0);
    std::string csv = run_sweep_csv(s, {"r_phi", {1.0, 2.0, kInf}});
    auto lines = split(csv, '\n');
    auto row0 = split(lines[1], ',');
    auto row1 = split(lines[2], ',');
    auto row2 = split(lines[3], ',');
    CHECK(std::stod(row0[8]) == doctest::Approx(0.25).epsilon(1e-8));
    CHECK(std::stod(row1[8]) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(row2[8] == "divergent");
    CHECK(row2[1] == "inf");
}

TEST_CASE("sweep rejects unknown parameters") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    try {
        run_sweep_csv(s, {"bogus", {1.0}});
        FAIL("expected UnknownParameter");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::unknown_parameter);
    }
}

TEST_CASE("sweep rows are identical under serial and parallel execution") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    SweepSpec spec{"k", {0.5, 1.0, 1.5, 2.0}};
    CHECK(run_sweep_csv(s, spec, Exec::serial) == run_sweep_csv(s, spec, Exec::parallel));
}

TEST_CASE("run_simulation attaches pass/fail comparisons") {
    Scenario s = scenario_from_json(json::parse(kHyperbolicScenario));
    s.profile.r_phi = kInf;
    s.analysis.r_cap = 2.0;  // keep the table small; MC only needs [0, 1]
    s.mc.R_list = {1.0};
    s.mc.n_paths = 20000;
    s.mc.dt = 1e-5;
    s.mc.seed = 424242;
    Pipeline pl = run_analysis(s);
    auto rows = run_simulation(s, pl);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].expected == doctest::Approx(2.0 * std::log(std::cosh(0.5))).epsilon(1e-8));
    CHECK(rows[0].pass);
}

#ifdef WARPSPEC_CLI_PATH
TEST_CASE("CLI: byte-identical reports, exit codes, table dumps") {
    std::string scen = write_temp(kPolyExpScenario, "warpspec_scen.json");
    std::string cli = WARPSPEC_CLI_PATH;

    SUBCASE("determinism with --no-timings") {
        auto r1 = run_cmd(cli + " analyze " + scen + " --no-timings");
        auto r2 = run_cmd(cli + " analyze " + scen + " --no-timings");
        CHECK(r1.code == 0);
        CHECK(r1.out == r2.out);
        CHECK(r1.out.find("\"discrete_spectrum\": \"yes\"") != std::string::npos);
    }
    SUBCASE("hypotheses-violated exits 2 with a report") {
        std::string bad = kHyperbolicScenario;
        auto pos = bad.find("\"H\": 0.0");
        bad.replace(pos, 8, "\"H\": 2.0");
        std::string scen2 = write_temp(bad, "warpspec_scen2.json");
        auto r = run_cmd(cli + " analyze " + scen2 + " --no-timings");
        CHECK(r.code == 2);
        CHECK(r.out.find("hypotheses-violated") != std::string::npos);
    }
    SUBCASE("hard errors exit 1") {
        std::string scen3 = write_temp("{ nope", "warpspec_scen3.json");
        auto r = run_cmd(cli + " analyze " + scen3);
        CHECK(r.code == 1);
    }
    SUBCASE("sweep CSV goes to stdout") {
        auto r = run_cmd(cli + " sweep " + scen + " --param H0 --values 0,0.5");
        CHECK(r.code == 0);
        CHECK(r.out.rfind("param,value", 0) == 0);
    }
    SUBCASE("ratio table CSV dump") {
        auto r = run_cmd("cd /tmp && " + cli + " analyze " + scen + " --format csv --r-cap 5");
        CHECK(r.out.rfind("r,sigma,sigma_prime_over_sigma,V_or_logV,I,script_I,inv_I_cum", 0) == 0);
    }
}
#endif
