#include <cmath>
#include <cstring>
#include <memory>

#include "doctest.h"
#include "warpspec/estimates.hpp"
#include "warpspec/scenario.hpp"

using namespace warpspec;

namespace {

Pipeline analyze(const ProfileConfig& cfg, bool proper = false, double r_cap = 50.0) {
    Scenario s;
    s.profile = cfg;
    s.analysis.r_cap = r_cap;
    s.assumptions.proper = proper;
    return run_analysis(s);
}

}  // namespace

TEST_CASE("compute_A on the hyperbolic preset") {
    Pipeline pl = analyze(config_hyperbolic(1.0, 2, kInf, 0.0));
    CHECK(pl.report.A.value == 0.0);

    Pipeline ph = analyze(config_hyperbolic(1.0, 2, kInf, 0.5));
    CHECK(ph.report.A.value == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(ph.report.checks.A_le_1);

    Pipeline pv = analyze(config_hyperbolic(1.0, 2, kInf, 2.0));
    CHECK(pv.report.A.value == doctest::Approx(2.0).epsilon(1e-9));
    CHECK_FALSE(pv.report.checks.A_le_1);
    CHECK(pv.report.conditional);
    CHECK(pv.report.lambda_branch_inf == 0.0);  // clamped, flagged conditional
    CHECK(exit_code_for(pv.report) == 2);
}

TEST_CASE("hyperbolic spectral bound [(m-1)k - H0]^2 / 4") {
    Pipeline pl = analyze(config_hyperbolic(1.0, 2, kInf, 0.0));
    const EstimateReport& r = pl.report;
    CHECK(r.lambda_branch_inf == doctest::Approx(0.25).epsilon(1e-9));
    CHECK_FALSE(r.lambda_branch_integral);  // divergent integral: branch absent
    CHECK(r.lambda_lower == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(r.discrete_spectrum == Verdict3::no_inference);
    CHECK(r.stochastically_incomplete_model == StochasticClass::complete);
    CHECK_FALSE(r.mean_exit_time_upper);
    CHECK(r.mean_curvature.verdict == McoVerdict::not_applicable);
    CHECK(r.not_l1_liouville == Verdict3::no_inference);
    CHECK(exit_code_for(r) == 0);
}

TEST_CASE("poly-exp example: integral branch wins and spectrum is discrete") {
    Pipeline pl = analyze(config_poly_exp_example(), /*proper=*/true);
    const EstimateReport& r = pl.report;
    double expected_integral = 3.0 * std::cbrt(4.0) * std::sqrt(3.0) / M_PI;  // 1 / F(inf)
    double expected_inf = (36.0 / 25.0) * std::pow(0.4, -1.0 / 3.0);
    REQUIRE(r.lambda_branch_integral);
    CHECK(*r.lambda_branch_integral == doctest::Approx(expected_integral).epsilon(1e-4));
    CHECK(r.lambda_branch_inf == doctest::Approx(expected_inf).epsilon(1e-5));
    CHECK(r.lambda_lower == *r.lambda_branch_integral);
    CHECK(*r.lambda_branch_integral > r.lambda_branch_inf);
    CHECK(r.discrete_spectrum == Verdict3::yes);
    CHECK(r.stochastically_incomplete_model == StochasticClass::incomplete);
    REQUIRE(r.mean_exit_time_upper);
    CHECK(*r.mean_exit_time_upper ==
          doctest::Approx(M_PI / (3.0 * std::sqrt(3.0) * std::cbrt(4.0))).epsilon(1e-5));
    CHECK(r.not_l1_liouville == Verdict3::yes);  // H = 0 is minimal

    SUBCASE("mean curvature obstruction fires for H0 = 1") {
        Pipeline ph = analyze(config_poly_exp_example(2, kInf, 1.0), true);
        CHECK(ph.report.A.value == doctest::Approx(1.0 / 2.7959951).epsilon(1e-4));
        CHECK(ph.report.mean_curvature.verdict == McoVerdict::incompatible_with_completeness);
        CHECK(ph.report.mean_curvature.inv_I_to_zero);  // I^-1 -> 0 here
        // contrapositive consistency: the model itself is stochastically incomplete
        CHECK(ph.report.stochastically_incomplete_model == StochasticClass::incomplete);
    }
}

TEST_CASE("discreteness verdict enumerates its three outcomes") {
    TailStatus conv;
    conv.kind = TailKind::converged;
    conv.value = 1.0;
    TailStatus div;
    div.kind = TailKind::divergent;
    TailStatus inc;
    inc.kind = TailKind::inconclusive;

    CHECK(discreteness_verdict(conv, 0.5, true) == Verdict3::yes);
    CHECK(discreteness_verdict(conv, 0.5, false) == Verdict3::no_inference);
    CHECK(discreteness_verdict(div, 0.0, true) == Verdict3::no_inference);
    CHECK(discreteness_verdict(inc, 0.0, true) == Verdict3::no_inference);
    CHECK(discreteness_verdict(conv, 1.0, true) == Verdict3::hypotheses_violated);
    CHECK(discreteness_verdict(conv, 2.0, true) == Verdict3::hypotheses_violated);
}

TEST_CASE("finite-radius euclidean: exit-time bound and floors") {
    for (int m : {2, 3}) {
        for (double rphi : {1.0, 2.0}) {
            Pipeline pl = analyze(config_euclidean(m, rphi, 0.0));
            const EstimateReport& r = pl.report;
            REQUIRE(r.mean_exit_time_upper);
            CHECK(*r.mean_exit_time_upper ==
                  doctest::Approx(rphi * rphi / (2.0 * m)).epsilon(1e-9));
            CHECK(r.inf_ratio.value == doctest::Approx(m / rphi).epsilon(1e-6));
            REQUIRE(r.inf_ratio.analytic_floor);
            CHECK(*r.inf_ratio.analytic_floor == doctest::Approx((m - 1) / rphi).epsilon(1e-9));
            CHECK(r.stochastically_incomplete_model ==
                  StochasticClass::not_applicable_finite_radius);
        }
    }

    SUBCASE("floor-based inf branch is reported alongside the sharper one") {
        Pipeline pl = analyze(config_euclidean(2, 2.0, 0.25));
        const EstimateReport& r = pl.report;
        // sharper branch from computed inf I = m/r_phi = 1
        CHECK(r.lambda_branch_inf == doctest::Approx(sqr(1.0 - 0.25) / 4.0).epsilon(1e-6));
        // floor variant from (m-1)/r_phi = 1/2
        REQUIRE(r.lambda_branch_inf_floor);
        CHECK(*r.lambda_branch_inf_floor ==
              doctest::Approx(sqr(0.5 - 0.25) / 4.0).epsilon(1e-6));
    }
}

TEST_CASE("lambda_lower is nonincreasing in H0") {
    double prev = kInf;
    for (double h0 : {0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.9}) {
        Pipeline pl = analyze(config_hyperbolic(1.0, 3, kInf, h0));
        CHECK(pl.report.lambda_lower <= prev + 1e-12);
        prev = pl.report.lambda_lower;
    }
}

TEST_CASE("product reduction") {
    SUBCASE("d = m - l < 2 is rejected") {
        ProfileConfig cfg = config_euclidean(3);
        cfg.l = 2;
        ProfileSpec p = make_profile(cfg);
        CHECK_THROWS_AS(product_reduce(p), Error);
    }
    SUBCASE("m=4, l=2 hyperbolic reduces to the d=2 bound 1/4") {
        ProfileConfig cfg = config_hyperbolic(1.0, 4);
        cfg.l = 2;
        Pipeline pl = analyze(cfg);
        CHECK(pl.report.effective_dim == 2);
        CHECK(pl.report.lambda_branch_inf == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("product results are bit-identical to the direct low-dimension run") {
    ProfileConfig prod = config_hyperbolic(1.0, 4);
    prod.l = 2;
    ProfileConfig direct = config_hyperbolic(1.0, 2);

    Pipeline a = analyze(prod);
    Pipeline b = analyze(direct);
    CHECK(a.report.effective_dim == 2);
    CHECK(a.report.lambda_branch_inf == doctest::Approx(0.25).epsilon(1e-9));

    auto bits_equal = [](double x, double y) {
        return std::memcmp(&x, &y, sizeof(double)) == 0;
    };
    CHECK(bits_equal(a.report.lambda_lower, b.report.lambda_lower));
    CHECK(bits_equal(a.report.lambda_branch_inf, b.report.lambda_branch_inf));
    CHECK(bits_equal(a.report.inf_ratio.value, b.report.inf_ratio.value));
    CHECK(bits_equal(a.report.A.value, b.report.A.value));
    CHECK(a.report.tail.kind == b.report.tail.kind);
}

TEST_CASE("tabulated H envelope feeds the supremum") {
    ProfileConfig cfg = config_hyperbolic(1.0, 2, kInf, 0.0);
    cfg.h_constant = false;
    cfg.h_r = {0.0, 1.0, 5.0, 50.0};
    cfg.h_vals = {0.0, 0.2, 0.5, 0.5};
    Pipeline pl = analyze(cfg);
    // I decreases to 1, H rises to 0.5: the sup sits at large r near 0.5
    CHECK(pl.report.A.value == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(pl.report.checks.A_le_1);
}
