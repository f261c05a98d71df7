#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <random>

#include "doctest.h"
#include "warpspec/ratios.hpp"

using namespace warpspec;

namespace {

std::shared_ptr<const WarpingFunction> warp(const ProfileConfig& c, double r_max,
                                            double tol = 1e-10) {
    auto p = std::make_shared<const ProfileSpec>(make_profile(c));
    return std::make_shared<const WarpingFunction>(solve_sigma(p, r_max, tol));
}

// test-local adaptive Simpson, independent of the library quadrature
double simpson_rec(const std::function<double(double)>& f, double a, double b, double fa,
                   double fm, double fb, double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth > 40 || std::abs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth + 1) +
           simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth + 1);
}

double simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-12) {
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_rec(f, a, b, fa, fm, fb, whole, tol, 0);
}

// test-local ternary search, independent of the library line search
double ternary_min(const std::function<double(double)>& f, double lo, double hi, double* fmin) {
    for (int i = 0; i < 300; ++i) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        if (f(m1) < f(m2))
            hi = m2;
        else
            lo = m1;
    }
    double x = 0.5 * (lo + hi);
    if (fmin) *fmin = f(x);
    return x;
}

}  // namespace

TEST_CASE("euclidean table reproduces closed forms") {
    auto w = warp(config_euclidean(), 3.0);
    RatioTable t = build_ratio_table(w, 2, 3.0, 1e-10);
    CHECK(t.V(1.0) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(t.I(1.3) == doctest::Approx(2.0 / 1.3).epsilon(1e-10));
    CHECK(t.script_I(0.7) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(t.inv_I_cum(1.0) == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("hyperbolic table matches the antiderivative of sinh") {
    auto w = warp(config_hyperbolic(1.0), 10.0);
    RatioTable t = build_ratio_table(w, 2, 10.0, 1e-10);
    CHECK(t.V(2.0) == doctest::Approx(std::cosh(2.0) - 1.0).epsilon(1e-9));
    CHECK(t.I(2.0) == doctest::Approx(1.0 / std::tanh(1.0)).epsilon(1e-9));
    // F(1) = 2 ln cosh(1/2)
    CHECK(t.inv_I_cum(1.0) == doctest::Approx(2.0 * std::log(std::cosh(0.5))).epsilon(1e-9));
}

TEST_CASE("poly-exp example: I = 2/r + r^5 exactly") {
    auto w = warp(config_poly_exp_example(), 50.0);
    RatioTable t = build_ratio_table(w, 2, 50.0, 1e-10);
    CHECK(t.I(1.0) == doctest::Approx(3.0).epsilon(1e-8));
    CHECK(t.I(0.5) == doctest::Approx(2.0 / 0.5 + std::pow(0.5, 5)).epsilon(1e-8));
    CHECK(t.I(10.0) == doctest::Approx(2.0 / 10.0 + 1e5).epsilon(1e-7));
    // V(1) = e^{1/6}/2
    CHECK(t.V(1.0) == doctest::Approx(0.5 * std::exp(1.0 / 6.0)).epsilon(1e-9));
    // deep in the overflow region the log fields stay consistent
    CHECK(t.log_I(40.0) == doctest::Approx(std::log(std::pow(40.0, 5))).epsilon(1e-6));
}

TEST_CASE("small-radius asymptotics I(r) * r -> d") {
    for (int d : {2, 3, 4}) {
        auto w = warp(config_poly_exp_example(4), 2.0);
        RatioTable t = build_ratio_table(w, d, 2.0, 1e-10);
        for (double r : {1e-3, 1e-2})
            CHECK(t.I(r) * r == doctest::Approx(d).epsilon(1e-3 / d));
    }
}

TEST_CASE("table invariants") {
    auto w = warp(config_hyperbolic(1.0), 8.0);
    RatioTable t = build_ratio_table(w, 3, 8.0, 1e-10);

    SUBCASE("script_I samples equal I * sigma bit for bit") {
        const auto& I = t.I_samples();
        const auto& S = t.script_I_samples();
        const auto& g = t.grid();
        for (std::size_t k = 1; k < g.size(); ++k) {
            double expect = I[k] * t.warping().sigma(g[k]);
            if (std::isfinite(expect)) CHECK(S[k] == expect);
        }
    }
    SUBCASE("V strictly increasing, inv_I_cum nondecreasing") {
        const auto& lv = t.log_V_samples();
        const auto& jc = t.inv_I_cum_samples();
        for (std::size_t k = 2; k < lv.size(); ++k) {
            CHECK(lv[k] > lv[k - 1]);
            CHECK(jc[k] >= jc[k - 1]);
        }
    }
}

TEST_CASE("serial and parallel table builds are bit-identical") {
    auto w = warp(config_poly_exp_example(), 20.0);
    RatioTable a = build_ratio_table(w, 2, 20.0, 1e-10, Exec::serial);
    RatioTable b = build_ratio_table(w, 2, 20.0, 1e-10, Exec::parallel);
    REQUIRE(a.log_V_samples().size() == b.log_V_samples().size());
    CHECK(std::memcmp(a.log_V_samples().data(), b.log_V_samples().data(),
                      a.log_V_samples().size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.inv_I_cum_samples().data(), b.inv_I_cum_samples().data(),
                      a.inv_I_cum_samples().size() * sizeof(double)) == 0);
}

TEST_CASE("build_ratio_table rejects degenerate dimensions and vanished sigma") {
    auto w = warp(config_euclidean(), 2.0);
    CHECK_THROWS_AS(build_ratio_table(w, 1, 2.0, 1e-10), Error);
    auto sphere = warp(config_constant_G(-1.0), 5.0);
    REQUIRE(sphere->truncated_at());
    CHECK_THROWS_AS(build_ratio_table(sphere, 2, 4.0, 1e-10), Error);
    CHECK_NOTHROW(build_ratio_table(sphere, 2, 3.0, 1e-10));
}

TEST_CASE("build_ratio_table auto-extends the warping window") {
    auto w = warp(config_hyperbolic(1.0), 2.0);
    RatioTable t = build_ratio_table(w, 2, 6.0, 1e-10);
    CHECK(t.r_max() == 6.0);
    CHECK(t.I(5.0) == doctest::Approx(std::cosh(2.5) / std::sinh(2.5)).epsilon(1e-8));
}

TEST_CASE("homogeneous ratio monotonicity check") {
    SUBCASE("euclidean: exactly on the boundary, still nondecreasing") {
        auto w = warp(config_euclidean(), 3.0);
        RatioTable t = build_ratio_table(w, 2, 3.0, 1e-10);
        MonotoneReport rep = check_script_I_monotone(t, 3.0);
        CHECK(rep.nondecreasing);
        CHECK(std::abs(rep.margin_min) < 1e-8);
    }
    SUBCASE("hyperbolic: strictly increasing") {
        auto w = warp(config_hyperbolic(1.0), 10.0);
        RatioTable t = build_ratio_table(w, 2, 10.0, 1e-10);
        CHECK(check_script_I_monotone(t, 10.0).nondecreasing);
    }
    SUBCASE("sphere: decreasing from the start") {
        auto w = warp(config_constant_G(-1.0), 5.0);
        RatioTable t = build_ratio_table(w, 2, 3.0, 1e-10);
        MonotoneReport rep = check_script_I_monotone(t, 3.0);
        CHECK_FALSE(rep.nondecreasing);
        REQUIRE(rep.first_violation);
        CHECK(*rep.first_violation < 0.1);  // violation sets in immediately
        CHECK(rep.margin_min < 0.0);
    }
}

TEST_CASE("infimum of the isoperimetric ratio") {
    SUBCASE("poly-exp example: interior minimum of 2/r + r^5") {
        auto w = warp(config_poly_exp_example(), 50.0);
        RatioTable t = build_ratio_table(w, 2, 50.0, 1e-10);
        InfIResult res = inf_I(t, 50.0, true);

        double oracle_min;
        double oracle_arg = ternary_min(
            [](double r) { return 2.0 / r + std::pow(r, 5); }, 0.3, 2.0, &oracle_min);
        CHECK(res.value == doctest::Approx(oracle_min).epsilon(1e-7));
        CHECK(res.argmin == doctest::Approx(oracle_arg).epsilon(1e-6));
        CHECK(res.argmin == doctest::Approx(std::pow(0.4, 1.0 / 6.0)).epsilon(1e-6));
        CHECK_FALSE(res.limit_governed);
        REQUIRE(res.stationarity_gap);
        CHECK(*res.stationarity_gap < 1e-5);
    }
    SUBCASE("hyperbolic: limit-governed with analytic floor (m-1)k") {
        auto w = warp(config_hyperbolic(0.5, 3), 50.0);
        RatioTable t = build_ratio_table(w, 3, 50.0, 1e-10);
        InfIResult res = inf_I(t, 50.0, true);
        CHECK(res.limit_governed);
        CHECK(res.value == doctest::Approx(2.0 * 0.5).epsilon(1e-7));
        REQUIRE(res.analytic_floor);
        CHECK(*res.analytic_floor == doctest::Approx(1.0).epsilon(1e-7));
    }
    SUBCASE("euclidean with finite radius: inf at the boundary") {
        auto w = warp(config_euclidean(2, 2.0), 2.0);
        RatioTable t = build_ratio_table(w, 2, 2.0, 1e-10);
        InfIResult res = inf_I(t, 2.0, false);
        CHECK(res.value == doctest::Approx(1.0).epsilon(1e-6));  // m / r_phi
        CHECK(res.argmin == doctest::Approx(2.0).epsilon(1e-6));
        REQUIRE(res.analytic_floor);
        CHECK(*res.analytic_floor == doctest::Approx(0.5).epsilon(1e-9));  // (m-1)/r_phi
    }
}

TEST_CASE("improper integral classification") {
    SUBCASE("poly-exp example converges to the closed form") {
        auto w = warp(config_poly_exp_example(), 50.0);
        RatioTable t = build_ratio_table(w, 2, 50.0, 1e-10);
        TailStatus st = integral_inv_I(t, kInf);
        REQUIRE(st.kind == TailKind::converged);
        // oracle: Int_0^inf r/(2 + r^6) dr by independent adaptive Simpson + power tail
        double oracle = simpson([](double r) { return r / (2.0 + std::pow(r, 6)); }, 0.0, 60.0) +
                        std::pow(60.0, -4) / 4.0;
        CHECK(st.value == doctest::Approx(oracle).epsilon(1e-5));
        // and the closed form pi / (3 sqrt(3) 2^{2/3})
        CHECK(st.value ==
              doctest::Approx(M_PI / (3.0 * std::sqrt(3.0) * std::cbrt(4.0))).epsilon(1e-5));
    }
    SUBCASE("hyperbolic diverges with witness near 1/((m-1)k)") {
        auto w = warp(config_hyperbolic(1.0), 50.0);
        RatioTable t = build_ratio_table(w, 2, 50.0, 1e-10);
        TailStatus st = integral_inv_I(t, kInf);
        REQUIRE(st.kind == TailKind::divergent);
        CHECK(st.witness > 0.5);
        CHECK(st.witness <= 1.0 + 1e-9);
    }
    SUBCASE("euclidean diverges") {
        auto w = warp(config_euclidean(), 50.0);
        RatioTable t = build_ratio_table(w, 2, 50.0, 1e-10);
        CHECK(integral_inv_I(t, kInf).kind == TailKind::divergent);
    }
    SUBCASE("finite radius always converges") {
        auto w = warp(config_euclidean(2, 1.0), 1.0);
        RatioTable t = build_ratio_table(w, 2, 1.0, 1e-10);
        TailStatus st = integral_inv_I(t, 1.0);
        REQUIRE(st.kind == TailKind::converged);
        CHECK(st.value == doctest::Approx(0.25).epsilon(1e-9));
    }
}

TEST_CASE("riccati residual stays below 1e-5 I^2") {
    SUBCASE("euclidean at r = 1: the identity is exact") {
        auto w = warp(config_euclidean(), 3.0);
        RatioTable t = build_ratio_table(w, 2, 3.0, 1e-10);
        double res = riccati_residual(t, 1.0);
        CHECK(std::abs(res) <= 1e-5 * sqr(t.I(1.0)));
    }
    SUBCASE("100 random interior radii across presets") {
        struct Case {
            ProfileConfig cfg;
            int d;
            double R;
        };
        std::vector<Case> cases = {{config_euclidean(), 2, 5.0},
                                   {config_hyperbolic(1.0), 2, 10.0},
                                   {config_hyperbolic(2.0, 4), 4, 8.0},
                                   {config_constant_G(1.0), 2, 8.0},
                                   {config_poly_exp_example(), 2, 6.0}};
        std::mt19937_64 gen(20240817);
        for (const auto& c : cases) {
            auto w = warp(c.cfg, c.R);
            RatioTable t = build_ratio_table(w, c.d, c.R, 1e-10);
            std::uniform_real_distribution<double> dist(0.05, 0.9 * c.R);
            for (int i = 0; i < 100; ++i) {
                double r = dist(gen);
                double res = riccati_residual(t, r);
                CHECK(std::abs(res) <= 1e-5 * sqr(t.I(r)));
            }
        }
    }
}

TEST_CASE("monotone homogeneous ratio is implied by nonnegative sigma''") {
    // hyperbolic and euclidean presets have sigma'' >= 0, so the check must pass
    for (auto cfg : {config_hyperbolic(1.0), config_euclidean()}) {
        auto w = warp(cfg, 6.0);
        RatioTable t = build_ratio_table(w, 2, 6.0, 1e-10);
        CHECK(check_script_I_monotone(t, 6.0).nondecreasing);
    }
}
