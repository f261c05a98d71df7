#include <cmath>
#include <memory>

#include "doctest.h"
#include "warpspec/warping.hpp"

using namespace warpspec;

namespace {

std::shared_ptr<const ProfileSpec> spec(const ProfileConfig& c) {
    return std::make_shared<const ProfileSpec>(make_profile(c));
}

}  // namespace

TEST_CASE("flat profile integrates to sigma = r") {
    WarpingFunction w = solve_sigma(spec(config_constant_G(0.0)), 5.0, 1e-10);
    CHECK(w.sigma(3.0) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(w.sigma_prime(3.0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(w.max_defect() <= 1e-10);
    CHECK_FALSE(w.truncated_at());
}

TEST_CASE("constant curvature 1 reproduces sinh/cosh") {
    WarpingFunction w = solve_sigma(spec(config_constant_G(1.0)), 8.0, 1e-10);
    CHECK(w.sigma(1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-8));
    CHECK(w.sigma_prime(1.0) == doctest::Approx(std::cosh(1.0)).epsilon(1e-8));
    CHECK(w.sigma(5.5) == doctest::Approx(std::sinh(5.5)).epsilon(1e-8));
    CHECK(w.max_defect() <= 1e-10);

    SUBCASE("hyperbolic identity at the grid points") {
        for (double r : w.grid()) {
            if (r <= 0.0 || r > 8.0) continue;
            double s = w.sigma(r), sp = w.sigma_prime(r);
            CHECK(std::abs(sp * sp - s * s - 1.0) <= 10.0 * 1e-10 * (1.0 + s * s + sp * sp) + 1e-12);
        }
    }
}

TEST_CASE("sphere comparison vanishes at pi") {
    WarpingFunction w = solve_sigma(spec(config_constant_G(-1.0)), 5.0, 1e-10);
    REQUIRE(w.truncated_at());
    CHECK(std::abs(*w.truncated_at() - M_PI) < 1e-6);
    CHECK(w.sigma(1.0) == doctest::Approx(std::sin(1.0)).epsilon(1e-8));
}

TEST_CASE("closed-form hyperbolic evaluates exactly") {
    WarpingFunction w = solve_sigma(spec(config_hyperbolic(1.0)), 10.0, 1e-10);
    CHECK(w.closed_form());
    CHECK(w.sigma(1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-14));
    CHECK(w.v(2.0) == doctest::Approx(1.0 / std::tanh(2.0)).epsilon(1e-14));
    CHECK(w.max_defect() <= 1e-12);
}

TEST_CASE("positivity and monotonicity scans") {
    SUBCASE("hyperbolic: increasing everywhere") {
        WarpingFunction w = solve_sigma(spec(config_hyperbolic(1.0)), 10.0, 1e-10);
        PositivityReport rep = check_positivity_monotonicity(w, 10.0);
        CHECK(rep.sigma_positive);
        CHECK(rep.sigma_prime_nonneg);
        CHECK_FALSE(rep.first_violation);
    }
    SUBCASE("sphere: sigma' changes sign at pi/2") {
        WarpingFunction w = solve_sigma(spec(config_constant_G(-1.0)), 5.0, 1e-10);
        PositivityReport rep = check_positivity_monotonicity(w, 3.0);
        CHECK(rep.sigma_positive);
        CHECK_FALSE(rep.sigma_prime_nonneg);
        REQUIRE(rep.first_violation);
        CHECK(std::abs(*rep.first_violation - M_PI / 2.0) < 1e-6);
    }
    SUBCASE("poly-exp example: increasing on [0, 3]") {
        WarpingFunction w = solve_sigma(spec(config_poly_exp_example()), 3.0, 1e-10);
        PositivityReport rep = check_positivity_monotonicity(w, 3.0);
        CHECK(rep.sigma_positive);
        CHECK(rep.sigma_prime_nonneg);
    }
}

TEST_CASE("tightening the tolerance shrinks the dense-output defect") {
    auto p = spec(config_constant_G(1.0));
    WarpingFunction w1 = solve_sigma(p, 6.0, 1e-6);
    WarpingFunction w2 = solve_sigma(p, 6.0, 5e-7);
    CHECK(w2.max_defect() <= std::max(0.75 * w1.max_defect(), 1e-13));
}

TEST_CASE("solution responds Lipschitz-continuously to the curvature") {
    WarpingFunction a = solve_sigma(spec(config_constant_G(1.0)), 2.0, 1e-11);
    WarpingFunction b = solve_sigma(spec(config_constant_G(1.0 + 1e-6)), 2.0, 1e-11);
    CHECK(std::abs(a.sigma(1.0) - b.sigma(1.0)) <= 1e-5);
}

TEST_CASE("tabulated curvature drives the integrator") {
    ProfileConfig c;
    c.kind = ProfileKind::tabulated_G;
    for (int i = 0; i <= 600; ++i) {
        c.knots.push_back(6.0 * i / 600.0);
        c.values.push_back(1.0);
    }
    WarpingFunction w = solve_sigma(spec(c), 6.0, 1e-10);
    CHECK(w.sigma(1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-8));
    CHECK_THROWS_AS(solve_sigma(spec(c), 7.0, 1e-10), Error);  // beyond the knots
}

TEST_CASE("super-exponential growth hands over to the log representation") {
    // G = t^6: WKB gives log sigma ~ t^4/4 and sigma'/sigma ~ t^3 at large t
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_G;
    c.g_family = GFamily::polynomial;
    c.g_coeffs = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    WarpingFunction w = solve_sigma(spec(c), 20.0, 1e-10);
    CHECK(std::isinf(w.sigma(20.0)));  // the direct value overflows
    CHECK(w.log_sigma(20.0) == doctest::Approx(20.0 * 20.0 * 20.0 * 20.0 / 4.0).epsilon(1e-3));
    CHECK(w.v(20.0) == doctest::Approx(8000.0).epsilon(1e-2));
    CHECK(w.max_defect() <= 1e-10);
}

TEST_CASE("runaway stiffness reports the last good radius") {
    // G = t^10: the log-form drift sigma'/sigma ~ t^5 shrinks the stable step
    // until the step budget runs out well before r_max
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_G;
    c.g_family = GFamily::polynomial;
    c.g_coeffs = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0};
    try {
        solve_sigma(spec(c), 25.0, 1e-10);
        FAIL("expected StepUnderflow");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::step_underflow);
        CHECK(std::string(e.what()).find("r = ") != std::string::npos);
    }
}

TEST_CASE("warping grid fields are well-formed") {
    WarpingFunction w = solve_sigma(spec(config_constant_G(1.0)), 4.0, 1e-10);
    const auto& g = w.grid();
    REQUIRE(g.size() >= 3);
    CHECK(g.front() == 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK(w.sigma_samples().front() == 0.0);
    CHECK(w.sigma_prime_samples().front() == 1.0);
}
