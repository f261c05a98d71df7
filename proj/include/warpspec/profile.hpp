#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "warpspec/common.hpp"
#include "warpspec/interp.hpp"

namespace warpspec {

enum class ProfileKind { closed_form_G, closed_form_sigma, tabulated_G };
enum class GFamily { constant, polynomial };
enum class SigmaFamily { euclidean, hyperbolic, poly_exp };

// Declared bound on G_- = max(-G, 0) beyond the analysis window: either
// "zero" (G eventually nonnegative) or a power envelope C * (s + shift)^-p.
struct TailMajorant {
    enum class Kind { zero, power };
    Kind kind = Kind::zero;
    double coeff = 0.0;
    double exponent = 0.0;
    double shift = 0.0;
};

// Nonnegative mean-curvature envelope |H|(r): a constant or a clamped table.
class HEnvelope {
  public:
    HEnvelope() = default;
    static HEnvelope constant(double h0) {
        if (!(h0 >= 0.0)) fail(Errc::negative_h_envelope, "H envelope must be >= 0");
        HEnvelope e;
        e.h0_ = h0;
        return e;
    }
    static HEnvelope table(std::vector<double> r, std::vector<double> h) {
        for (double v : h)
            if (!(v >= 0.0)) fail(Errc::negative_h_envelope, "H envelope must be >= 0");
        HEnvelope e;
        e.interp_ = MonotoneInterp(std::move(r), std::move(h), 3);
        e.constant_ = false;
        return e;
    }
    bool is_constant() const { return constant_; }
    double constant_value() const { return h0_; }
    double operator()(double r) const { return constant_ ? h0_ : (*interp_)(r); }
    bool is_zero() const { return constant_ && h0_ == 0.0; }

  private:
    bool constant_ = true;
    double h0_ = 0.0;
    std::optional<MonotoneInterp> interp_;
};

struct ProfileConfig {
    ProfileKind kind = ProfileKind::closed_form_G;

    // closed_form_G
    GFamily g_family = GFamily::constant;
    double g_constant = 0.0;
    std::vector<double> g_coeffs;

    // closed_form_sigma
    SigmaFamily sigma_family = SigmaFamily::euclidean;
    double k = 1.0;                        // hyperbolic: sigma = sinh(k t)/k
    std::vector<double> p_coeffs, q_coeffs;  // poly_exp: sigma = P(t) exp(Q(t))

    // tabulated_G
    std::vector<double> knots, values;
    int interp_order = 3;
    bool extrapolate = false;
    TailMajorant tail;

    int m = 2;
    int l = 0;
    double r_phi = kInf;

    bool h_constant = true;
    double h0 = 0.0;
    std::vector<double> h_r, h_vals;
};

// Validated curvature input. Immutable; all evaluators are pure.
class ProfileSpec {
  public:
    ProfileKind kind() const { return kind_; }
    SigmaFamily sigma_family() const { return sigma_family_; }
    GFamily g_family() const { return g_family_; }
    int m() const { return m_; }
    int l() const { return l_; }
    double r_phi() const { return r_phi_; }
    bool r_phi_infinite() const { return r_phi_ == kInf; }
    const HEnvelope& H() const { return H_; }
    const TailMajorant& tail_majorant() const { return tail_; }
    double table_r_max() const;  // +inf for closed forms

    // G(|t|); for closed-form sigma this is sigma''/sigma from the exact
    // derivative expressions (removable singularity at 0 handled by the
    // shifted-polynomial quotient).
    double eval_G(double t) const;

    bool has_closed_sigma() const { return kind_ == ProfileKind::closed_form_sigma; }
    double sigma(double t) const;
    double sigma_prime(double t) const;
    double sigma_second(double t) const;
    double log_sigma(double t) const;
    double v(double t) const;            // sigma'/sigma
    double drift_shape(double t) const;  // sigma'/sigma - 1/t, smooth at 0

    // even Taylor data g0, g2, g4 of G at 0 (numeric fit; feeds series heads)
    std::array<double, 3> g_even_taylor() const;

    friend ProfileSpec make_profile(const ProfileConfig&);

  private:
    ProfileKind kind_ = ProfileKind::closed_form_G;
    GFamily g_family_ = GFamily::constant;
    SigmaFamily sigma_family_ = SigmaFamily::euclidean;

    double g_constant_ = 0.0;
    Poly g_poly_;

    double k_ = 1.0;
    Poly p_, p1_, p2_;        // P, P', P''
    Poly q_, q1_, q2_;        // Q, Q', Q''
    Poly ps_;                 // P/t
    Poly sig2_num_, sig2_den_;  // shifted numerator/denominator of sigma''/sigma
    Poly drift_num_;          // shifted (P' - P/t)

    std::optional<MonotoneInterp> g_table_;
    bool extrapolate_ = false;
    double table_r_max_ = kInf;

    TailMajorant tail_;
    int m_ = 2, l_ = 0;
    double r_phi_ = kInf;
    HEnvelope H_;
};

ProfileSpec make_profile(const ProfileConfig& cfg);

// Convenience presets used across tests and tools.
ProfileConfig config_euclidean(int m = 2, double r_phi = kInf, double h0 = 0.0);
ProfileConfig config_hyperbolic(double k, int m = 2, double r_phi = kInf, double h0 = 0.0);
ProfileConfig config_constant_G(double g0, int m = 2, double r_phi = kInf, double h0 = 0.0);
// sigma = (t + t^7/2) exp(t^6/6)
ProfileConfig config_poly_exp_example(int m = 2, double r_phi = kInf, double h0 = 0.0);

struct KneserResult {
    bool guaranteed = false;
    double sup_product = 0.0;
    double arg_sup = 0.0;
    std::string reason;  // empty when the check ran cleanly
};

// Sufficient condition for sigma' >= 0: sup_t t * Int_t^inf G_-(s) ds <= 1/4.
// The tail beyond t_max comes from the declared majorant; failure of the
// condition proves nothing (it is sufficient only).
KneserResult kneser_check(const ProfileSpec& p, double t_max);

}  // namespace warpspec
