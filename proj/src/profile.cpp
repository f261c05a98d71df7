#include "warpspec/profile.hpp"

#include <algorithm>
#include <cmath>

namespace warpspec {

namespace {

// k*coth(k t) - 1/t without cancellation near 0
double coth_shape(double k, double t) {
    double x = k * t;
    if (std::abs(x) < 0.1) {
        double x2 = x * x;
        // series of coth(x) - 1/x, multiplied by k
        return k * (x / 3.0 - x * x2 / 45.0 + 2.0 * x2 * x2 * x / 945.0);
    }
    return k / std::tanh(x) - 1.0 / t;
}

}  // namespace

double ProfileSpec::table_r_max() const {
    return g_table_ ? g_table_->x_max() : kInf;
}

double ProfileSpec::eval_G(double t) const {
    t = std::abs(t);
    if (!std::isfinite(t)) fail(Errc::invalid_argument, "eval_G: t must be finite");
    switch (kind_) {
        case ProfileKind::closed_form_G:
            return g_family_ == GFamily::constant ? g_constant_ : g_poly_(t);
        case ProfileKind::tabulated_G:
            if (t > g_table_->x_max() && !extrapolate_)
                fail(Errc::eval_outside_table,
                     "eval_G: |t| beyond last knot and extrapolation disabled");
            return (*g_table_)(t);
        case ProfileKind::closed_form_sigma:
            switch (sigma_family_) {
                case SigmaFamily::euclidean: return 0.0;
                case SigmaFamily::hyperbolic: return k_ * k_;
                case SigmaFamily::poly_exp: return sig2_num_(t) / sig2_den_(t);
            }
    }
    return 0.0;
}

double ProfileSpec::sigma(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return t;
        case SigmaFamily::hyperbolic: return std::sinh(k_ * t) / k_;
        case SigmaFamily::poly_exp: return p_(t) * std::exp(q_(t));
    }
    return t;
}

double ProfileSpec::sigma_prime(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return 1.0;
        case SigmaFamily::hyperbolic: return std::cosh(k_ * t);
        case SigmaFamily::poly_exp: return (p1_(t) + p_(t) * q1_(t)) * std::exp(q_(t));
    }
    return 1.0;
}

double ProfileSpec::sigma_second(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return 0.0;
        case SigmaFamily::hyperbolic: return k_ * std::sinh(k_ * t);
        case SigmaFamily::poly_exp: {
            double w = p2_(t) + 2.0 * p1_(t) * q1_(t) + p_(t) * (sqr(q1_(t)) + q2_(t));
            return w * std::exp(q_(t));
        }
    }
    return 0.0;
}

double ProfileSpec::log_sigma(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return std::log(t);
        case SigmaFamily::hyperbolic: {
            double x = k_ * t;
            if (x > 20.0) return x - std::log(2.0 * k_) + std::log1p(-std::exp(-2.0 * x));
            return std::log(std::sinh(x) / k_);
        }
        case SigmaFamily::poly_exp:
            // log(t * (P/t)) + Q, stable for small t
            return std::log(t) + std::log(ps_(t)) + q_(t);
    }
    return std::log(t);
}

double ProfileSpec::v(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return 1.0 / t;
        case SigmaFamily::hyperbolic: {
            double x = k_ * t;
            if (std::abs(x) < 1e-8) return 1.0 / t + k_ * k_ * t / 3.0;
            return k_ / std::tanh(x);
        }
        case SigmaFamily::poly_exp: return p1_(t) / (t * ps_(t)) + q1_(t);
    }
    return 1.0 / t;
}

double ProfileSpec::drift_shape(double t) const {
    switch (sigma_family_) {
        case SigmaFamily::euclidean: return 0.0;
        case SigmaFamily::hyperbolic: return coth_shape(k_, t);
        case SigmaFamily::poly_exp: return drift_num_(t) / ps_(t) + q1_(t);
    }
    return 0.0;
}

std::array<double, 3> ProfileSpec::g_even_taylor() const {
    double g0 = eval_G(0.0);
    double h = 0.02;
    if (kind_ == ProfileKind::tabulated_G) h = std::min(h, 0.25 * table_r_max());
    double a = eval_G(h) - g0;
    double b = eval_G(2.0 * h) - g0;
    double g2 = (16.0 * a - b) / (12.0 * h * h);
    double g4 = (b - 4.0 * a) / (12.0 * h * h * h * h);
    return {g0, g2, g4};
}

ProfileSpec make_profile(const ProfileConfig& cfg) {
    ProfileSpec p;
    p.kind_ = cfg.kind;
    p.m_ = cfg.m;
    p.l_ = cfg.l;
    p.r_phi_ = cfg.r_phi;

    if (cfg.m < 2) fail(Errc::dimension_mismatch, "m must be >= 2");
    if (cfg.l < 0) fail(Errc::dimension_mismatch, "l must be >= 0");
    if (cfg.l > 0 && cfg.m - cfg.l < 1)
        fail(Errc::dimension_mismatch, "product reduction requires m >= l + 1");
    if (!(cfg.r_phi > 0.0)) fail(Errc::non_positive_radius, "r_phi must be positive");

    p.H_ = cfg.h_constant ? HEnvelope::constant(cfg.h0)
                          : HEnvelope::table(cfg.h_r, cfg.h_vals);
    p.tail_ = cfg.tail;
    if (cfg.tail.kind == TailMajorant::Kind::power) {
        if (!(cfg.tail.coeff >= 0.0) || !std::isfinite(cfg.tail.coeff) ||
            !std::isfinite(cfg.tail.exponent))
            fail(Errc::invalid_argument, "tail majorant parameters must be finite, C >= 0");
    }

    switch (cfg.kind) {
        case ProfileKind::closed_form_G: {
            p.g_family_ = cfg.g_family;
            if (cfg.g_family == GFamily::constant) {
                if (!std::isfinite(cfg.g_constant))
                    fail(Errc::invalid_argument, "constant G must be finite");
                p.g_constant_ = cfg.g_constant;
            } else {
                for (double c : cfg.g_coeffs)
                    if (!std::isfinite(c)) fail(Errc::invalid_argument, "G coefficients must be finite");
                p.g_poly_ = Poly(cfg.g_coeffs);
            }
            break;
        }
        case ProfileKind::closed_form_sigma: {
            p.sigma_family_ = cfg.sigma_family;
            if (cfg.sigma_family == SigmaFamily::hyperbolic) {
                if (!(cfg.k > 0.0) || !std::isfinite(cfg.k))
                    fail(Errc::invalid_argument, "hyperbolic preset needs k > 0");
                p.k_ = cfg.k;
            } else if (cfg.sigma_family == SigmaFamily::poly_exp) {
                for (double c : cfg.p_coeffs)
                    if (!std::isfinite(c)) fail(Errc::invalid_argument, "P coefficients must be finite");
                for (double c : cfg.q_coeffs)
                    if (!std::isfinite(c)) fail(Errc::invalid_argument, "Q coefficients must be finite");
                Poly P(std::vector<double>(cfg.p_coeffs));
                Poly Q(std::vector<double>(cfg.q_coeffs));
                if (P.constant_term() != 0.0)
                    fail(Errc::invalid_argument, "poly_exp preset needs P(0) = 0");
                Poly P1 = P.derivative();
                if (P1.constant_term() != 1.0)
                    fail(Errc::invalid_argument, "poly_exp preset needs P'(0) = 1");
                if (Q.constant_term() != 0.0)
                    fail(Errc::invalid_argument, "poly_exp preset needs Q(0) = 0");
                Poly P2 = P1.derivative();
                Poly Q1 = Q.derivative();
                Poly Q2 = Q1.derivative();
                if (P2.constant_term() + 2.0 * Q1.constant_term() != 0.0)
                    fail(Errc::invalid_argument,
                         "poly_exp preset needs P''(0) + 2 Q'(0) = 0 (smooth curvature at the pole)");
                // sigma''/sigma = W/P with W(0) = 0; store both with the common
                // factor t divided out so the quotient is regular at 0.
                Poly W = P2 + (P1 * Q1) + (P1 * Q1) + P * (Q1 * Q1 + Q2);
                p.sig2_num_ = W.shifted_down();
                p.sig2_den_ = P.shifted_down();
                p.ps_ = P.shifted_down();
                p.drift_num_ = (P1 - p.ps_).shifted_down();
                p.p_ = P;
                p.p1_ = P1;
                p.p2_ = P2;
                p.q_ = Q;
                p.q1_ = Q1;
                p.q2_ = Q2;
            }
            break;
        }
        case ProfileKind::tabulated_G: {
            if (cfg.knots.empty() || cfg.knots.front() != 0.0)
                fail(Errc::invalid_argument, "tabulated G must start at t = 0");
            p.g_table_ = MonotoneInterp(cfg.knots, cfg.values, cfg.interp_order);
            p.extrapolate_ = cfg.extrapolate;
            p.table_r_max_ = cfg.knots.back();
            break;
        }
    }
    return p;
}

ProfileConfig config_euclidean(int m, double r_phi, double h0) {
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_sigma;
    c.sigma_family = SigmaFamily::euclidean;
    c.m = m;
    c.r_phi = r_phi;
    c.h0 = h0;
    return c;
}

ProfileConfig config_hyperbolic(double k, int m, double r_phi, double h0) {
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_sigma;
    c.sigma_family = SigmaFamily::hyperbolic;
    c.k = k;
    c.m = m;
    c.r_phi = r_phi;
    c.h0 = h0;
    return c;
}

ProfileConfig config_constant_G(double g0, int m, double r_phi, double h0) {
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_G;
    c.g_family = GFamily::constant;
    c.g_constant = g0;
    c.m = m;
    c.r_phi = r_phi;
    c.h0 = h0;
    return c;
}

ProfileConfig config_poly_exp_example(int m, double r_phi, double h0) {
    ProfileConfig c;
    c.kind = ProfileKind::closed_form_sigma;
    c.sigma_family = SigmaFamily::poly_exp;
    c.p_coeffs = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.5};  // t + t^7/2
    c.q_coeffs = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0 / 6.0};  // t^6/6
    c.m = m;
    c.r_phi = r_phi;
    c.h0 = h0;
    return c;
}

KneserResult kneser_check(const ProfileSpec& p, double t_max) {
    if (!(t_max > 0.0) || !std::isfinite(t_max))
        fail(Errc::invalid_argument, "kneser_check: t_max must be positive and finite");
    if (p.kind() == ProfileKind::tabulated_G) t_max = std::min(t_max, p.table_r_max());

    auto g_minus = [&](double t) { return std::max(-p.eval_G(t), 0.0); };

    KneserResult res;

    // Tail contribution Int_{t_max}^inf G_- under the declared majorant, plus
    // the supremum of t * tail(t) over t > t_max.
    const TailMajorant& maj = p.tail_majorant();
    double tail_at_tmax = 0.0;
    double beyond_sup = 0.0, beyond_arg = t_max;
    if (maj.kind == TailMajorant::Kind::power) {
        if (maj.exponent <= 1.0) {
            res.guaranteed = false;
            res.sup_product = kInf;
            res.reason = "TailUnbounded: declared majorant C*(s+shift)^-p with p <= 1 is not integrable";
            return res;
        }
        double pm1 = maj.exponent - 1.0;
        tail_at_tmax = maj.coeff * std::pow(t_max + maj.shift, -pm1) / pm1;
        if (maj.exponent < 2.0) {
            res.guaranteed = false;
            res.sup_product = kInf;
            res.reason =
                "TailUnbounded: t * tail integral grows without bound under majorant with p < 2";
            return res;
        }
        // p >= 2: t * C (t+shift)^{1-p}/(p-1) is nonincreasing for t >= t_max
        // (up to the shift, which only strengthens the decay), sup at t_max
        beyond_sup = t_max * tail_at_tmax;
        if (maj.exponent == 2.0) beyond_sup = std::max(beyond_sup, maj.coeff / pm1);
        beyond_arg = t_max;
    } else {
        // zero majorant: sanity-check the declaration at the window edge
        if (g_minus(t_max) > 1e-12 * (1.0 + std::abs(p.eval_G(t_max)))) {
            res.guaranteed = false;
            res.sup_product = kInf;
            res.arg_sup = t_max;
            res.reason =
                "TailUnbounded: G_- is positive at t_max but the declared tail majorant is zero; "
                "the tail integral cannot be bounded";
            return res;
        }
    }

    // suffix integrals of G_- on [0, t_max] over a fine grid
    const int n = 4096;
    std::vector<double> ts(n + 1), suffix(n + 1);
    for (int i = 0; i <= n; ++i) ts[i] = t_max * static_cast<double>(i) / n;
    suffix[n] = tail_at_tmax;
    for (int i = n; i-- > 0;)
        suffix[i] = suffix[i + 1] + gauss7(g_minus, ts[i], ts[i + 1]);

    auto tail_from = [&](double t) {
        auto it = std::upper_bound(ts.begin(), ts.end(), t);
        std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(it - ts.begin()),
                                              static_cast<std::size_t>(n));
        if (i == 0) i = 1;
        return suffix[i] + gauss7(g_minus, t, ts[i]);
    };
    auto product = [&](double t) { return t * tail_from(t); };

    double best = 0.0, best_t = 0.0;
    for (int i = 0; i <= n; ++i) {
        double v = ts[i] * suffix[i];
        if (v > best) {
            best = v;
            best_t = ts[i];
        }
    }
    if (best > 0.0) {
        double lo = std::max(0.0, best_t - 2.0 * t_max / n);
        double hi = std::min(t_max, best_t + 2.0 * t_max / n);
        double fneg;
        double arg = golden_min([&](double t) { return -product(t); }, lo, hi, 1e-10 * t_max, &fneg);
        if (-fneg > best) {
            best = -fneg;
            best_t = arg;
        }
    }
    if (beyond_sup > best) {
        best = beyond_sup;
        best_t = beyond_arg;
    }

    res.sup_product = best;
    res.arg_sup = best_t;
    // boundary profiles sit exactly at 1/4; the comparison tolerates the
    // quadrature resolution of sup_product
    res.guaranteed = best <= 0.25 * (1.0 + 1e-7);
    return res;
}

}  // namespace warpspec
