#include "warpspec/warping.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace warpspec {

namespace {

// Dormand–Prince 5(4) coefficients
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

constexpr double kSigmaSwitch = 1e250;  // hand over to (log sigma, sigma'/sigma)
constexpr double kMaxSteps = 5e6;

using Vec2 = std::array<double, 2>;

struct Rhs {
    const ProfileSpec* p;
    bool logform;
    Vec2 operator()(double t, const Vec2& y) const {
        double G = p->eval_G(t);
        if (!logform) return {y[1], G * y[0]};
        return {y[1], G - y[1] * y[1]};
    }
};

DenseStep make_dense(double t, double h, bool logform, const Vec2& y0, const Vec2& y1,
                     const Vec2& k1, const Vec2& k3, const Vec2& k4, const Vec2& k5,
                     const Vec2& k6, const Vec2& k7) {
    DenseStep s;
    s.t0 = t;
    s.h = h;
    s.logform = logform;
    s.y0 = y0;
    s.y1 = y1;
    for (int c = 0; c < 2; ++c) {
        double ydiff = y1[c] - y0[c];
        double bspl = h * k1[c] - ydiff;
        s.rc[0][c] = y0[c];
        s.rc[1][c] = ydiff;
        s.rc[2][c] = bspl;
        s.rc[3][c] = ydiff - h * k7[c] - bspl;
        s.rc[4][c] =
            h * (d1 * k1[c] + d3 * k3[c] + d4 * k4[c] + d5 * k5[c] + d6 * k6[c] + d7 * k7[c]);
    }
    return s;
}

SeriesHead build_series(const ProfileSpec& p, double r_max, double tol) {
    auto [g0, g2, g4] = p.g_even_taylor();
    SeriesHead s;
    s.c3 = g0 / 6.0;
    s.c5 = (g2 + g0 * s.c3) / 20.0;
    s.c7 = (g4 + g2 * s.c3 + g0 * s.c5) / 42.0;
    double c9 = (g0 * s.c7 + g2 * s.c5 + g4 * s.c3) / 72.0;  // first omitted term estimate
    double t0 = std::pow(tol / std::max(std::abs(c9), 1e-30), 1.0 / 8.0);
    s.t0 = std::clamp(t0, 1e-3, 0.05);
    s.t0 = std::min(s.t0, 0.5 * r_max);
    return s;
}

}  // namespace

const DenseStep& WarpingFunction::step_at(double r) const {
    // first step with t0 <= r < t1; clamp to the ends
    auto it = std::upper_bound(steps_.begin(), steps_.end(), r,
                               [](double x, const DenseStep& s) { return x < s.t0; });
    if (it == steps_.begin()) return steps_.front();
    return *(it - 1);
}

double WarpingFunction::sigma(double r) const {
    if (r <= 0.0) return 0.0;
    if (closed_form_) return profile_->sigma(r);
    if (r <= series_.t0) return series_.sigma(r);
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    if (!s.logform) return s.eval(0, th);
    return std::exp(s.eval(0, th));
}

double WarpingFunction::sigma_prime(double r) const {
    if (r <= 0.0) return 1.0;
    if (closed_form_) return profile_->sigma_prime(r);
    if (r <= series_.t0) return series_.sigma_prime(r);
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    if (!s.logform) return s.eval(1, th);
    return s.eval(1, th) * std::exp(s.eval(0, th));
}

double WarpingFunction::log_sigma(double r) const {
    if (r <= 0.0) return -kInf;
    if (closed_form_) return profile_->log_sigma(r);
    if (r <= series_.t0) return series_.log_sigma(r);
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    if (!s.logform) return std::log(s.eval(0, th));
    return s.eval(0, th);
}

double WarpingFunction::v(double r) const {
    if (r <= 0.0) return kInf;
    if (closed_form_) return profile_->v(r);
    if (r <= series_.t0) return series_.v(r);
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    if (!s.logform) return s.eval(1, th) / s.eval(0, th);
    return s.eval(1, th);
}

double WarpingFunction::drift_shape(double r) const {
    if (r <= 0.0) return 0.0;
    if (closed_form_) return profile_->drift_shape(r);
    if (r <= series_.t0) return series_.drift_shape(r);
    return v(r) - 1.0 / r;
}

double WarpingFunction::sigma_second_dense(double r) const {
    if (closed_form_) return profile_->sigma_second(r);
    if (r <= series_.t0) {
        double t2 = r * r;
        return r * (6.0 * series_.c3 + t2 * (20.0 * series_.c5 + t2 * 42.0 * series_.c7));
    }
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    if (!s.logform) return s.eval_deriv(1, th);
    double u = s.eval(0, th), vv = s.eval(1, th);
    return std::exp(u) * (s.eval_deriv(1, th) + vv * vv);
}

double WarpingFunction::defect(double r) const {
    double G = profile_->eval_G(r);
    if (closed_form_ || r <= series_.t0 || !step_at(r).logform) {
        double gs = G * sigma(r);
        return std::abs(sigma_second_dense(r) - gs) / (1.0 + std::abs(gs));
    }
    // log form: sigma''/sigma - G = v' + v^2 - G
    const DenseStep& s = step_at(r);
    double th = (r - s.t0) / s.h;
    double vv = s.eval(1, th);
    return std::abs(s.eval_deriv(1, th) + vv * vv - G) / (1.0 + std::abs(G));
}

void WarpingFunction::dump_csv(std::ostream& os) const {
    os << "r,sigma,sigma_prime,log_sigma,sigma_prime_over_sigma\n";
    char buf[256];
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        double r = grid_[i];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r, sigma_s_[i],
                      sigma_prime_s_[i], r > 0 ? log_sigma(r) : -kInf, r > 0 ? v(r) : kInf);
        os << buf;
    }
}

WarpingFunction solve_sigma(std::shared_ptr<const ProfileSpec> p, double r_max, double tol) {
    if (!p) fail(Errc::invalid_argument, "solve_sigma: null profile");
    if (!(r_max > 0.0) || !std::isfinite(r_max))
        fail(Errc::non_positive_radius, "solve_sigma: r_max must be positive and finite");
    if (!(tol >= 1e-13 && tol <= 1e-3))
        fail(Errc::invalid_argument, "solve_sigma: tol must lie in [1e-13, 1e-3]");
    if (p->kind() == ProfileKind::tabulated_G && r_max > p->table_r_max() &&
        true /* extrapolation checked inside eval_G */) {
        // eval_G throws EvalOutsideTable if extrapolation is disabled; probe once here
        p->eval_G(r_max);
    }

    WarpingFunction w;
    w.profile_ = p;
    w.tol_ = tol;
    w.series_ = build_series(*p, r_max, tol);

    if (p->has_closed_sigma()) {
        w.closed_form_ = true;
        w.r_max_ = r_max;
        // positivity scan; the closed form can still vanish
        const int n = 4096;
        double prev_t = 0.0, prev_s = 0.0;
        for (int i = 1; i <= n; ++i) {
            double t = r_max * static_cast<double>(i) / n;
            double s = p->sigma(t);
            if (s <= 0.0) {
                double lo = prev_t, hi = t;
                for (int it = 0; it < 200 && hi - lo > 1e-15 * r_max; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (p->sigma(mid) > 0.0 ? lo : hi) = mid;
                }
                w.truncated_at_ = 0.5 * (lo + hi);
                w.r_max_ = *w.truncated_at_;
                break;
            }
            prev_t = t;
            prev_s = s;
        }
        (void)prev_s;
        int gn = 512;
        w.grid_.push_back(0.0);
        w.sigma_s_.push_back(0.0);
        w.sigma_prime_s_.push_back(1.0);
        for (int i = 1; i <= gn; ++i) {
            double t = w.r_max_ * static_cast<double>(i) / gn;
            w.grid_.push_back(t);
            w.sigma_s_.push_back(p->sigma(t));
            w.sigma_prime_s_.push_back(p->sigma_prime(t));
        }
        double md = 0.0;
        for (int i = 1; i <= gn; ++i) {
            double t = w.r_max_ * (static_cast<double>(i) - 0.5) / gn;
            md = std::max(md, w.defect(t));
        }
        w.max_defect_ = md;
        return w;
    }

    // numeric integration from the series handover point. The defect contract
    // is checked on the dense-output derivative, which loses ~3 digits over
    // the raw local error, hence the large headroom.
    const double rtol = std::max(tol * 3e-4, 5e-15);
    double t = w.series_.t0;
    Vec2 y{w.series_.sigma(t), w.series_.sigma_prime(t)};
    bool logform = false;
    Rhs rhs{p.get(), false};

    w.grid_.push_back(0.0);
    w.sigma_s_.push_back(0.0);
    w.sigma_prime_s_.push_back(1.0);
    w.grid_.push_back(t);
    w.sigma_s_.push_back(y[0]);
    w.sigma_prime_s_.push_back(y[1]);

    double h = std::min(1e-2, 0.1 * (r_max - t));
    Vec2 k1 = rhs(t, y);
    bool k1_valid = true;
    long nsteps = 0;

    auto scale = [&](const Vec2& y0, const Vec2& y1v) {
        double ynorm = std::max({std::abs(y0[0]), std::abs(y0[1]), 1e-3});
        Vec2 sc;
        for (int c = 0; c < 2; ++c)
            sc[c] = rtol * (0.01 * ynorm + std::max(std::abs(y0[c]), std::abs(y1v[c])));
        return sc;
    };

    while (t < r_max) {
        if (++nsteps > kMaxSteps)
            fail(Errc::step_underflow,
                 "solve_sigma: step budget exhausted near r = " + std::to_string(t) +
                     " (profile too stiff for the explicit integrator)");
        h = std::min(h, r_max - t);
        if (h < 1e-13 * std::max(1.0, std::abs(t)))
            fail(Errc::step_underflow,
                 "solve_sigma: step underflow; last good radius r = " + std::to_string(t));

        rhs.logform = logform;
        if (!k1_valid) {
            k1 = rhs(t, y);
            k1_valid = true;
        }
        Vec2 y2, y3, y4, y5, y6, y7;
        for (int c = 0; c < 2; ++c) y2[c] = y[c] + h * a21 * k1[c];
        Vec2 k2 = rhs(t + h / 5.0, y2);
        for (int c = 0; c < 2; ++c) y3[c] = y[c] + h * (a31 * k1[c] + a32 * k2[c]);
        Vec2 k3 = rhs(t + 3.0 * h / 10.0, y3);
        for (int c = 0; c < 2; ++c) y4[c] = y[c] + h * (a41 * k1[c] + a42 * k2[c] + a43 * k3[c]);
        Vec2 k4 = rhs(t + 4.0 * h / 5.0, y4);
        for (int c = 0; c < 2; ++c)
            y5[c] = y[c] + h * (a51 * k1[c] + a52 * k2[c] + a53 * k3[c] + a54 * k4[c]);
        Vec2 k5 = rhs(t + 8.0 * h / 9.0, y5);
        for (int c = 0; c < 2; ++c)
            y6[c] = y[c] + h * (a61 * k1[c] + a62 * k2[c] + a63 * k3[c] + a64 * k4[c] + a65 * k5[c]);
        Vec2 k6 = rhs(t + h, y6);
        for (int c = 0; c < 2; ++c)
            y7[c] = y[c] + h * (b1 * k1[c] + b3 * k3[c] + b4 * k4[c] + b5 * k5[c] + b6 * k6[c]);
        Vec2 k7 = rhs(t + h, y7);

        Vec2 sc = scale(y, y7);
        double err = 0.0;
        for (int c = 0; c < 2; ++c) {
            double e = h * (e1 * k1[c] + e3 * k3[c] + e4 * k4[c] + e5 * k5[c] + e6 * k6[c] +
                            e7 * k7[c]);
            err += sqr(e / sc[c]);
        }
        err = std::sqrt(0.5 * err);
        if (!std::isfinite(err)) err = 1e10;

        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            continue;
        }

        DenseStep step = make_dense(t, h, logform, y, y7, k1, k3, k4, k5, k6, k7);

        if (!logform) {
            // did sigma hit zero inside this step?
            double bad_th = -1.0, good_th = 0.0;
            for (double th : {0.25, 0.5, 0.75, 1.0}) {
                if (step.eval(0, th) <= 0.0) {
                    bad_th = th;
                    break;
                }
                good_th = th;
            }
            if (bad_th > 0.0) {
                double lo = good_th, hi = bad_th;
                for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
                    double mid = 0.5 * (lo + hi);
                    (step.eval(0, mid) > 0.0 ? lo : hi) = mid;
                }
                double rstar = t + 0.5 * (lo + hi) * h;
                w.steps_.push_back(step);
                w.grid_.push_back(rstar);
                w.sigma_s_.push_back(std::max(step.eval(0, 0.5 * (lo + hi)), 0.0));
                w.sigma_prime_s_.push_back(step.eval(1, 0.5 * (lo + hi)));
                w.truncated_at_ = rstar;
                w.r_max_ = rstar;
                break;
            }
        }

        w.steps_.push_back(step);
        t += h;
        y = y7;
        k1 = k7;  // FSAL

        if (!logform && y[0] > kSigmaSwitch) {
            logform = true;
            y = {std::log(y[0]), y[1] / y[0]};
            k1_valid = false;
        }

        w.grid_.push_back(t);
        if (!logform) {
            w.sigma_s_.push_back(y[0]);
            w.sigma_prime_s_.push_back(y[1]);
        } else {
            double sig = std::exp(y[0]);  // may overflow to inf; log form remains exact
            w.sigma_s_.push_back(sig);
            w.sigma_prime_s_.push_back(y[1] * sig);
        }

        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
    }

    if (!w.truncated_at_) w.r_max_ = r_max;

    double md = 0.0;
    for (const DenseStep& s : w.steps_) md = std::max(md, w.defect(s.t0 + 0.5 * s.h));
    w.max_defect_ = md;
    return w;
}

PositivityReport check_positivity_monotonicity(const WarpingFunction& w, double R) {
    if (!(R > 0.0)) fail(Errc::invalid_argument, "check_positivity_monotonicity: R must be > 0");
    if (R > w.r_max() * (1.0 + 1e-12))
        fail(Errc::invalid_argument, "check_positivity_monotonicity: R exceeds r_max");
    R = std::min(R, w.r_max());
    const double tol = w.tol();

    PositivityReport rep;
    auto note_violation = [&](double r) {
        if (!rep.first_violation || r < *rep.first_violation) rep.first_violation = r;
    };

    if (w.truncated_at() && *w.truncated_at() <= R) {
        rep.sigma_positive = false;
        note_violation(*w.truncated_at());
    }

    // sigma' sign scan on a dense sample; refine the first crossing
    const int n = 4096;
    double prev_r = 0.0;
    bool prev_ok = true;
    for (int i = 1; i <= n; ++i) {
        double r = R * static_cast<double>(i) / n;
        double sp = w.sigma_prime(r);
        bool ok = sp >= -tol * (1.0 + std::abs(sp));
        if (!ok && prev_ok && rep.sigma_prime_nonneg) {
            double lo = prev_r, hi = r;
            for (int it = 0; it < 100 && hi - lo > 1e-12 * R; ++it) {
                double mid = 0.5 * (lo + hi);
                (w.sigma_prime(mid) >= 0.0 ? lo : hi) = mid;
            }
            rep.sigma_prime_nonneg = false;
            note_violation(0.5 * (lo + hi));
        }
        if (rep.sigma_positive && w.sigma(r) <= -tol) {
            rep.sigma_positive = false;
            note_violation(r);
        }
        prev_r = r;
        prev_ok = ok;
    }
    return rep;
}

}  // namespace warpspec
