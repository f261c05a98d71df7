#include "warpspec/ratios.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace warpspec {

namespace {

struct PsiEval {
    const WarpingFunction* w;
    double p;  // d - 1
    double psi(double t) const { return p * w->log_sigma(t); }
    double dpsi(double t) const { return p * w->v(t); }
};

// Solve psi(t) = target on [lo, hi]. Newton with a bisection bracket; sign is
// +1 when psi increases on the cell, -1 when it decreases. The warm start
// comes from the previous quadrature node.
double invert_psi(const PsiEval& ev, double lo, double hi, double target, double guess,
                  double sign) {
    double t = std::clamp(guess, lo, hi);
    for (int it = 0; it < 100; ++it) {
        double f = ev.psi(t) - target;
        if (std::abs(f) <= 1e-10 + 4e-16 * std::abs(target)) return t;
        if (sign * f > 0.0)
            hi = t;
        else
            lo = t;
        double d = ev.dpsi(t);
        double tn = (std::abs(d) > 0.0) ? t - f / d : 0.5 * (lo + hi);
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::abs(tn - t) < 4e-16 * std::max(1.0, std::abs(t))) return tn;
        t = tn;
    }
    return t;
}

// log of Int_a^b exp(psi) dt when psi rises by more than ~2 across the cell
// and psi' > 0: substitute tau = psi(b) - psi(t). The integrand collapses to
// exp(-tau)/psi'(t(tau)) whose support is O(1) in tau no matter how steep the
// growth, so the cost per cell stays bounded.
double log_int_steep_right(const PsiEval& ev, double a, double b, double psi_b, double dpsi_total) {
    double T = std::min(dpsi_total, 45.0);  // exp(-45) is far below every tolerance here
    int nchunks = static_cast<int>(std::ceil(T / 2.0));
    double total = 0.0;
    double guess = b;
    for (int c = 0; c < nchunks; ++c) {
        double tau0 = T * c / nchunks, tau1 = T * (c + 1) / nchunks;
        double mid = 0.5 * (tau0 + tau1), half = 0.5 * (tau1 - tau0);
        for (int i = 0; i < Gauss7::n; ++i) {
            double tau = mid + half * Gauss7::x[i];
            double t = invert_psi(ev, a, b, psi_b - tau, guess, +1.0);
            guess = t;
            total += half * Gauss7::w[i] * std::exp(-tau) / ev.dpsi(t);
        }
    }
    return psi_b + std::log(total);
}

// mirror image: psi falls steeply, anchor at the left end
double log_int_steep_left(const PsiEval& ev, double a, double b, double psi_a, double dpsi_total) {
    double T = std::min(dpsi_total, 45.0);
    int nchunks = static_cast<int>(std::ceil(T / 2.0));
    double total = 0.0;
    double guess = a;
    for (int c = 0; c < nchunks; ++c) {
        double tau0 = T * c / nchunks, tau1 = T * (c + 1) / nchunks;
        double mid = 0.5 * (tau0 + tau1), half = 0.5 * (tau1 - tau0);
        for (int i = 0; i < Gauss7::n; ++i) {
            double tau = mid + half * Gauss7::x[i];
            double t = invert_psi(ev, a, b, psi_a - tau, guess, -1.0);
            guess = t;
            total += half * Gauss7::w[i] * std::exp(-tau) / (-ev.dpsi(t));
        }
    }
    return psi_a + std::log(total);
}

double log_int_cell(const PsiEval& ev, double a, double b, int depth = 0) {
    if (!(b > a)) return -kInf;
    double psi_a = ev.psi(a), psi_b = ev.psi(b);
    double rise = psi_b - psi_a;
    if (std::abs(rise) <= 2.0 || (b - a) < 4e-16 * std::max(1.0, std::abs(b)) || depth >= 48) {
        double m = std::max(psi_a, psi_b);
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double s = 0.0;
        for (int i = 0; i < Gauss7::n; ++i)
            s += Gauss7::w[i] * std::exp(ev.psi(c + h * Gauss7::x[i]) - m);
        return m + std::log(s * h);
    }
    if (rise > 0.0 && ev.dpsi(a) > 0.0 && ev.dpsi(b) > 0.0)
        return log_int_steep_right(ev, a, b, psi_b, rise);
    if (rise < 0.0 && ev.dpsi(a) < 0.0 && ev.dpsi(b) < 0.0)
        return log_int_steep_left(ev, a, b, psi_a, -rise);
    double mid = 0.5 * (a + b);
    return log_add_exp(log_int_cell(ev, a, mid, depth + 1), log_int_cell(ev, mid, b, depth + 1));
}

}  // namespace

double RatioTable::series_log_V(double r) const {
    // V = r^d/d * (1 + d e2 r^2/(d+2) + d e4 r^4/(d+4) + d e6 r^6/(d+6))
    double d = static_cast<double>(d_);
    double r2 = r * r;
    double bracket =
        1.0 + d * r2 * (e2_ / (d + 2.0) + r2 * (e4_ / (d + 4.0) + r2 * e6_ / (d + 6.0)));
    return d * std::log(r) - std::log(d) + std::log(bracket);
}

double RatioTable::series_inv_I(double r) const {
    if (r <= 0.0) return 0.0;
    double d = static_cast<double>(d_);
    double r2 = r * r;
    double bracket =
        1.0 + d * r2 * (e2_ / (d + 2.0) + r2 * (e4_ / (d + 4.0) + r2 * e6_ / (d + 6.0)));
    double s = w_->series().shape(r);
    return r * bracket / (d * std::pow(s, d - 1.0));
}

std::size_t RatioTable::cell_of(double r) const {
    auto it = std::upper_bound(grid_.begin(), grid_.end(), r);
    std::size_t i = static_cast<std::size_t>(it - grid_.begin());
    if (i == 0) return 0;
    if (i >= grid_.size()) return grid_.size() - 2;
    return i - 1;
}

double RatioTable::log_V(double r) const {
    if (r <= 0.0) return -kInf;
    if (r <= t0_) return series_log_V(r);
    std::size_t k = cell_of(r);
    if (r == grid_[k]) return logV_[k];
    PsiEval ev{w_.get(), static_cast<double>(d_ - 1)};
    return log_add_exp(logV_[k], log_int_cell(ev, grid_[k], r));
}

double RatioTable::V(double r) const { return std::exp(log_V(r)); }

double RatioTable::log_I(double r) const {
    if (r <= 0.0) return kInf;
    return (d_ - 1) * w_->log_sigma(r) - log_V(r);
}

double RatioTable::I(double r) const {
    if (r <= 0.0) return kInf;
    if (r <= t0_) return 1.0 / series_inv_I(r);
    return std::exp(log_I(r));
}

double RatioTable::script_I(double r) const {
    if (r <= 0.0) return static_cast<double>(d_);  // limit value I(r)*sigma(r) -> d
    return I(r) * w_->sigma(r);
}

double RatioTable::inv_I(double r) const {
    if (r <= 0.0) return 0.0;
    if (r <= t0_) return series_inv_I(r);
    return std::exp(-log_I(r));
}

double RatioTable::inv_I_cum(double r) const {
    if (r <= 0.0) return 0.0;
    if (r <= t0_) return gauss7([this](double t) { return series_inv_I(t); }, 0.0, r);
    std::size_t k = cell_of(r);
    if (r == grid_[k]) return invIcum_[k];
    PsiEval ev{w_.get(), static_cast<double>(d_ - 1)};
    double acc = 0.0;
    double c = 0.5 * (grid_[k] + r), h = 0.5 * (r - grid_[k]);
    double prev_t = grid_[k];
    double logpart = -kInf;
    for (int i = 0; i < Gauss7::n; ++i) {
        double t = c + h * Gauss7::x[i];
        logpart = log_add_exp(logpart, log_int_cell(ev, prev_t, t));
        prev_t = t;
        double logv_t = log_add_exp(logV_[k], logpart);
        acc += Gauss7::w[i] * std::exp(logv_t - ev.psi(t));
    }
    return invIcum_[k] + acc * h;
}

void RatioTable::dump_csv(std::ostream& os) const {
    os << "r,sigma,sigma_prime_over_sigma,V_or_logV,I,script_I,inv_I_cum\n";
    char buf[320];
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        double r = grid_[i];
        double vol = std::exp(logV_[i]);
        double vcol = std::isfinite(vol) ? vol : logV_[i];  // log V once V overflows
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r,
                      sigma_s_[i], v_s_[i], vcol, I_s_[i], scriptI_[i], invIcum_[i]);
        os << buf;
    }
}

RatioTable build_ratio_table(std::shared_ptr<const WarpingFunction> w, int d, double R, double tol,
                             Exec exec, int grid_points) {
    if (!w) fail(Errc::invalid_argument, "build_ratio_table: null warping function");
    if (d < 2) fail(Errc::dimension_mismatch, "build_ratio_table: effective dimension must be >= 2");
    if (!(R > 0.0)) fail(Errc::non_positive_radius, "build_ratio_table: R must be positive");
    if (w->truncated_at() && R >= *w->truncated_at())
        fail(Errc::sigma_not_positive,
             "build_ratio_table: sigma vanishes at r = " + std::to_string(*w->truncated_at()) +
                 " before R; restrict the window");
    if (R > w->r_max()) {
        // auto-extend: re-solve the warping function out to R
        w = std::make_shared<WarpingFunction>(solve_sigma(w->profile(), R, w->tol()));
        if (w->truncated_at() && R >= *w->truncated_at())
            fail(Errc::sigma_not_positive, "build_ratio_table: sigma vanishes before R");
    }

    RatioTable t;
    t.w_ = w;
    t.d_ = d;
    t.R_ = R;
    t.tol_ = tol;
    t.t0_ = std::min(w->series().t0, 0.5 * R);

    // V series coefficients from the sigma series head
    const SeriesHead& s = w->series();
    double p = static_cast<double>(d - 1);
    double b2 = p * (p - 1.0) / 2.0, b3 = p * (p - 1.0) * (p - 2.0) / 6.0;
    t.e2_ = p * s.c3;
    t.e4_ = p * s.c5 + b2 * s.c3 * s.c3;
    t.e6_ = p * s.c7 + b2 * 2.0 * s.c3 * s.c5 + b3 * s.c3 * s.c3 * s.c3;

    // grid: log-spaced plus uniform overlay on [t0, R]
    int n_log = std::max(grid_points / 2, 100);
    int n_lin = std::max(grid_points / 2, 100);
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n_log + n_lin) + 2);
    nodes.push_back(t.t0_);
    double lr = std::log(R / t.t0_);
    for (int i = 1; i <= n_log; ++i) nodes.push_back(t.t0_ * std::exp(lr * i / n_log));
    for (int i = 1; i <= n_lin; ++i) nodes.push_back(t.t0_ + (R - t.t0_) * i / n_lin);
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end(),
                            [&](double a, double b) { return b - a < 1e-12 * R; }),
                nodes.end());
    if (nodes.back() < R) nodes.push_back(R);
    nodes.back() = R;

    std::size_t n = nodes.size();
    t.grid_.assign(1, 0.0);
    t.grid_.insert(t.grid_.end(), nodes.begin(), nodes.end());

    PsiEval ev{w.get(), p};

    // per-cell log integrals of sigma^{d-1} (independent, data-parallel)
    std::vector<double> cell_log(n - 1);
    const bool par = exec == Exec::parallel;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) if (par)
#endif
    for (long i = 0; i < static_cast<long>(n - 1); ++i)
        cell_log[static_cast<std::size_t>(i)] =
            log_int_cell(ev, nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(i) + 1]);

    // prefix pass (serial; the chain is the definition of V)
    std::vector<double> logV(n);
    logV[0] = t.series_log_V(t.t0_);
    for (std::size_t i = 1; i < n; ++i) logV[i] = log_add_exp(logV[i - 1], cell_log[i - 1]);

    // per-cell integrals of I^{-1} (independent once logV is known)
    std::vector<double> cellJ(n - 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16) if (par)
#endif
    for (long ci = 0; ci < static_cast<long>(n - 1); ++ci) {
        std::size_t i = static_cast<std::size_t>(ci);
        double a = nodes[i], b = nodes[i + 1];
        double c = 0.5 * (a + b), h = 0.5 * (b - a);
        double prev_t = a, logpart = -kInf, acc = 0.0;
        for (int g = 0; g < Gauss7::n; ++g) {
            double x = c + h * Gauss7::x[g];
            logpart = log_add_exp(logpart, log_int_cell(ev, prev_t, x));
            prev_t = x;
            acc += Gauss7::w[g] * std::exp(log_add_exp(logV[i], logpart) - ev.psi(x));
        }
        cellJ[i] = acc * h;
    }

    double j_head = gauss7([&t](double x) { return t.series_inv_I(x); }, 0.0, t.t0_);

    // assemble samples
    std::size_t total = n + 1;
    t.logV_.resize(total);
    t.I_s_.resize(total);
    t.logI_.resize(total);
    t.scriptI_.resize(total);
    t.invIcum_.resize(total);
    t.sigma_s_.resize(total);
    t.v_s_.resize(total);

    t.logV_[0] = -kInf;
    t.I_s_[0] = kInf;
    t.logI_[0] = kInf;
    t.scriptI_[0] = static_cast<double>(d);
    t.invIcum_[0] = 0.0;
    t.sigma_s_[0] = 0.0;
    t.v_s_[0] = kInf;

    double cum = j_head;
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t k = i + 1;
        double r = nodes[i];
        t.logV_[k] = logV[i];
        double li = ev.psi(r) - logV[i];
        t.logI_[k] = li;
        t.I_s_[k] = std::exp(li);
        t.sigma_s_[k] = w->sigma(r);
        t.v_s_[k] = w->v(r);
        t.scriptI_[k] = t.I_s_[k] * t.sigma_s_[k];
        if (i > 0) cum += cellJ[i - 1];
        t.invIcum_[k] = cum;
    }
    return t;
}

MonotoneReport check_script_I_monotone(const RatioTable& t, double R) {
    R = std::min(R, t.r_max());
    MonotoneReport rep;
    rep.margin_min = kInf;
    double d = static_cast<double>(t.dim());
    const WarpingFunction& w = t.warping();

    auto margin = [&](double r) { return d * w.v(r) * t.inv_I(r) - 1.0; };
    const double thresh = std::max(1e-8, 100.0 * t.tol());

    std::vector<double> pts;
    for (int i = 1; i <= 8; ++i) pts.push_back(t.t0() * i / 8.0);
    const auto& g = t.grid();
    for (std::size_t k = 1; k + 1 < g.size() && g[k] < R; ++k) {
        double a = g[k], b = std::min(g[k + 1], R);
        pts.push_back(a);
        pts.push_back(a + (b - a) / 3.0);
        pts.push_back(a + 2.0 * (b - a) / 3.0);
    }
    pts.push_back(R);

    double prev_ok_r = 0.0;
    for (double r : pts) {
        if (r <= 0.0 || r > R) continue;
        double m = margin(r);
        rep.margin_min = std::min(rep.margin_min, m);
        if (m < -thresh && rep.nondecreasing) {
            rep.nondecreasing = false;
            double lo = prev_ok_r, hi = r;
            for (int it = 0; it < 80 && hi - lo > 1e-9 * std::max(1.0, hi); ++it) {
                double mid = 0.5 * (lo + hi);
                (margin(mid) >= -thresh ? lo : hi) = mid;
            }
            rep.first_violation = hi;
        }
        if (m >= -thresh && rep.nondecreasing) prev_ok_r = r;
    }
    if (!std::isfinite(rep.margin_min)) rep.margin_min = 0.0;
    return rep;
}

InfIResult inf_I(const RatioTable& t, double R, bool r_phi_infinite) {
    R = std::min(R, t.r_max());
    const auto& g = t.grid();
    const auto& I = t.I_samples();

    std::size_t best = 1;
    double best_val = kInf;
    std::size_t last = 1;
    for (std::size_t k = 1; k < g.size() && g[k] <= R * (1.0 + 1e-15); ++k) {
        last = k;
        if (I[k] < best_val) {
            best_val = I[k];
            best = k;
        }
    }
    double rv = t.I(R);
    if (rv < best_val) {
        best_val = rv;
        best = last;
    }

    std::size_t lo_i = best >= 3 ? best - 2 : 1;
    std::size_t hi_i = std::min(best + 2, last);
    double lo = g[lo_i], hi = std::min(g[hi_i], R);
    double fmin;
    double arg = golden_min([&](double r) { return t.I(r); }, lo, hi, 1e-9 * std::max(1.0, hi), &fmin);
    if (fmin > best_val) {
        fmin = best_val;
        arg = g[best];
    }

    InfIResult res;
    res.value = fmin;
    res.argmin = arg;
    // limit-governed: the boundary value ties the global minimum (I keeps
    // decreasing, or is flat to rounding, all the way out to R)
    double boundary = t.I(R);
    res.limit_governed = r_phi_infinite && boundary <= fmin * (1.0 + 1e-9);
    if (res.limit_governed) {
        res.value = std::min(fmin, boundary);
        res.argmin = R;
    }

    const WarpingFunction& w = t.warping();
    double dm1 = static_cast<double>(t.dim() - 1);
    if (!r_phi_infinite) {
        res.analytic_floor = dm1 * w.v(R);
    } else if (res.limit_governed) {
        double v1 = w.v(R), v2 = w.v(0.9 * R);
        if (std::abs(v1 - v2) <= 1e-3 * std::max(std::abs(v1), 1e-300))
            res.analytic_floor = dm1 * v1;
    }
    if (!res.limit_governed && arg < R * (1.0 - 1e-9) && arg > g[1] * (1.0 + 1e-9)) {
        // at an interior stationary point the Riccati identity forces
        // I(r*) = (d-1) sigma'/sigma(r*); report the gap as a cross-check
        res.stationarity_gap = std::abs(fmin - dm1 * w.v(arg)) / fmin;
    }
    return res;
}

TailStatus integral_inv_I(const RatioTable& t, double r_phi, double classify_tol) {
    TailStatus st;
    if (std::isfinite(r_phi)) {
        double upto = std::min(r_phi, t.r_max());
        st.kind = TailKind::converged;
        st.value = t.inv_I_cum(upto);
        st.r_reached = upto;
        return st;
    }

    double R = t.r_max();
    std::vector<double> ends;
    for (double e = 2.0; e < R * (1.0 - 1e-12); e *= 2.0) ends.push_back(e);
    ends.push_back(R);
    if (ends.size() < 3) {
        st.kind = TailKind::inconclusive;
        st.r_reached = R;
        return st;
    }

    std::vector<double> c(ends.size());
    double prev = 0.0;
    for (std::size_t j = 0; j < ends.size(); ++j) {
        double cur = t.inv_I_cum(ends[j]);
        c[j] = cur - prev;
        prev = cur;
    }
    st.window_ends = ends;
    st.window_contributions = c;

    const auto& g = t.grid();
    const auto& I = t.I_samples();
    auto min_inv_I_on = [&](double a, double b) {
        double m = kInf;
        for (std::size_t k = 1; k < g.size(); ++k)
            if (g[k] > a && g[k] <= b) m = std::min(m, 1.0 / I[k]);
        return m;
    };

    for (std::size_t j = 2; j < ends.size(); ++j) {
        double r1 = c[j - 1] / std::max(c[j - 2], 1e-300);
        double r2 = c[j] / std::max(c[j - 1], 1e-300);
        double total = 0.0;
        for (std::size_t q = 0; q <= j; ++q) total += c[q];
        if (r1 <= 0.5 && r2 <= 0.5) {
            double rho = std::max(r2, 1e-6);
            double tail = c[j] * rho / (1.0 - rho);
            if (tail < classify_tol * total) {
                st.kind = TailKind::converged;
                st.value = total + tail;
                st.r_reached = ends[j];
                return st;
            }
        }
        if (c[j] >= 0.9 * c[j - 1]) {
            double witness = min_inv_I_on(ends[j - 2], ends[j]);
            if (witness > 0.0 && std::isfinite(witness)) {
                st.kind = TailKind::divergent;
                st.witness = witness;
                st.r_reached = ends[j];
                return st;
            }
        }
    }
    st.kind = TailKind::inconclusive;
    st.r_reached = R;
    return st;
}

double riccati_residual(const RatioTable& t, double r) {
    const double h = 1e-4;
    if (!(r - h > 0.0) || !(r + h <= t.r_max()))
        fail(Errc::invalid_argument, "riccati_residual: r must be interior to the table");
    double Ip = (t.I(r + h) - t.I(r - h)) / (2.0 * h);
    double Ir = t.I(r);
    return Ip + Ir * Ir - (t.dim() - 1) * t.warping().v(r) * Ir;
}

}  // namespace warpspec
