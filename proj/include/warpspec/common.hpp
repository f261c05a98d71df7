#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace warpspec {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Kernel execution policy. Serial is the reference path; parallel must be
// bit-identical to it (fixed work decomposition, deterministic reductions).
enum class Exec { serial, parallel };

// Error taxonomy surfaced by the CLI with module attribution.
enum class Errc {
    non_positive_radius,
    dimension_mismatch,
    non_monotone_table,
    negative_h_envelope,
    eval_outside_table,
    sigma_not_positive,
    step_underflow,
    drift_blowup,
    unknown_parameter,
    parse_error,
    invalid_argument,
};

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Errc code() const { return code_; }

  private:
    Errc code_;
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::non_positive_radius: return "NonPositiveRadius";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::non_monotone_table: return "NonMonotoneTable";
        case Errc::negative_h_envelope: return "NegativeHEnvelope";
        case Errc::eval_outside_table: return "EvalOutsideTable";
        case Errc::sigma_not_positive: return "SigmaNotPositive";
        case Errc::step_underflow: return "StepUnderflow";
        case Errc::drift_blowup: return "DriftBlowup";
        case Errc::unknown_parameter: return "UnknownParameter";
        case Errc::parse_error: return "ParseError";
        case Errc::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline double sqr(double x) { return x * x; }

// log(exp(a) + exp(b)) without overflow; tolerates -inf operands.
inline double log_add_exp(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double m = a > b ? a : b;
    return m + std::log1p(std::exp(-(std::abs(a - b))));
}

// 7-point Gauss–Legendre on [-1, 1]; exact through degree 13.
struct Gauss7 {
    static constexpr int n = 7;
    static constexpr double x[7] = {
        -0.9491079123427585, -0.7415311855993945, -0.4058451513773972,
        0.0,
        0.4058451513773972, 0.7415311855993945, 0.9491079123427585,
    };
    static constexpr double w[7] = {
        0.1294849661688697, 0.2797053914892766, 0.3818300505051189,
        0.4179591836734694,
        0.3818300505051189, 0.2797053914892766, 0.1294849661688697,
    };
};

template <class F>
double gauss7(F&& f, double a, double b) {
    double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < Gauss7::n; ++i) s += Gauss7::w[i] * f(c + h * Gauss7::x[i]);
    return s * h;
}

// Golden-section search for the minimum of a unimodal f on [a, b].
template <class F>
double golden_min(F&& f, double a, double b, double xtol, double* fmin = nullptr) {
    constexpr double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > xtol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        }
    }
    double xm = 0.5 * (a + b);
    if (fmin) *fmin = f(xm);
    return xm;
}

// Deterministic pairwise sum over a fixed index order; result is independent
// of how the values were produced (thread count, scheduling).
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// Dense polynomial with double coefficients, c[0] + c[1] t + ...
class Poly {
  public:
    Poly() = default;
    explicit Poly(std::vector<double> c) : c_(std::move(c)) { trim(); }

    double operator()(double t) const {
        double acc = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) acc = acc * t + c_[i];
        return acc;
    }

    Poly derivative() const {
        if (c_.size() <= 1) return Poly{};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = c_[i] * static_cast<double>(i);
        return Poly(std::move(d));
    }

    // Division by t for polynomials with vanishing constant term (exact).
    Poly shifted_down() const {
        if (c_.empty()) return Poly{};
        std::vector<double> d(c_.begin() + 1, c_.end());
        return Poly(std::move(d));
    }

    Poly operator+(const Poly& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] += o.c_[i];
        return Poly(std::move(r));
    }

    Poly operator-(const Poly& o) const {
        std::vector<double> r(std::max(c_.size(), o.c_.size()), 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) r[i] += c_[i];
        for (std::size_t i = 0; i < o.c_.size(); ++i) r[i] -= o.c_[i];
        return Poly(std::move(r));
    }

    Poly operator*(const Poly& o) const {
        if (c_.empty() || o.c_.empty()) return Poly{};
        std::vector<double> r(c_.size() + o.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i)
            for (std::size_t j = 0; j < o.c_.size(); ++j) r[i + j] += c_[i] * o.c_[j];
        return Poly(std::move(r));
    }

    bool empty() const { return c_.empty(); }
    double constant_term() const { return c_.empty() ? 0.0 : c_[0]; }
    const std::vector<double>& coeffs() const { return c_; }

  private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

}  // namespace warpspec
