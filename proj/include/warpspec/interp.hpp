#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "warpspec/common.hpp"

namespace warpspec {

// Shape-preserving cubic Hermite interpolant (Fritsch–Carlson slopes) with an
// optional linear mode. Monotone data stays monotone; evaluation outside the
// knot range clamps to the end values.
class MonotoneInterp {
  public:
    MonotoneInterp() = default;

    MonotoneInterp(std::vector<double> x, std::vector<double> y, int order = 3)
        : x_(std::move(x)), y_(std::move(y)), order_(order) {
        if (x_.size() != y_.size() || x_.size() < 2)
            fail(Errc::invalid_argument, "interpolation table needs >= 2 samples");
        for (std::size_t i = 1; i < x_.size(); ++i)
            if (!(x_[i] > x_[i - 1]))
                fail(Errc::non_monotone_table, "table abscissae must be strictly increasing");
        if (order_ != 1 && order_ != 3)
            fail(Errc::invalid_argument, "interp order must be 1 or 3");
        if (order_ == 3) build_slopes();
    }

    double x_min() const { return x_.front(); }
    double x_max() const { return x_.back(); }
    bool contains(double x) const { return x >= x_min() && x <= x_max(); }

    double operator()(double x) const {
        if (x <= x_.front()) return y_.front();
        if (x >= x_.back()) return y_.back();
        std::size_t i = interval(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        if (order_ == 1) return y_[i] + t * (y_[i + 1] - y_[i]);
        double t2 = t * t, t3 = t2 * t;
        double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        return h00 * y_[i] + h10 * h * d_[i] + h01 * y_[i + 1] + h11 * h * d_[i + 1];
    }

    double derivative(double x) const {
        if (x <= x_.front() || x >= x_.back()) return 0.0;
        std::size_t i = interval(x);
        double h = x_[i + 1] - x_[i];
        double t = (x - x_[i]) / h;
        if (order_ == 1) return (y_[i + 1] - y_[i]) / h;
        double t2 = t * t;
        double g00 = (6 * t2 - 6 * t) / h, g10 = 3 * t2 - 4 * t + 1;
        double g01 = (-6 * t2 + 6 * t) / h, g11 = 3 * t2 - 2 * t;
        return g00 * y_[i] + g10 * d_[i] + g01 * y_[i + 1] + g11 * d_[i + 1];
    }

  private:
    std::size_t interval(double x) const {
        auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - x_.begin());
        if (i == 0) return 0;
        if (i >= x_.size()) return x_.size() - 2;
        return i - 1;
    }

    void build_slopes() {
        std::size_t n = x_.size();
        std::vector<double> h(n - 1), delta(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            h[i] = x_[i + 1] - x_[i];
            delta[i] = (y_[i + 1] - y_[i]) / h[i];
        }
        d_.assign(n, 0.0);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            if (delta[i - 1] * delta[i] <= 0.0) {
                d_[i] = 0.0;
            } else {
                double w1 = 2 * h[i] + h[i - 1];
                double w2 = h[i] + 2 * h[i - 1];
                d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d_[0] = end_slope(h[0], h.size() > 1 ? h[1] : h[0], delta[0], delta.size() > 1 ? delta[1] : delta[0]);
        d_[n - 1] = end_slope(h[n - 2], n > 2 ? h[n - 3] : h[n - 2], delta[n - 2],
                              n > 2 ? delta[n - 3] : delta[n - 2]);
    }

    static double end_slope(double h0, double h1, double d0, double d1) {
        double d = ((2 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (d * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
        return d;
    }

    std::vector<double> x_, y_, d_;
    int order_ = 3;
};

}  // namespace warpspec
