#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "warpspec/common.hpp"
#include "warpspec/profile.hpp"

namespace warpspec {

// Truncated odd power series sigma = t + c3 t^3 + c5 t^5 + c7 t^7 used on
// [0, t0]; starting the adaptive integrator exactly at sigma = 0 degrades the
// error estimate of everything built on top.
struct SeriesHead {
    double c3 = 0.0, c5 = 0.0, c7 = 0.0;
    double t0 = 1e-3;

    double shape(double t) const {  // sigma / t
        double t2 = t * t;
        return 1.0 + t2 * (c3 + t2 * (c5 + t2 * c7));
    }
    double shape_prime(double t) const {
        double t2 = t * t;
        return t * (2.0 * c3 + t2 * (4.0 * c5 + t2 * 6.0 * c7));
    }
    double sigma(double t) const { return t * shape(t); }
    double sigma_prime(double t) const {
        double t2 = t * t;
        return 1.0 + t2 * (3.0 * c3 + t2 * (5.0 * c5 + t2 * 7.0 * c7));
    }
    double log_sigma(double t) const { return std::log(t) + std::log(shape(t)); }
    double v(double t) const { return 1.0 / t + shape_prime(t) / shape(t); }
    double drift_shape(double t) const { return shape_prime(t) / shape(t); }
};

// One accepted integrator step with its continuous extension. State is
// (sigma, sigma') or, once sigma has grown past the overflow guard,
// (log sigma, sigma'/sigma).
struct DenseStep {
    double t0 = 0.0, h = 0.0;
    bool logform = false;
    std::array<double, 2> y0{}, y1{};
    std::array<std::array<double, 2>, 5> rc{};

    double t1() const { return t0 + h; }
    double eval(int c, double theta) const {
        double th1 = 1.0 - theta;
        return rc[0][c] +
               theta * (rc[1][c] + th1 * (rc[2][c] + theta * (rc[3][c] + th1 * rc[4][c])));
    }
    double eval_deriv(int c, double theta) const {  // d/dt of the dense polynomial
        double d = rc[1][c] + (1.0 - 2.0 * theta) * rc[2][c] +
                   theta * (2.0 - 3.0 * theta) * rc[3][c] +
                   2.0 * theta * (1.0 - theta) * (1.0 - 2.0 * theta) * rc[4][c];
        return d / h;
    }
};

// Dense-output solution of sigma'' = G sigma, sigma(0) = 0, sigma'(0) = 1.
// Immutable and shareable across threads.
class WarpingFunction {
  public:
    double r_max() const { return r_max_; }
    double valid_r_max() const { return truncated_at_ ? *truncated_at_ : r_max_; }
    std::optional<double> truncated_at() const { return truncated_at_; }
    double tol() const { return tol_; }
    double max_defect() const { return max_defect_; }
    const SeriesHead& series() const { return series_; }
    std::shared_ptr<const ProfileSpec> profile() const { return profile_; }
    bool closed_form() const { return closed_form_; }

    double sigma(double r) const;
    double sigma_prime(double r) const;
    double log_sigma(double r) const;
    double v(double r) const;            // sigma'/sigma
    double drift_shape(double r) const;  // sigma'/sigma - 1/r
    double sigma_second_dense(double r) const;

    // |sigma'' - G sigma| / (1 + |G sigma|) with sigma'' from the dense output
    double defect(double r) const;

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& sigma_samples() const { return sigma_s_; }
    const std::vector<double>& sigma_prime_samples() const { return sigma_prime_s_; }

    void dump_csv(std::ostream& os) const;

    friend WarpingFunction solve_sigma(std::shared_ptr<const ProfileSpec> p, double r_max,
                                       double tol);

  private:
    const DenseStep& step_at(double r) const;

    std::shared_ptr<const ProfileSpec> profile_;
    SeriesHead series_;
    std::vector<DenseStep> steps_;
    std::vector<double> grid_, sigma_s_, sigma_prime_s_;
    double r_max_ = 0.0;
    double tol_ = 1e-10;
    double max_defect_ = 0.0;
    std::optional<double> truncated_at_;
    bool closed_form_ = false;
};

WarpingFunction solve_sigma(std::shared_ptr<const ProfileSpec> p, double r_max, double tol);

struct PositivityReport {
    bool sigma_positive = true;
    bool sigma_prime_nonneg = true;
    std::optional<double> first_violation;
};

// Scans grid and dense output on [0, R]; sign threshold is -tol.
PositivityReport check_positivity_monotonicity(const WarpingFunction& w, double R);

}  // namespace warpspec
