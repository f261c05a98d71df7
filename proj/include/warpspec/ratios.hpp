#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

#include "warpspec/common.hpp"
#include "warpspec/warping.hpp"

namespace warpspec {

enum class TailKind { converged, divergent, inconclusive };

struct TailStatus {
    TailKind kind = TailKind::inconclusive;
    double value = 0.0;    // converged: integral including the extrapolated tail
    double witness = 0.0;  // divergent: lower bound on I^-1 over the last windows
    double r_reached = 0.0;
    std::vector<double> window_ends;
    std::vector<double> window_contributions;
};

// Sampled volumes and isoperimetric ratios of the model at one effective
// dimension d. All ratio arithmetic runs in log space; V may exceed double
// range, in which case the V/script_I samples hold +inf and the log fields
// stay exact.
class RatioTable {
  public:
    int dim() const { return d_; }
    double r_max() const { return R_; }
    double tol() const { return tol_; }
    double t0() const { return t0_; }
    const WarpingFunction& warping() const { return *w_; }
    std::shared_ptr<const WarpingFunction> warping_ptr() const { return w_; }

    // evaluators for any r in [0, r_max]
    double log_V(double r) const;
    double V(double r) const;
    double I(double r) const;
    double log_I(double r) const;
    double script_I(double r) const;  // = I * sigma
    double inv_I(double r) const;     // = 1 / I
    double inv_I_cum(double r) const;

    const std::vector<double>& grid() const { return grid_; }
    const std::vector<double>& log_V_samples() const { return logV_; }
    const std::vector<double>& I_samples() const { return I_s_; }
    const std::vector<double>& script_I_samples() const { return scriptI_; }
    const std::vector<double>& inv_I_cum_samples() const { return invIcum_; }

    void dump_csv(std::ostream& os) const;

    friend RatioTable build_ratio_table(std::shared_ptr<const WarpingFunction> w, int d, double R,
                                        double tol, Exec exec, int grid_points);

  private:
    std::size_t cell_of(double r) const;
    double series_log_V(double r) const;
    double series_inv_I(double r) const;

    std::shared_ptr<const WarpingFunction> w_;
    int d_ = 2;
    double R_ = 0.0, tol_ = 1e-10, t0_ = 1e-3;
    double e2_ = 0.0, e4_ = 0.0, e6_ = 0.0;  // V series: V = r^d/d + e2 r^{d+2}/(d+2) + ...
    std::vector<double> grid_, logV_, I_s_, logI_, scriptI_, invIcum_, sigma_s_, v_s_;
};

RatioTable build_ratio_table(std::shared_ptr<const WarpingFunction> w, int d, double R, double tol,
                             Exec exec = Exec::parallel, int grid_points = 2000);

struct MonotoneReport {
    bool nondecreasing = true;
    std::optional<double> first_violation;
    double margin_min = 0.0;  // min over the grid of d*(sigma'/sigma)*V/sigma^{d-1} - 1
};

// script_I is nondecreasing iff d sigma' V - sigma^d >= 0; evaluated in the
// scaled form d*(sigma'/sigma)*I^-1 - 1.
MonotoneReport check_script_I_monotone(const RatioTable& t, double R);

struct InfIResult {
    double value = 0.0;
    double argmin = 0.0;
    bool limit_governed = false;               // inf attained only in the r -> R limit
    std::optional<double> analytic_floor;      // (d-1) * sigma'/sigma at the far end
    std::optional<double> stationarity_gap;    // |I - (d-1) sigma'/sigma| / I at an interior argmin
};

InfIResult inf_I(const RatioTable& t, double R, bool r_phi_infinite);

TailStatus integral_inv_I(const RatioTable& t, double r_phi, double classify_tol = 1e-6);

// I'(r) + I(r)^2 - (d-1)(sigma'/sigma)(r) I(r), I' by centered differencing at h = 1e-4
double riccati_residual(const RatioTable& t, double r);

}  // namespace warpspec
