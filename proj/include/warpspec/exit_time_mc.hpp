#pragma once

#include <cstdint>
#include <vector>

#include "warpspec/common.hpp"
#include "warpspec/ratios.hpp"
#include "warpspec/warping.hpp"

namespace warpspec {

// F(r) = cumulative integral of I_d^-1; the radial operator applied to F is
// identically 1, so exit times from radius rho0 to R concentrate on
// F(R) - F(rho0).
double exit_time_profile(const RatioTable& t, double r);

struct McParams {
    double R = 1.0;
    double rho0 = 0.0;
    int n_paths = 100000;
    double dt = 1e-5;
    std::uint64_t seed = 0;
    double t_cap = 0.0;  // must be > 0
    bool antithetic = false;
};

struct ExitTimeEstimate {
    double R = 0.0, rho0 = 0.0, dt = 0.0, t_cap = 0.0;
    int n_paths = 0;
    std::uint64_t seed = 0;
    double mean_tau = 0.0;
    double stderr_tau = 0.0;
    long n_censored = 0;
    bool lower_bound_only = false;  // some paths hit the cap; the mean is a floor
};

// Euler–Maruyama for d rho = (d-1)(sigma'/sigma)(rho) dt + sqrt(2 dt) xi,
// reflected at 0 by folding, absorbed at R. Generator convention: the full
// Laplacian (volatility sqrt(2)), so mean_tau estimates F(R) - F(rho0).
// Deterministic in (seed, n_paths, dt) regardless of execution policy.
ExitTimeEstimate simulate_exit_time(const WarpingFunction& w, int d, const McParams& mc,
                                    Exec exec = Exec::parallel,
                                    std::vector<double>* taus_out = nullptr,
                                    std::vector<std::uint8_t>* censored_out = nullptr);

}  // namespace warpspec
