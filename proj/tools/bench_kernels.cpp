// Compares the OpenMP kernels against their serial reference paths and checks
// that both produce bit-identical results.

#include <chrono>
#include <cstdio>
#include <cstring>

#include "warpspec/exit_time_mc.hpp"
#include "warpspec/ratios.hpp"
#include "warpspec/scenario.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace warpspec;
using Clock = std::chrono::steady_clock;

namespace {

template <class F>
double time_ms(F&& f, int reps = 3) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        auto t0 = Clock::now();
        f();
        double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        if (ms < best) best = ms;
    }
    return best;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("OpenMP enabled, max threads = %d\n", omp_get_max_threads());
#else
    std::printf("OpenMP disabled; parallel path degrades to serial\n");
#endif

    auto profile = std::make_shared<const ProfileSpec>(make_profile(config_poly_exp_example()));
    auto w = std::make_shared<const WarpingFunction>(solve_sigma(profile, 50.0, 1e-10));

    RatioTable t_ser = build_ratio_table(w, 2, 50.0, 1e-10, Exec::serial, 4000);
    RatioTable t_par = build_ratio_table(w, 2, 50.0, 1e-10, Exec::parallel, 4000);
    bool table_same = same_bits(t_ser.log_V_samples(), t_par.log_V_samples()) &&
                      same_bits(t_ser.inv_I_cum_samples(), t_par.inv_I_cum_samples());

    double ms_table_ser =
        time_ms([&] { build_ratio_table(w, 2, 50.0, 1e-10, Exec::serial, 4000); });
    double ms_table_par =
        time_ms([&] { build_ratio_table(w, 2, 50.0, 1e-10, Exec::parallel, 4000); });

    auto eu = std::make_shared<const ProfileSpec>(make_profile(config_euclidean()));
    auto we = std::make_shared<const WarpingFunction>(solve_sigma(eu, 1.0, 1e-10));
    McParams mc;
    mc.R = 1.0;
    mc.n_paths = 20000;
    mc.dt = 1e-5;
    mc.seed = 42;
    mc.t_cap = 25.0;

    ExitTimeEstimate ser = simulate_exit_time(*we, 2, mc, Exec::serial);
    ExitTimeEstimate par = simulate_exit_time(*we, 2, mc, Exec::parallel);
    bool mc_same = std::memcmp(&ser.mean_tau, &par.mean_tau, sizeof(double)) == 0 &&
                   std::memcmp(&ser.stderr_tau, &par.stderr_tau, sizeof(double)) == 0;

    double ms_mc_ser = time_ms([&] { simulate_exit_time(*we, 2, mc, Exec::serial); }, 2);
    double ms_mc_par = time_ms([&] { simulate_exit_time(*we, 2, mc, Exec::parallel); }, 2);

    std::printf("\n%-28s %12s %12s %9s %10s\n", "kernel", "serial ms", "parallel ms", "speedup",
                "identical");
    std::printf("%-28s %12.1f %12.1f %8.2fx %10s\n", "ratio table (4000 cells)", ms_table_ser,
                ms_table_par, ms_table_ser / ms_table_par, table_same ? "yes" : "NO");
    std::printf("%-28s %12.1f %12.1f %8.2fx %10s\n", "exit-time MC (2e4 paths)", ms_mc_ser,
                ms_mc_par, ms_mc_ser / ms_mc_par, mc_same ? "yes" : "NO");

    return (table_same && mc_same) ? 0 : 1;
}
