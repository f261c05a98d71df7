#include "warpspec/exit_time_mc.hpp"

#include <algorithm>
#include <cmath>

#include "warpspec/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace warpspec {

double exit_time_profile(const RatioTable& t, double r) {
    if (!(r >= 0.0) || r > t.r_max() * (1.0 + 1e-12))
        fail(Errc::invalid_argument, "exit_time_profile: r outside the table range");
    return t.inv_I_cum(std::min(r, t.r_max()));
}

namespace {

// Ziggurat fed 32 bits at a time; one 64-bit draw covers two normals, which
// halves the serial RNG dependency chain in the step loop. The consumption
// order is fixed, so streams stay reproducible.
struct ZigSource {
    Xoshiro256pp rng;
    std::uint64_t buf = 0;
    bool have = false;

    std::int32_t next32() {
        if (have) {
            have = false;
            return static_cast<std::int32_t>(static_cast<std::uint32_t>(buf));
        }
        buf = rng.next();
        have = true;
        return static_cast<std::int32_t>(static_cast<std::uint32_t>(buf >> 32));
    }

    double normal(const ZigguratNormal::Tables& z) {
        for (;;) {
            const std::int32_t hz = next32();
            const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
            const std::uint32_t mag = hz >= 0 ? static_cast<std::uint32_t>(hz)
                                              : 0u - static_cast<std::uint32_t>(hz);
            if (mag < z.kn[iz]) return hz * z.wn[iz];

            double x = hz * z.wn[iz];
            if (iz == 0) {
                double y;
                do {
                    x = -std::log(rng.uniform() + 1e-300) * (1.0 / 3.442619855899);
                    y = -std::log(rng.uniform() + 1e-300);
                } while (y + y < x * x);
                return hz > 0 ? 3.442619855899 + x : -(3.442619855899 + x);
            }
            if (z.fn[iz] + rng.uniform() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
                return x;
        }
    }
};

// Shared step parameters. The drift table carries b(r)*dt on a uniform grid
// with the pole part floored at beta: the ~1/rho singularity at the origin is
// universal, and the floored evaluation only regularizes the few
// discretization steps that land inside the layer (the continuous process
// never reaches 0 for d >= 2).
struct StepParams {
    const double* gdt;
    double inv_h, beta, R, noise;
    long cap_steps;
};

// Reference kernel: one path of the reflected/absorbed Euler scheme, exactly
// as written. The interleaved kernel below must match it bit for bit.
long run_one_path(const ZigguratNormal::Tables& z, Xoshiro256pp rng_in, double sign,
                  const StepParams& sp, double rho0) {
    ZigSource src{rng_in};
    const double noise_s = sp.noise * sign;
    double rho = rho0;
    long steps = 0;
    while (rho < sp.R) {
        if (steps >= sp.cap_steps) return -(steps);  // censored marker
        double xi = src.normal(z);
        double re = rho < sp.beta ? sp.beta : rho;
        double x = re * sp.inv_h;
        long i = static_cast<long>(x);
        rho = std::abs(rho + sp.gdt[i] + (x - static_cast<double>(i)) * (sp.gdt[i + 1] - sp.gdt[i]) +
                       noise_s * xi);
        ++steps;
    }
    return steps;
}

// Throughput kernel: four paths stepped in lockstep so their serial
// rho-update chains overlap in the pipeline. Each lane owns its stream and
// performs the same per-path arithmetic as run_one_path, so packing paths
// into lanes changes nothing about any individual result.
struct Lane {
    ZigSource src;
    double rho, noise_s;
    long steps, path;
};

void run_lane_group(const ZigguratNormal::Tables& z, Lane* lane, int active,
                    const StepParams& sp, double* taus, std::uint8_t* censored, double dt) {
    while (active > 0) {
        for (int u = 0; u < active;) {
            Lane& L = lane[u];
            bool finished;
            if (L.steps >= sp.cap_steps) {
                censored[L.path] = 1;
                finished = true;
            } else {
                double xi = L.src.normal(z);
                double re = L.rho < sp.beta ? sp.beta : L.rho;
                double x = re * sp.inv_h;
                long i = static_cast<long>(x);
                L.rho = std::abs(L.rho + sp.gdt[i] +
                                 (x - static_cast<double>(i)) * (sp.gdt[i + 1] - sp.gdt[i]) +
                                 L.noise_s * xi);
                ++L.steps;
                finished = L.rho >= sp.R;
            }
            if (finished) {
                taus[L.path] = static_cast<double>(L.steps) * dt;
                lane[u] = lane[--active];
            } else {
                ++u;
            }
        }
    }
}

}  // namespace

ExitTimeEstimate simulate_exit_time(const WarpingFunction& w, int d, const McParams& mc, Exec exec,
                                    std::vector<double>* taus_out,
                                    std::vector<std::uint8_t>* censored_out) {
    if (d < 2) fail(Errc::dimension_mismatch, "simulate_exit_time: d must be >= 2");
    if (!(mc.R > 0.0) || mc.R > w.valid_r_max() * (1.0 + 1e-12))
        fail(Errc::invalid_argument, "simulate_exit_time: need 0 < R <= r_max of the warping function");
    if (!(mc.rho0 >= 0.0) || mc.rho0 > mc.R)
        fail(Errc::invalid_argument, "simulate_exit_time: need 0 <= rho0 <= R");
    if (mc.n_paths < 1000) fail(Errc::invalid_argument, "simulate_exit_time: n_paths must be >= 1e3");
    if (!(mc.dt > 0.0) || mc.dt > sqr(mc.R / 100.0))
        fail(Errc::invalid_argument, "simulate_exit_time: dt must satisfy 0 < dt <= (R/100)^2");
    if (!(mc.t_cap > 0.0)) fail(Errc::invalid_argument, "simulate_exit_time: t_cap must be > 0");

    const double dm1 = static_cast<double>(d - 1);
    const double noise = std::sqrt(2.0 * mc.dt);
    const double beta = 0.5 * dm1 * noise;
    const double layer = 3.0 * dm1 * noise;
    const double sqrt_dt = std::sqrt(mc.dt);

    // reject up front if the profile drift breaks the discretization anywhere
    // a path must travel; the origin layer is exempt (handled by the floor)
    {
        const int probe = 4096;
        for (int i = 0; i <= probe; ++i) {
            double r = layer + (mc.R - layer) * static_cast<double>(i) / probe;
            if (r <= 0.0) continue;
            double drift = dm1 * w.v(r);
            if (drift * sqrt_dt > 1.0) {
                double dt_needed = sqr(1.0 / drift);
                fail(Errc::drift_blowup,
                     "simulate_exit_time: (d-1) sigma'/sigma = " + std::to_string(drift) +
                         " at r = " + std::to_string(r) + " exceeds 1/sqrt(dt); need dt <= " +
                         std::to_string(dt_needed));
            }
        }
    }

    // drift premultiplied by dt on a uniform grid; 2^11 nodes keep the table
    // L1-resident (the lerp loads sit on the per-step dependency chain), and
    // the interpolation error stays far below the O(sqrt(dt)) scheme bias
    const std::size_t n_grid = 1 << 11;
    const double grid_h = mc.R / static_cast<double>(n_grid);
    const double inv_h = 1.0 / grid_h;
    std::vector<double> gdt(n_grid + 2);
    for (std::size_t i = 0; i < gdt.size(); ++i) {
        double r = std::min(static_cast<double>(i) * grid_h, mc.R);
        double re = std::max(r, beta);
        gdt[i] = dm1 * (1.0 / re + w.drift_shape(re)) * mc.dt;
    }

    const long cap_steps = static_cast<long>(std::ceil(mc.t_cap / mc.dt));
    std::vector<double> taus(static_cast<std::size_t>(mc.n_paths));
    std::vector<std::uint8_t> censored(static_cast<std::size_t>(mc.n_paths), 0);

    const ZigguratNormal::Tables& ztab = ZigguratNormal::tables();
    const StepParams sp{gdt.data(), inv_h, beta, mc.R, noise, cap_steps};

    auto stream_of = [&](long i) {
        return mc.antithetic ? static_cast<std::uint64_t>(i) / 2 : static_cast<std::uint64_t>(i);
    };
    auto sign_of = [&](long i) { return (mc.antithetic && (i & 1)) ? -1.0 : 1.0; };

    if (exec == Exec::serial) {
        for (long i = 0; i < static_cast<long>(mc.n_paths); ++i) {
            long steps = run_one_path(ztab, Xoshiro256pp(mc.seed, stream_of(i)), sign_of(i), sp,
                                      mc.rho0);
            if (steps < 0) {
                censored[static_cast<std::size_t>(i)] = 1;
                steps = -steps;
            }
            taus[static_cast<std::size_t>(i)] = static_cast<double>(steps) * mc.dt;
        }
    } else {
        const long n_groups = (mc.n_paths + 3) / 4;
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
        for (long g = 0; g < n_groups; ++g) {
            long base = 4 * g;
            Lane lane[4];
            int active = 0;
            for (long i = base; i < std::min<long>(base + 4, mc.n_paths); ++i) {
                if (mc.rho0 >= mc.R) {
                    taus[static_cast<std::size_t>(i)] = 0.0;
                    continue;
                }
                Lane& L = lane[active++];
                L.src = ZigSource{Xoshiro256pp(mc.seed, stream_of(i))};
                L.rho = mc.rho0;
                L.noise_s = noise * sign_of(i);
                L.steps = 0;
                L.path = i;
            }
            run_lane_group(ztab, lane, active, sp, taus.data(), censored.data(), mc.dt);
        }
    }

    ExitTimeEstimate est;
    est.R = mc.R;
    est.rho0 = mc.rho0;
    est.dt = mc.dt;
    est.t_cap = mc.t_cap;
    est.n_paths = mc.n_paths;
    est.seed = mc.seed;

    double n = static_cast<double>(mc.n_paths);
    est.mean_tau = pairwise_sum(taus) / n;
    std::vector<double> dev2(taus.size());
    for (std::size_t k = 0; k < taus.size(); ++k) dev2[k] = sqr(taus[k] - est.mean_tau);
    est.stderr_tau = mc.n_paths > 1 ? std::sqrt(pairwise_sum(dev2) / (n * (n - 1.0))) : 0.0;
    long nc = 0;
    for (auto c : censored) nc += c;
    est.n_censored = nc;
    est.lower_bound_only = nc > 0;

    if (taus_out) *taus_out = std::move(taus);
    if (censored_out) *censored_out = std::move(censored);
    return est;
}

}  // namespace warpspec
