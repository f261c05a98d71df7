#pragma once

#include <cmath>
#include <cstdint>

namespace warpspec {

// Stream splitting: stream i is seeded by walking splitmix64 from
// master_seed ^ golden*(i+1). Every path owns one stream, so results do not
// depend on execution order or thread count.

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class Xoshiro256pp {
  public:
    Xoshiro256pp() : Xoshiro256pp(0x853C49E6748FEA9BULL, 0) {}

    Xoshiro256pp(std::uint64_t master_seed, std::uint64_t stream_index) {
        std::uint64_t sm = master_seed ^ (0x9E3779B97F4A7C15ULL * (stream_index + 1));
        for (auto& word : s_) word = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero state is absorbing
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform on [0, 1), 53 mantissa bits
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

// Ziggurat sampler for the standard normal (Marsaglia & Tsang, 128 layers).
// Tables are built once per process from the same closed-form recursion, so
// draws are reproducible run to run for a fixed stream. Grab the table set
// once (outside hot loops) and sample through it.
class ZigguratNormal {
  public:
    struct Tables {
        std::uint32_t kn[128];
        double wn[128];
        double fn[128];

        Tables() {
            const double m1 = 2147483648.0;
            const double vn = 9.91256303526217e-3;
            double dn = kR, tn = kR;
            double q = vn / std::exp(-0.5 * dn * dn);
            kn[0] = static_cast<std::uint32_t>((dn / q) * m1);
            kn[1] = 0;
            wn[0] = q / m1;
            wn[127] = dn / m1;
            fn[0] = 1.0;
            fn[127] = std::exp(-0.5 * dn * dn);
            for (int i = 126; i >= 1; --i) {
                dn = std::sqrt(-2.0 * std::log(vn / dn + std::exp(-0.5 * dn * dn)));
                kn[i + 1] = static_cast<std::uint32_t>((dn / tn) * m1);
                tn = dn;
                fn[i] = std::exp(-0.5 * dn * dn);
                wn[i] = dn / m1;
            }
        }
    };

    static const Tables& tables() {
        static const Tables t;
        return t;
    }

    template <class Rng>
    static double sample(const Tables& z, Rng& rng) {
        for (;;) {
            const std::int32_t hz = static_cast<std::int32_t>(rng.next() >> 32);
            const std::uint32_t iz = static_cast<std::uint32_t>(hz) & 127u;
            const std::uint32_t mag = hz >= 0 ? static_cast<std::uint32_t>(hz)
                                              : 0u - static_cast<std::uint32_t>(hz);
            if (mag < z.kn[iz]) return hz * z.wn[iz];

            // rare branch: base strip or wedge rejection
            double x = hz * z.wn[iz];
            if (iz == 0) {
                double y;
                do {
                    x = -std::log(rng.uniform() + 1e-300) * (1.0 / kR);
                    y = -std::log(rng.uniform() + 1e-300);
                } while (y + y < x * x);
                return hz > 0 ? kR + x : -(kR + x);
            }
            if (z.fn[iz] + rng.uniform() * (z.fn[iz - 1] - z.fn[iz]) < std::exp(-0.5 * x * x))
                return x;
            // fall through and redraw
        }
    }

    template <class Rng>
    double operator()(Rng& rng) const {
        return sample(tables(), rng);
    }

  private:
    static constexpr double kR = 3.442619855899;
};

}  // namespace warpspec
