#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace uvband {

/// Algorithm identifier stored with every ensemble so a run can be traced
/// to an exact generator recipe. Bitwise reproducibility is guaranteed
/// within one build; other implementations can match it from this id.
inline constexpr std::string_view kGeneratorId = "splitmix64+xoshiro256ss/v1";

struct SplitMix64 {
    std::uint64_t state;

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
};

/// xoshiro256** seeded through SplitMix64. Substreams are derived from
/// (seed, stream) so paths can be generated independently and in blocks
/// without changing their values.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        SplitMix64 sm{seed + 0x632BE59BD9B4E019ULL * (stream + 1)};
        for (auto& word : s_)
            word = sm.next();
        spare_valid_ = false;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1).
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Fair coin.
    bool next_sign() { return (next_u64() >> 63) != 0; }

    /// Standard normal via the Marsaglia polar method (one spare cached).
    double next_normal() {
        if (spare_valid_) {
            spare_valid_ = false;
            return spare_;
        }
        double u, v, r2;
        do {
            u = 2.0 * next_unit() - 1.0;
            v = 2.0 * next_unit() - 1.0;
            r2 = u * u + v * v;
        } while (r2 >= 1.0 || r2 == 0.0);
        double scale = std::sqrt(-2.0 * std::log(r2) / r2);
        spare_ = v * scale;
        spare_valid_ = true;
        return u * scale;
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool spare_valid_ = false;
};

/// Derives a deterministic 64-bit subseed for named sub-experiments
/// (per-scheme streams inside a battery, per-criterion seeds, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    SplitMix64 sm{seed ^ (0x9E3779B97F4A7C15ULL * (salt + 0x51ED2701))};
    return sm.next();
}

} // namespace uvband
