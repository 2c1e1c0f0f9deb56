#pragma once

#include <cstdint>
#include <vector>

namespace unlearn {

// Deterministic PRNG stack used everywhere randomness appears:
// xoshiro256++ streams seeded through splitmix64, with a documented
// seed-derivation rule so independent components (per-class filters,
// per-cell Monte Carlo, shuffles) get decorrelated streams from one
// master seed. Bitwise reproducibility within this implementation is a
// contract; cross-language identity is not.

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64_mix(std::uint64_t z);

// Stream-split: derive(master, i) gives the seed of substream i.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t i) {
    return splitmix64_mix(master + (i + 1) * kGolden);
}

class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed);

    std::uint64_t next();

    // Uniform double in [0, 1), 53-bit resolution.
    double uniform();

    // Uniform double in [0, hi); hi may be 0 (returns 0).
    double uniform_below(double hi) { return uniform() * hi; }

    // Unbiased integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t uniform_int(std::uint64_t bound);

    // Standard normal via Box-Muller (pinned: r*cos first, r*sin cached).
    double normal();

    // Fisher-Yates, descending; pinned shuffle order for reproducibility.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::uint64_t s_[4];
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace unlearn
