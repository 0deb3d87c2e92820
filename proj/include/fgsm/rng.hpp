#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

namespace fgsm {

/// splitmix64 generator. Portable and fully specified, so a seed reproduces
/// the same stream on any platform or implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Fisher-Yates shuffle driven by this stream (std::shuffle is not portable).
    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// Independent child seed for stream `index` of `seed` (seed xor index, mixed once).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return Rng(seed ^ index).next_u64();
}

} // namespace fgsm
