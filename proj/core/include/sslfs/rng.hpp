#ifndef SSLFS_RNG_HPP
#define SSLFS_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace sslfs {

// Seedable PRNG with fully pinned output streams. The engine is
// std::mt19937_64 (bit-exact across platforms by the standard); the
// uniform/normal transforms are implemented here instead of using the
// standard distributions, whose streams are implementation-defined.
//
// Stream splitting: independent sub-streams are derived with mix(), e.g.
// episode e of an evaluation run with seed s uses Rng(mix(s, e)). This is
// what makes multi-episode runs reproducible and order-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double uniform();
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller (second value cached).
    double normal();

    // Uniform integer in [0, n), unbiased. n must be positive.
    std::size_t below(std::size_t n);

    // Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[below(i)]);
        }
    }

    // First k entries of a random permutation of 0..n-1 (sampling without
    // replacement, in sampled order).
    std::vector<std::size_t> choose(std::size_t n, std::size_t k);

    // splitmix64 finalizer; the basis of mix() and seeding.
    static std::uint64_t splitmix64(std::uint64_t x);

    // Deterministic sub-seed derivation for stream splitting.
    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

// FNV-1a 64-bit digest of a byte string, rendered as 16 lowercase hex
// characters. Used to stamp reports with a config fingerprint.
std::uint64_t fnv1a64(const std::string& text);
std::string fnv1a64_hex(const std::string& text);

}  // namespace sslfs

#endif
