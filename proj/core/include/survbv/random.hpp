#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace survbv {

/// SplitMix64 finalizer; used to derive independent substream seeds from a
/// master seed and a path of indices.
std::uint64_t mix_seed(std::uint64_t x) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Seeded generator whose variates are computed here rather than through the
/// <random> distributions, whose algorithms differ between standard libraries.
/// Output is therefore identical on every platform for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform_open();

    /// Uniform integer in [0, bound); bound > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

    double standard_normal();

    /// Exponential with unit rate.
    double standard_exponential();

    /// k distinct elements of pool, in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_without_replacement(std::vector<std::size_t> pool, std::size_t k);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace survbv
