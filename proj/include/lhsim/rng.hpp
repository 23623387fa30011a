#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace lhsim {

/// Identifier recorded in manifests. Bump the suffix if the stream layout ever changes.
inline constexpr std::string_view kRngAlgorithm = "philox4x32-10/v1";

/// Philox4x32 with 10 rounds (Salmon et al., Random123). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key);

/// SplitMix64 finalizer; used to derive keys from seeds.
std::uint64_t mix64(std::uint64_t x);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view text);

/// Per-image stream seed: hash(seed, image_id).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view id);

/**
 * @brief Counter-based generator.
 *
 * Every draw is addressed by a 64-bit counter, so `uniform_at(i)` and
 * `normal_at(i)` depend only on (key, i). Sequential helpers advance an
 * internal counter for the few places that need a stream (parameter
 * sampling, shuffles). Substreams get independent keys, so per-image and
 * per-purpose streams never overlap.
 *
 * Normals use Box-Muller on two 53-bit uniforms taken from one Philox block.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    Rng substream(std::uint64_t id) const;
    Rng substream(std::string_view name) const { return substream(fnv1a64(name)); }

    std::uint64_t key() const { return key_; }

    std::uint64_t bits_at(std::uint64_t counter) const;
    /// Uniform in [0, 1).
    double uniform_at(std::uint64_t counter) const;
    /// Standard normal.
    double normal_at(std::uint64_t counter) const;

    std::uint64_t next_bits();
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [0, bound); bound > 0. Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound);

private:
    std::array<std::uint32_t, 4> block(std::uint64_t counter, std::uint32_t lane) const;

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace lhsim
