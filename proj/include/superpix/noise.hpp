#pragma once

#include <cstdint>
#include <string>

#include "superpix/image.hpp"

namespace superpix {

/// SplitMix64 (Steele, Lea & Flood 2014): 64-bit state, increment 0x9E3779B97F4A7C15,
/// output mixer with constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB.
/// Pinned so seeded experiments reproduce bit-exactly on every platform.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
    std::uint64_t operator()() noexcept { return next(); }
    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~0ull; }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    /// Standard normal sample (Box-Muller, cosine branch only).
    double normal() noexcept;

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a stream index.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

enum class NoiseKind { gaussian, salt_pepper };

struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double variance = 0.0;  // intensity^2, gaussian only
    double density = 0.0;   // fraction of pixels, salt & pepper only
    std::uint64_t seed = 0;

    static NoiseSpec gaussian(double variance, std::uint64_t seed = 0) {
        return {NoiseKind::gaussian, variance, 0.0, seed};
    }
    /// Gaussian noise parameterised by standard deviation instead of variance.
    static NoiseSpec gaussian_sigma(double sigma, std::uint64_t seed = 0) {
        return {NoiseKind::gaussian, sigma * sigma, 0.0, seed};
    }
    static NoiseSpec salt_pepper(double density, std::uint64_t seed = 0) {
        return {NoiseKind::salt_pepper, 0.0, density, seed};
    }

    void validate() const;
    /// Short identifier such as "gaussian_var20" or "sp_0.05".
    std::string label() const;
};

/// Gaussian: i.i.d. N(0, variance) per sample, clamped to [0, 255].
/// Salt & pepper: each pixel, with probability `density`, becomes 0 or 255 on all channels.
Image add_noise(const Image& img, const NoiseSpec& spec);

/// Parses "gaussian:<variance>", "gaussian-sigma:<sigma>" or "sp:<density>".
NoiseSpec parse_noise_spec(const std::string& text, std::uint64_t seed);

}  // namespace superpix
