#include "superpix/noise.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>

namespace superpix {

double SplitMix64::normal() noexcept {
    // 1 - u keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 a(seed ^ (stream * 0xD1B54A32D192ED03ull));
    a.next();
    return a.next();
}

void NoiseSpec::validate() const {
    if (kind == NoiseKind::gaussian && !(variance >= 0.0)) {
        throw InvalidArgument("noise variance must be >= 0");
    }
    if (kind == NoiseKind::salt_pepper && !(density >= 0.0 && density <= 1.0)) {
        throw InvalidArgument("salt & pepper density must lie in [0, 1]");
    }
}

std::string NoiseSpec::label() const {
    char buf[64];
    const double value = kind == NoiseKind::gaussian ? variance : density;
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return (kind == NoiseKind::gaussian ? "gaussian_var" : "sp_") + std::string(buf, end);
}

Image add_noise(const Image& img, const NoiseSpec& spec) {
    spec.validate();
    Image out = img;
    SplitMix64 rng(spec.seed);
    if (spec.kind == NoiseKind::gaussian) {
        if (spec.variance == 0.0) return out;
        const double sigma = std::sqrt(spec.variance);
        for (double& v : out.data()) v = std::clamp(v + sigma * rng.normal(), 0.0, 255.0);
        return out;
    }
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        const double u = rng.uniform();
        const double coin = rng.uniform();
        if (u < spec.density) {
            const double value = coin < 0.5 ? 0.0 : 255.0;
            for (double& v : out.pixel(p)) v = value;
        }
    }
    return out;
}

NoiseSpec parse_noise_spec(const std::string& text, std::uint64_t seed) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw InvalidArgument("noise spec '" + text + "' must look like kind:value");
    const std::string kind = text.substr(0, colon);
    const std::string number = text.substr(colon + 1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), value);
    if (ec != std::errc() || ptr != number.data() + number.size()) {
        throw InvalidArgument("noise spec '" + text + "': bad number");
    }
    NoiseSpec spec;
    if (kind == "gaussian") {
        spec = NoiseSpec::gaussian(value, seed);
    } else if (kind == "gaussian-sigma") {
        spec = NoiseSpec::gaussian_sigma(value, seed);
    } else if (kind == "sp") {
        spec = NoiseSpec::salt_pepper(value, seed);
    } else {
        throw InvalidArgument("noise spec '" + text + "': unknown kind '" + kind + "'");
    }
    spec.validate();
    return spec;
}

}  // namespace superpix
