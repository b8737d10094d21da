#include "reco/rng.hpp"

#include <cmath>
#include <numbers>

#include "reco/error.hpp"

namespace reco {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

Rng::result_type Rng::at(std::uint64_t index) const {
    const std::uint64_t key = mix64(state_.seed + kGolden) ^ mix64(state_.stream ^ 0xD1B54A32D192ED03ULL);
    return mix64(mix64(key + (index + 1) * kGolden) ^ key);
}

Rng Rng::fork(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t stream = mix64(state_.stream + 0x632BE59BD9B4E019ULL);
    for (auto t : tags) stream = mix64(stream ^ mix64(t + kGolden));
    return Rng(state_.seed, stream);
}

double Rng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    require(n > 0, ErrorKind::InvalidArgument, "Rng::below needs n > 0");
    // Lemire's multiply-shift with rejection of the biased low region.
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<unsigned __int128>((*this)()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal() {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace reco
