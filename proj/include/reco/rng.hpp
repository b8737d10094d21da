#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace reco {

/// Counter-based 64-bit generator. Output i of a stream is a pure function of
/// (seed, stream, i), so any draw can be replayed from the three integers that
/// make up State, and independent streams are derived by tagging rather than by
/// consuming draws from a parent.
class Rng {
public:
    using result_type = std::uint64_t;

    struct State {
        std::uint64_t seed = 0;
        std::uint64_t stream = 0;
        std::uint64_t counter = 0;
        bool operator==(const State&) const = default;
    };

    explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0) : state_{seed, stream, 0} {}
    explicit Rng(State s) : state_(s) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return at(state_.counter++); }

    /// Value at absolute position `index` of this stream; does not advance.
    result_type at(std::uint64_t index) const;

    /// A new stream keyed by this stream's identity and the tags; the parent's
    /// counter is not consumed.
    Rng fork(std::initializer_list<std::uint64_t> tags) const;

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n);
    /// Standard normal via Box-Muller (consumes two draws).
    double normal();

    const State& state() const noexcept { return state_; }

private:
    State state_;
};

std::uint64_t mix64(std::uint64_t x);

}  // namespace reco
