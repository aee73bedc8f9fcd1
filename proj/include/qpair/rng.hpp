// rng.hpp: counter-based random streams (Philox4x32-10).
//
// A stream is identified by (seed, stream id); draws are a pure function of
// (seed, stream id, draw index), so series simulated in any order or in
// parallel reproduce bit for bit. Uniform doubles and bounded integers are
// derived here rather than through <random> distributions, whose output is
// implementation defined.

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace qpair {

namespace philox {

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr std::uint32_t kM0 = 0xD2511F53u;
inline constexpr std::uint32_t kM1 = 0xCD9E8D57u;
inline constexpr std::uint32_t kW0 = 0x9E3779B9u;
inline constexpr std::uint32_t kW1 = 0xBB67AE85u;

constexpr Block round(const Block& c, const Key& k) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
}

/// Philox4x32 with 10 rounds.
constexpr Block philox4x32_10(Block ctr, Key key) {
    ctr = round(ctr, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kW0;
        key[1] += kW1;
        ctr = round(ctr, key);
    }
    return ctr;
}

}  // namespace philox

class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, stream_(stream) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        if (slot_ == 2) refill();
        return buffer_[slot_++];
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x = 0;
        do {
            x = (*this)();
        } while (x >= limit);
        return x % n;
    }

    std::uint64_t stream() const { return stream_; }

private:
    void refill() {
        const philox::Block ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
        const auto out = philox::philox4x32_10(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ++block_;
        slot_ = 0;
    }

    philox::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int slot_ = 2;
};

/// Index drawn from a discrete distribution by inverse CDF.
template <class Probabilities>
std::size_t sample_index(CounterRng& rng, const Probabilities& p) {
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        acc += p[i];
        last = i;
        if (u < acc) return i;
    }
    return last;
}

/// Fisher–Yates shuffle driven by CounterRng::below.
template <class Container>
void shuffle(Container& c, CounterRng& rng) {
    for (std::size_t i = c.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(c[i - 1], c[j]);
    }
}

}  // namespace qpair
