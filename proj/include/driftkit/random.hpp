#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

// Deterministic randomness for replicated experiments. Two fixed algorithms,
// bit-exact on every platform:
//
//  * SplitMix64 (Steele, Lea, Flood) -- seed derivation / mixing.
//  * xoshiro256++ 1.0 (Blackman, Vigna) -- the per-replicate stream, seeded
//    from four consecutive SplitMix64 outputs as its authors recommend.
//
// No std::*_distribution anywhere: those are implementation-defined and would
// break the "same seed, same trajectory" contract across standard libraries.

namespace driftkit {

struct SplitMix64 {
    std::uint64_t state;

    explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }
};

// Stream seed for replicate i: output i of the SplitMix64 sequence seeded
// with master_seed, computed by random access (the generator strides its
// state by a fixed constant, so output i needs no loop). Hashing the index
// through the full mix keeps the seed sets of two different masters disjoint
// in practice; combining master and index with XOR or addition alone would
// make nearby masters share most of their replicate seeds and their runs
// would not be independent. derive_replicate_seed(0, 0) equals the published
// first output of SplitMix64 seeded with 0 (0xE220A8397B1DCDAF).
constexpr std::uint64_t derive_replicate_seed(std::uint64_t master_seed,
                                              std::uint64_t replicate_index) {
    return SplitMix64{master_seed + replicate_index * 0x9E3779B97F4A7C15ull}.next();
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) {
        SplitMix64 mix{seed};
        for (auto& word : state_) word = mix.next();
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [0, 1), 53 significant bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Unbiased integer in [0, n) by masked rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("RandomStream::below: n must be positive");
        if (n == 1) return 0;
        std::uint64_t mask = n - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t draw = next_u64() & mask;
            if (draw < n) return draw;
        }
    }

    // Uniform unordered pair {i, j}, i < j, from [0, n).
    std::pair<std::uint64_t, std::uint64_t> distinct_pair(std::uint64_t n) {
        if (n < 2) throw std::invalid_argument("RandomStream::distinct_pair: need n >= 2");
        const std::uint64_t i = below(n);
        std::uint64_t j = below(n - 1);
        if (j >= i) ++j;
        return {std::min(i, j), std::max(i, j)};
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_;
};

// Fisher-Yates, driven by RandomStream::below for platform independence.
template <class T>
void shuffle(std::vector<T>& values, RandomStream& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace driftkit
