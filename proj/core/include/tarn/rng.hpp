#pragma once

// Portable pseudo-random generators. Every random draw in the simulator goes
// through these so that two independent implementations agree bit-for-bit.
//
//   SplitMix64         Steele, Lea, Flood (2014); increment 0x9e3779b97f4a7c15,
//                      multipliers 0xbf58476d1ce4e5b9 and 0x94d049bb133111eb.
//   Xoshiro256StarStar Blackman, Vigna (2018); state seeded with four
//                      consecutive SplitMix64 outputs of the 64-bit seed.
//
// Derived draws:
//   uniform_u64(rng, max)   inclusive [0, max]. Let m be the all-ones mask
//                           covering max; draw next() & m until <= max.
//   uniform_u128(rng, max)  same mask-and-reject scheme. If max fits in 64
//                           bits a single word is drawn, otherwise hi then lo.
//   uniform_unit(rng)       (next() >> 11) * 2^-53, in [0, 1).

#include <bit>
#include <cstdint>
#include <limits>

namespace tarn {

using u128 = unsigned __int128;

class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

private:
    std::uint64_t state_;
};

class Xoshiro256StarStar {
public:
    using result_type = std::uint64_t;

    explicit constexpr Xoshiro256StarStar(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : s_) word = sm();
    }

    constexpr std::uint64_t operator()() noexcept {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    friend constexpr bool operator==(const Xoshiro256StarStar&, const Xoshiro256StarStar&) = default;

private:
    std::uint64_t s_[4]{};
};

using Rng = Xoshiro256StarStar;

// Seed for an independent stream derived from a parent seed and a stream tag.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 sm(seed ^ (stream * 0xd1b54a32d192ed03ULL));
    return sm();
}

template <class G>
std::uint64_t uniform_u64(G& rng, std::uint64_t max) {
    if (max == 0) return 0;
    const std::uint64_t mask = std::numeric_limits<std::uint64_t>::max() >> std::countl_zero(max);
    for (;;) {
        const std::uint64_t v = rng() & mask;
        if (v <= max) return v;
    }
}

template <class G>
u128 uniform_u128(G& rng, u128 max) {
    const auto hi_max = static_cast<std::uint64_t>(max >> 64);
    if (hi_max == 0) return uniform_u64(rng, static_cast<std::uint64_t>(max));
    const std::uint64_t hi_mask =
        std::numeric_limits<std::uint64_t>::max() >> std::countl_zero(hi_max);
    for (;;) {
        const u128 hi = rng() & hi_mask;
        const u128 lo = rng();
        const u128 v = (hi << 64) | lo;
        if (v <= max) return v;
    }
}

template <class G>
double uniform_unit(G& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

} // namespace tarn
