#pragma once

#include <cmath>
#include <cstdint>

namespace cb {

// splitmix64. Update equations, for replaying the stream in any language:
//   z  = (state += 0x9E3779B97F4A7C15)
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
//   z ^= z >> 27;  z *= 0x94D049BB133111EB
//   return z ^ (z >> 31)
// All arithmetic mod 2^64.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n): floor(next() * n / 2^64). One draw per call.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }

    // Bernoulli(p) decided by an integer comparison: the top 53 bits of
    // next() are tested against round(p * 2^53), so a seed replays the same
    // draws on any IEEE-754 platform. One draw per call.
    bool bernoulli(double p) {
        const auto threshold =
            static_cast<std::uint64_t>(std::llround(p * 9007199254740992.0));  // 2^53
        return (next() >> 11) < threshold;
    }

    // Uniform double in [0, 1) from the top 53 bits. One draw per call.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace cb
