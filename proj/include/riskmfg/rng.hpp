#pragma once

#include <cstdint>
#include <limits>

namespace riskmfg {

inline std::uint64_t splitmix64(std::uint64_t& s) {
    std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// xoshiro256++ keyed by (seed, index, stream); one instance per path and noise source.
class Xoshiro256pp {
public:
    using result_type = std::uint64_t;

    Xoshiro256pp(std::uint64_t seed, std::uint64_t index, std::uint64_t stream) {
        std::uint64_t s = seed;
        s = splitmix64(s) ^ (index * 0xd1342543de82ef95ULL);
        s = splitmix64(s) ^ (stream * 0xa0761d6478bd642fULL);
        for (auto& w : s_) w = splitmix64(s);
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        const std::uint64_t r = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return r;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

enum StreamId : std::uint64_t { kBankStream = 1, kMarketStream = 2, kCommonStream = 3 };

}  // namespace riskmfg
