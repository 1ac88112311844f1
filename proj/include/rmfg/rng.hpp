// Deterministic random number streams. Every consumer derives its own stream
// from (root seed, module tag, indices) with splitmix64, so output is
// bit-identical for a fixed root seed no matter how work is scheduled.
#ifndef RMFG_RNG_HPP
#define RMFG_RNG_HPP

#include <cmath>
#include <cstdint>

namespace rmfg {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream tags for the documented seed tree. Arbitrary fixed constants; what
// matters is that distinct consumers never share a stream.
namespace stream {
constexpr std::uint64_t kPaths = 0x70617468u;       // simulate_reflected
constexpr std::uint64_t kPhi = 0x706869u;           // fixed-point map simulations
constexpr std::uint64_t kNPlayer = 0x6e706c61u;     // n-player system noise
constexpr std::uint64_t kProbe = 0x70726f62u;       // assumption spot checks
constexpr std::uint64_t kSelfTest = 0x73656c66u;    // self-consistency re-simulation
}  // namespace stream

// Folds a tag and up to three indices into a fresh 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag,
                                 std::uint64_t i0 = 0, std::uint64_t i1 = 0,
                                 std::uint64_t i2 = 0) {
    std::uint64_t s = root;
    std::uint64_t z = splitmix64(s) ^ tag;
    z = splitmix64(z) ^ i0;
    z = splitmix64(z) ^ i1;
    z = splitmix64(z) ^ i2;
    splitmix64(z);
    return z;
}

// xoshiro256++ (Blackman & Vigna). Small, fast, and easy to seed from
// splitmix64, which is the reference recommendation.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_) word = splitmix64(sm);
    }
    std::uint64_t next() {
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }
    // Uniform on (0, 1]: 53-bit mantissa, never exactly zero (safe for log).
    double uniform() { return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53; }
    // One standard normal per call via Box-Muller (cosine branch only, so the
    // draw count per step is fixed and streams stay alignment-free).
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

}  // namespace rmfg

#endif
