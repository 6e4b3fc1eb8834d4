#pragma once

#include <cmath>
#include <cstdint>

namespace extval::rng {

// splitmix64 step; also used as the seed-mixing function.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derive an independent sub-seed from (seed, a, b). All randomness in the
// library flows through this derivation so replays are exact regardless of
// thread count or execution order.
inline std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
    std::uint64_t s = mix64(seed ^ 0x7f4a7c15a5a5a5a5ULL);
    s = mix64(s ^ mix64(a ^ 0xd1b54a32d192ed03ULL));
    s = mix64(s ^ mix64(b ^ 0x8cb92ba72f3d8dd7ULL));
    return s;
}

// Deterministic random stream keyed by (seed, streamId, index).
// Uniforms come from splitmix64; normals from Box-Muller, so the sequence is
// bit-reproducible across platforms.
class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t streamId, std::uint64_t index)
        : state_(derive(seed, streamId, index)) {}

    std::uint64_t nextU64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the second deviate of each pair is cached.
    double normal() {
        if (haveSpare_) {
            haveSpare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        haveSpare_ = true;
        return r * std::cos(theta);
    }

    // Integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return nextU64() % n; }

private:
    std::uint64_t state_;
    bool haveSpare_ = false;
    double spare_ = 0.0;
};

}  // namespace extval::rng
