#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace corolla {

// PCG32 (XSH-RR 64/32). 64-bit state, 63-bit stream selector; matches the
// reference generator output stream for a given (seed, stream).
class Pcg32 {
  public:
    explicit Pcg32(std::uint64_t seed, std::uint64_t stream = 0) {
        state_ = 0u;
        inc_ = (stream << 1u) | 1u;
        next_u32();
        state_ += seed;
        next_u32();
    }

    std::uint32_t next_u32() {
        std::uint64_t old = state_;
        state_ = old * 6364136223846793005ULL + inc_;
        std::uint32_t xorshifted =
            static_cast<std::uint32_t>(((old >> 18u) ^ old) >> 27u);
        std::uint32_t rot = static_cast<std::uint32_t>(old >> 59u);
        return (xorshifted >> rot) | (xorshifted << ((-rot) & 31u));
    }

    // Unbiased integer in [0, bound) via Lemire-style rejection.
    std::uint32_t next_below(std::uint32_t bound) {
        std::uint32_t threshold = (-bound) % bound;
        for (;;) {
            std::uint32_t r = next_u32();
            if (r >= threshold) return r % bound;
        }
    }

    // Uniform in [0, 1), 32 bits of resolution.
    double next_double() {
        return next_u32() * 0x1.0p-32;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double();
    }

    // Box-Muller; draws two uniforms per call, no cached spare so the
    // stream position is a pure function of the call count.
    double gaussian() {
        double u1 = 1.0 - next_double();  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

  private:
    std::uint64_t state_;
    std::uint64_t inc_;
};

// FNV-1a, used for stable stream splitting and config hashing.
inline std::uint64_t fnv1a64(std::string_view bytes,
                             std::uint64_t h = 1469598103934665603ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64_u64(std::uint64_t v, std::uint64_t h) {
    for (int i = 0; i < 8; ++i) {
        h ^= (v >> (8 * i)) & 0xffu;
        h *= 1099511628211ULL;
    }
    return h;
}

// Deterministic child stream: one labeled fork per (seed, label, indices).
inline Pcg32 fork_stream(std::uint64_t seed, std::string_view label,
                         std::uint64_t a = 0, std::uint64_t b = 0,
                         std::uint64_t c = 0) {
    std::uint64_t h = fnv1a64(label);
    h = fnv1a64_u64(a, h);
    h = fnv1a64_u64(b, h);
    h = fnv1a64_u64(c, h);
    return Pcg32(seed, h >> 1);  // stream selector is 63-bit
}

}  // namespace corolla
