#pragma once

// Counter-based random numbers (Philox4x64-10). Every value is a pure
// function of (seed, chain_id, stream_tag, index), so chains can be run in
// any order, on any number of threads, or resumed, and reproduce bit-exactly.

#include <array>
#include <cmath>
#include <cstdint>

namespace ulang {

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

struct PhiloxKey {
    std::uint64_t k0, k1;
};

// 10-round Philox 4x64 block cipher on a 256-bit counter.
inline std::array<std::uint64_t, 4> philox4x64(std::array<std::uint64_t, 4> ctr, PhiloxKey key) {
    constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ull;
    constexpr std::uint64_t m1 = 0xCA5A826395121157ull;
    constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ull;
    constexpr std::uint64_t w1 = 0xBB67AE8584CAA73Bull;
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        detail::mulhilo64(m0, ctr[0], hi0, lo0);
        detail::mulhilo64(m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key.k0, lo1, hi0 ^ ctr[3] ^ key.k1, lo0};
        key.k0 += w0;
        key.k1 += w1;
    }
    return ctr;
}

// Maps to the open interval (0,1); never returns 0 or 1 (safe under log()).
// Uses the odd multiples of 2^-53, so both endpoints stay a full ulp away.
inline double u64_to_unit(std::uint64_t x) {
    return static_cast<double>((x >> 11) | 1ull) * 0x1.0p-53;
}

// Stream of iid N(0,1) values with random access by index. One Philox call
// yields a block of four gaussians (two Box-Muller pairs); the last block is
// cached, which makes sequential access cheap. Not thread-safe: intended to
// be owned by a single chain.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t chain_id, std::uint64_t stream_tag)
        : key_{seed, chain_id}, tag_(stream_tag) {}

    double operator()(std::uint64_t i) const {
        const std::uint64_t block = i >> 2;
        if (block != cached_block_) fill(block);
        return vals_[i & 3];
    }

private:
    void fill(std::uint64_t block) const {
        const auto r = philox4x64({tag_, block, 0x67617573ull /*"gaus"*/, 0}, key_);
        const double u0 = u64_to_unit(r[0]);
        const double u1 = u64_to_unit(r[1]);
        const double u2 = u64_to_unit(r[2]);
        const double u3 = u64_to_unit(r[3]);
        const double r0 = std::sqrt(-2.0 * std::log(u0));
        const double r1 = std::sqrt(-2.0 * std::log(u2));
        constexpr double two_pi = 6.283185307179586476925286766559;
        vals_[0] = r0 * std::cos(two_pi * u1);
        vals_[1] = r0 * std::sin(two_pi * u1);
        vals_[2] = r1 * std::cos(two_pi * u3);
        vals_[3] = r1 * std::sin(two_pi * u3);
        cached_block_ = block;
    }

    PhiloxKey key_;
    std::uint64_t tag_;
    mutable std::uint64_t cached_block_ = ~0ull;
    mutable std::array<double, 4> vals_{};
};

// Uniform (0,1) companion of GaussianStream, same keying scheme.
class UniformStream {
public:
    UniformStream(std::uint64_t seed, std::uint64_t chain_id, std::uint64_t stream_tag)
        : key_{seed, chain_id}, tag_(stream_tag) {}

    double operator()(std::uint64_t i) const {
        const std::uint64_t block = i >> 2;
        if (block != cached_block_) {
            const auto r = philox4x64({tag_, block, 0x756e6966ull /*"unif"*/, 0}, key_);
            for (int j = 0; j < 4; ++j) vals_[j] = u64_to_unit(r[j]);
            cached_block_ = block;
        }
        return vals_[i & 3];
    }

private:
    PhiloxKey key_;
    std::uint64_t tag_;
    mutable std::uint64_t cached_block_ = ~0ull;
    mutable std::array<double, 4> vals_{};
};

// Namespacing of the 64-bit chain_id so that unrelated random purposes inside
// one experiment never share a stream.
namespace chan {
constexpr std::uint64_t paths = 0;
constexpr std::uint64_t init = 1ull << 56;
constexpr std::uint64_t reference = 2ull << 56;
constexpr std::uint64_t bootstrap = 3ull << 56;
constexpr std::uint64_t directions = 4ull << 56;
}  // namespace chan

inline std::uint64_t fnv1a(const char* s) {
    std::uint64_t h = 1469598103934665603ull;
    for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 1099511628211ull;
    }
    return h;
}

}  // namespace ulang
