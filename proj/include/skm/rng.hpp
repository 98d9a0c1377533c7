#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace skm {

/// Philox4x32-10 counter-based generator.
///
/// A (seed, stream) pair names an independent random stream, so parallel
/// trials can each own `Philox(seed, trial_index)` without coordination.
/// All derived draws (doubles, gaussians, integer ranges) are computed with
/// explicit arithmetic so that a given (seed, stream) replays the same
/// sequence on every build.
class Philox {
public:
    explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept
        : seed_(seed), stream_(stream) {
        key_ = {static_cast<std::uint32_t>(seed),
                static_cast<std::uint32_t>(seed >> 32)};
        ctr_ = {0u, 0u,
                static_cast<std::uint32_t>(stream),
                static_cast<std::uint32_t>(stream >> 32)};
    }

    /// Independent stream derived from the same master seed.
    Philox split(std::uint64_t stream) const noexcept { return Philox(seed_, stream); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    std::uint32_t next_u32() noexcept {
        if (avail_ == 0) refill();
        return buf_[--avail_];
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; generates in pairs.
    double next_gaussian() noexcept {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(t);
        have_cached_ = true;
        return r * std::cos(t);
    }

    /// Unbiased uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) noexcept {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

private:
    static constexpr std::uint32_t kMult0 = 0xD2511F53u;
    static constexpr std::uint32_t kMult1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    void refill() noexcept {
        std::array<std::uint32_t, 4> c = ctr_;
        std::array<std::uint32_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMult0) * c[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMult1) * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0],
                 static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1],
                 static_cast<std::uint32_t>(p0)};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        buf_ = c;
        avail_ = 4;
        // 128-bit counter increment
        if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::array<std::uint32_t, 2> key_{};
    std::array<std::uint32_t, 4> ctr_{};
    std::array<std::uint32_t, 4> buf_{};
    int avail_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace skm
