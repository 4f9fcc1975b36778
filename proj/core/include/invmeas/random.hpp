#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace invmeas {

/// Philox4x32-10 counter-based block function.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter ctr, Key key) {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
                   static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Deterministic stream keyed by (seed, a, b). Block j of the stream is
/// Philox(counter = (j_lo, j_hi, a, b), key = seed); every block yields two
/// uniforms and, through Box-Muller, two standard normals.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint32_t a, std::uint32_t b)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}, a_(a), b_(b) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() {
        if (cached_uniforms_ == 0) refill_uniforms();
        return uniforms_[2 - cached_uniforms_--];
    }

    double normal() {
        if (has_normal_) {
            has_normal_ = false;
            return spare_normal_;
        }
        const auto words = next_block();
        const double u1 = to_unit(words[0], words[1]);
        const double u2 = to_unit(words[2], words[3]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_normal_ = r * std::sin(angle);
        has_normal_ = true;
        return r * std::cos(angle);
    }

    std::uint64_t blocks_used() const { return counter_; }

private:
    static double to_unit(std::uint32_t hi, std::uint32_t lo) {
        const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
        return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    }

    Philox4x32::Counter next_block() {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                      static_cast<std::uint32_t>(counter_ >> 32), a_, b_};
        ++counter_;
        return Philox4x32::block(ctr, key_);
    }

    void refill_uniforms() {
        const auto words = next_block();
        uniforms_[0] = to_unit(words[0], words[1]);
        uniforms_[1] = to_unit(words[2], words[3]);
        cached_uniforms_ = 2;
    }

    Philox4x32::Key key_;
    std::uint32_t a_;
    std::uint32_t b_;
    std::uint64_t counter_ = 0;
    double uniforms_[2] = {0.0, 0.0};
    int cached_uniforms_ = 0;
    double spare_normal_ = 0.0;
    bool has_normal_ = false;
};

} // namespace invmeas
