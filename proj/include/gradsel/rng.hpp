#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace gradsel {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
//
// Counter-based generation keeps every random draw addressable: a (key,
// counter) pair always produces the same block of numbers regardless of
// thread count or call order, which is what makes the simulation outputs
// bit-reproducible.  The key encodes (seed, stream); the counter encodes
// the position within the stream.
class Philox {
public:
    // Stream ids keep independent uses of the same seed from colliding.
    // Values are part of the output format contract: changing them changes
    // every simulated dataset.
    enum Stream : std::uint32_t {
        kDataStream = 1,
        kNoiseStream = 2,
        kFoldStream = 3,
        kGenericStream = 4,
    };

    Philox(std::uint64_t seed, std::uint32_t stream, std::uint64_t substream = 0)
        : key_{static_cast<std::uint32_t>(seed & 0xffffffffu),
               static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0,
                   static_cast<std::uint32_t>(substream & 0xffffffffu),
                   static_cast<std::uint32_t>((substream >> 32) ^ stream)} {}

    // Raw block access used by the known-answer tests.
    static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                              std::array<std::uint32_t, 2> key) {
        for (int round = 0; round < 10; ++round) {
            ctr = single_round(ctr, key);
            key[0] += 0x9E3779B9u;
            key[1] += 0xBB67AE85u;
        }
        return ctr;
    }

    std::uint32_t next_u32() {
        if (idx_ == 4) refill();
        return buffer_[idx_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        std::uint64_t lo = next_u32();
        return (hi << 32) | lo;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; caches the second variate.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        double u2 = uniform();
        while (u1 == 0.0) u1 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    static std::array<std::uint32_t, 4> single_round(const std::array<std::uint32_t, 4>& ctr,
                                                     const std::array<std::uint32_t, 2>& key) {
        constexpr std::uint64_t kMul0 = 0xD2511F53u;
        constexpr std::uint64_t kMul1 = 0xCD9E8D57u;
        std::uint64_t p0 = kMul0 * ctr[0];
        std::uint64_t p1 = kMul1 * ctr[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0)};
    }

    void refill() {
        buffer_ = block(counter_, key_);
        idx_ = 0;
        if (++counter_[0] == 0 && ++counter_[1] == 0) ++counter_[2];
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buffer_{};
    int idx_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace gradsel
