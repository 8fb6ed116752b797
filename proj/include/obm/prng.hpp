#pragma once

#include <cstdint>

#include "obm/rational.hpp"

namespace obm {

// SplitMix64. Chosen over std::mt19937 because its output is pinned by the
// reference constants below, so runs are reproducible across platforms and
// standard-library versions.
struct SplitMix64 {
    uint64_t state = 0;

    explicit SplitMix64(uint64_t seed = 0) : state(seed) {}

    uint64_t next() {
        uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) by rejection; bound >= 1.
    uint64_t below(uint64_t bound) {
        if (bound <= 1) return 0;
        uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        for (;;) {
            uint64_t v = next();
            if (v < limit) return v % bound;
        }
    }
};

// Fixed sub-seed derivation used for per-trial randomness: two SplitMix64
// scrambles keep trials decorrelated while staying a pure function of
// (master_seed, index). Parallel trial execution uses this, so results are
// independent of the job count.
inline uint64_t derive_seed(uint64_t master_seed, uint64_t index) {
    SplitMix64 a(master_seed);
    uint64_t m = a.next();
    SplitMix64 b(m ^ (index + 0x9E3779B97F4A7C15ULL));
    b.next();
    return b.next();
}

// Stream of unbiased bits backed by SplitMix64, with exact-rational Bernoulli
// and categorical draws. A Bernoulli(p) draw compares the bit stream against
// the binary expansion of p digit by digit, so the outcome probability is
// exactly p; roughly two bits are consumed per draw in expectation.
class BitStream {
  public:
    explicit BitStream(uint64_t seed) : rng_(seed) {}

    int next_bit() {
        if (avail_ == 0) {
            buf_ = rng_.next();
            avail_ = 64;
        }
        int b = static_cast<int>(buf_ & 1);
        buf_ >>= 1;
        --avail_;
        ++consumed_;
        return b;
    }

    uint64_t next_bits(int count) {
        uint64_t v = 0;
        for (int i = 0; i < count; ++i) v = (v << 1) | static_cast<uint64_t>(next_bit());
        return v;
    }

    bool bernoulli(const Rat& p) {
        if (p <= 0) return false;
        if (p >= 1) return true;
        Rat x = p;
        while (x != 0) {
            x *= 2;
            int digit = x >= 1 ? 1 : 0;
            if (digit) x -= 1;
            int u = next_bit();
            if (u < digit) return true;
            if (u > digit) return false;
        }
        return false;
    }

    // Draws from {0, 1, 2} with probabilities p0, p1, 1-p0-p1.
    int categorical3(const Rat& p0, const Rat& p1) {
        if (!bernoulli(p0 + p1)) return 2;
        Rat total = p0 + p1;
        if (total == 0) return 2;
        return bernoulli(p0 / total) ? 0 : 1;
    }

    uint64_t bits_consumed() const { return consumed_; }

  private:
    SplitMix64 rng_;
    uint64_t buf_ = 0;
    int avail_ = 0;
    uint64_t consumed_ = 0;
};

}  // namespace obm
