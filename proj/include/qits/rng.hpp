// Copyright 2026 QITS Contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QITS_RNG_HPP
#define QITS_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qits {

/// Philox-4x32-10 counter-based generator (Salmon et al., "Parallel random
/// numbers: as easy as 1, 2, 3").
///
/// The 128-bit counter is split as {block_lo, block_hi, stream_lo, stream_hi}
/// and the 64-bit user seed forms the key. Every (seed, stream) pair therefore
/// addresses an independent sequence of 2^128 random bits: adding a new
/// substream to the simulator never perturbs draws made from existing ones,
/// and identical (seed, stream) always replays the identical sequence, which
/// is what makes whole simulation runs reproducible byte for byte.
struct Philox4x32 {
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    static std::array<uint32_t, 4> block(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
        for (int round = 0; round < 10; round++) {
            uint64_t p0 = uint64_t(kMul0) * ctr[0];
            uint64_t p1 = uint64_t(kMul1) * ctr[2];
            std::array<uint32_t, 4> next{
                uint32_t(p1 >> 32) ^ ctr[1] ^ key[0],
                uint32_t(p1),
                uint32_t(p0 >> 32) ^ ctr[3] ^ key[1],
                uint32_t(p0),
            };
            ctr = next;
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// Identifies what a substream is used for. The purpose tag occupies the top
/// bits of the 64-bit stream id; the low bits hold a caller-chosen index
/// (sweep point, detector channel, ...).
enum class Substream : uint64_t {
    pair_emission = 1,
    noise_emission = 2,
    channel_pairs = 3,
    channel_noise = 4,
    detector = 5,
    saturation = 6,
    resample = 7,
    test = 99,
};

constexpr uint64_t substream_id(Substream purpose, uint64_t index = 0) {
    return (uint64_t(purpose) << 48) | (index & 0x0000FFFFFFFFFFFFull);
}

/// One sequential stream of draws from a (seed, stream id) keyed Philox
/// sequence. Cheap to construct; copyable (the copy replays from the same
/// point).
class RngStream {
  public:
    RngStream(uint64_t seed, uint64_t stream)
        : key_{uint32_t(seed), uint32_t(seed >> 32)},
          stream_{uint32_t(stream), uint32_t(stream >> 32)} {}

    RngStream(uint64_t seed, Substream purpose, uint64_t index = 0)
        : RngStream(seed, substream_id(purpose, index)) {}

    uint32_t next_u32() {
        if (pos_ == 4) {
            refill();
        }
        return buf_[pos_++];
    }

    uint64_t next_u64() {
        uint64_t lo = next_u32();
        uint64_t hi = next_u32();
        return (hi << 32) | lo;
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return double(next_u64() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) {
        return uniform() < p;
    }

    /// Exponential waiting time with the given rate (mean 1/rate).
    double exponential(double rate) {
        // uniform() < 1 strictly, so the log argument stays in (0, 1].
        return -std::log1p(-uniform()) / rate;
    }

    /// Standard normal via Box-Muller; the second variate of each pair is
    /// cached, so draws alternate between two and zero uniforms.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(t);
        has_spare_ = true;
        return r * std::cos(t);
    }

    double normal(double mean, double sigma) {
        return mean + sigma * normal();
    }

  private:
    void refill() {
        buf_ = Philox4x32::block({uint32_t(block_), uint32_t(block_ >> 32), stream_[0], stream_[1]}, key_);
        block_++;
        pos_ = 0;
    }

    std::array<uint32_t, 2> key_;
    std::array<uint32_t, 2> stream_;
    uint64_t block_ = 0;
    std::array<uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace qits

#endif
