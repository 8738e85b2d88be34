#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace stripmc {

/// Counter-based random stream: Philox4x64-10, keyed by (seed, stream_id).
///
/// Streams with distinct keys are statistically independent, so a batch can
/// hand stream i to particle i and the draw sequence of every particle is
/// fixed by (seed, i) alone, regardless of which worker runs it. The
/// generator matches NumPy's Philox bit for bit (counter incremented before
/// each block, outputs in state order), which the unit tests pin against
/// frozen NumPy output.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{seed, stream_id} {}

    std::uint64_t next_u64() {
        if (buf_pos_ == 4) refill();
        return buf_[buf_pos_++];
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1), never returns an endpoint.
    double open01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform on [a, b).
    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Exponential with the given mean; strictly positive.
    double exponential(double mean) { return -mean * std::log(open01()); }

    std::uint64_t seed() const { return key_[0]; }
    std::uint64_t stream_id() const { return key_[1]; }

private:
    static constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

    static std::uint64_t mulhi(std::uint64_t a, std::uint64_t b) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(a) * b) >> 64);
    }

    void refill() {
        for (int i = 0; i < 4; ++i) {
            if (++ctr_[i] != 0) break;  // carry
        }
        std::array<std::uint64_t, 4> c = ctr_;
        std::array<std::uint64_t, 2> k = key_;
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t lo0 = c[0] * kMul0, hi0 = mulhi(c[0], kMul0);
            const std::uint64_t lo1 = c[2] * kMul1, hi1 = mulhi(c[2], kMul1);
            c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
            k[0] += kWeyl0;
            k[1] += kWeyl1;
        }
        buf_ = c;
        buf_pos_ = 0;
    }

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
    std::array<std::uint64_t, 4> buf_{};
    int buf_pos_{4};
};

/// splitmix64 finalizer; used to derive independent seeds (sweep points,
/// baselines) from a base seed and an index.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace stripmc
