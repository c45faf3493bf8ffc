#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace pvn {

// Counter-based Philox4x64-10 block cipher. A (seed, stream_id) pair keys an
// independent stream; the 256-bit counter indexes blocks within the stream, so
// any number of parallel replications can draw from non-overlapping substreams
// and replay is exact.
struct philox4x64 {
    static constexpr std::uint64_t M0 = 0xD2E7470EE14C6C93ULL;
    static constexpr std::uint64_t M1 = 0xCA5A826395121157ULL;
    static constexpr std::uint64_t W0 = 0x9E3779B97F4A7C15ULL;
    static constexpr std::uint64_t W1 = 0xBB67AE8584CAA73BULL;

    static void mulhilo(std::uint64_t a, std::uint64_t b,
                        std::uint64_t& hi, std::uint64_t& lo) {
        unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        hi = static_cast<std::uint64_t>(p >> 64);
        lo = static_cast<std::uint64_t>(p);
    }

    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> x,
                                              std::array<std::uint64_t, 2> k) {
        for (int round = 0; round < 10; ++round) {
            std::uint64_t hi0, lo0, hi1, lo1;
            mulhilo(M0, x[0], hi0, lo0);
            mulhilo(M1, x[2], hi1, lo1);
            x = {hi1 ^ x[1] ^ k[0], lo1, hi0 ^ x[3] ^ k[1], lo0};
            k[0] += W0;
            k[1] += W1;
        }
        return x;
    }
};

// Identifies one reproducible random stream. Identical (seed, stream_id) and
// identical draw order give byte-identical output on every platform.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;
};

// UniformRandomBitGenerator over a Philox stream.
class rng_stream {
public:
    using result_type = std::uint64_t;

    explicit rng_stream(RngSeed s) : key_{s.seed, s.stream_id} {}
    rng_stream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{seed, stream_id} {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() {
        return std::numeric_limits<std::uint64_t>::max();
    }

    result_type operator()() {
        if (idx_ == 4) {
            buf_ = philox4x64::block(ctr_, key_);
            idx_ = 0;
            if (++ctr_[0] == 0 && ++ctr_[1] == 0 && ++ctr_[2] == 0) ++ctr_[3];
        }
        return buf_[idx_++];
    }

    // Uniform double in [0,1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> ctr_{0, 0, 0, 0};
    std::array<std::uint64_t, 4> buf_{};
    int idx_ = 4;
};

}  // namespace pvn
