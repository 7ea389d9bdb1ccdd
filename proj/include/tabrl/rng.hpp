#pragma once

// Counter-based pseudo-random stream. A draw is a pure function of
// (seed, stream_id, counter), so any draw can be reproduced from its key
// alone and independent workers never share state. The convention for
// stream ids: iteration index for synchronous sample tables, run index
// for trajectories and experiment repetitions.

#include <cstdint>

namespace tabrl {

/// 64-bit finalizer (Stafford mix13); bijective, strong avalanche.
constexpr uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

/// Derives an independent sub-seed, e.g. one per run index.
constexpr uint64_t derive_seed(uint64_t seed, uint64_t id) {
    return mix64(mix64(seed + kGolden) ^ (id + kGolden));
}

struct RngStream {
    uint64_t seed = 0;
    uint64_t stream_id = 0;
    uint64_t counter = 0;

    RngStream() = default;
    RngStream(uint64_t seed_, uint64_t stream_id_) : seed(seed_), stream_id(stream_id_) {}

    /// Keyed access: the k-th word of this stream, independent of `counter`.
    uint64_t word_at(uint64_t k) const {
        uint64_t z = mix64(seed + kGolden);
        z = mix64(z ^ (stream_id + kGolden));
        z = mix64(z ^ (k + kGolden));
        return z;
    }

    /// Keyed uniform double in [0,1) with 53 random bits.
    double double_at(uint64_t k) const {
        return static_cast<double>(word_at(k) >> 11) * 0x1.0p-53;
    }

    uint64_t next_u64() { return word_at(counter++); }
    double next_double() { return double_at(counter++); }
};

} // namespace tabrl
