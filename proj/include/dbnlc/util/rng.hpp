#pragma once

#include <cstdint>
#include <span>

namespace dbnlc::rng {

/// SplitMix64. Used both as a small fast generator and to derive
/// independent streams from (seed, stream id) pairs; results must not
/// depend on how work is scheduled across workers.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    uint64_t below(uint64_t n) { return next() % n; }

    /// Standard normal via Box-Muller.
    double normal();

    /// Index drawn from unnormalized non-negative weights.
    int categorical(std::span<const double> weights);

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Deterministic sub-stream seed for (seed, a, b).
uint64_t derive(uint64_t seed, uint64_t a, uint64_t b = 0);

} // namespace dbnlc::rng
