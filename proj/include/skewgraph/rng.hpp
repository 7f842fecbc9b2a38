#pragma once

#include "skewgraph/rational.hpp"

#include <cstdint>

namespace skewgraph {

/// Counter-based splittable generator. Output i of stream (key) is a pure
/// function mix(key, i), so results are identical across platforms, thread
/// counts, and evaluation orders; derive() gives statistically independent
/// substreams for parallel work.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : key_(scramble(seed ^ 0x5bf0f1eb9c365a05ull)) {}

    std::uint64_t next_u64() { return scramble(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    /// Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform dyadic rational in [0,1), exact value of next_double().
    Rational next_dyadic() {
        return Rational(BigInt(next_u64() >> 11), BigInt(1) << 53);
    }

    /// Uniform integer in [0, n). n must be positive; modulo bias is below
    /// 2^-40 for the n used here (alphabet sizes, word lengths).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Independent child stream; derive(i) != derive(j) streams for i != j.
    Rng derive(std::uint64_t index) const {
        Rng child(0);
        child.key_ = scramble(key_ ^ scramble(index + 0x6a09e667f3bcc909ull));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t key() const { return key_; }

  private:
    static std::uint64_t scramble(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

}  // namespace skewgraph
