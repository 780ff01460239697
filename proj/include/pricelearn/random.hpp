#pragma once

#include <cstdint>
#include <random>

namespace pricelearn {

// SplitMix64 finalizer, used to turn structured ids into well-spread seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Seeded stream of doubles. Every uniform01() consumes exactly one engine
// draw, so two consumers that replay the same stream see the same draw order.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    // Independent stream for a (point, learner, replication) triple under one
    // master seed. Streams with different ids never share an engine state.
    static RandomStream derive(std::uint64_t master, std::uint64_t point,
                               std::uint64_t learner = 0, std::uint64_t replication = 0) {
        std::uint64_t s = mix64(master);
        s = mix64(s ^ mix64(point));
        s = mix64(s ^ mix64(learner));
        s = mix64(s ^ mix64(replication));
        return RandomStream(s);
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + uniform01() * (hi - lo); }

  private:
    std::mt19937_64 engine_;
};

} // namespace pricelearn
