#ifndef RSB_RNG_HPP
#define RSB_RNG_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace rsb {

// Seeded random source. Every consumer (schedule, memory, replay, learner)
// gets its own named sub-stream so that adding a consumer never shifts the
// draws seen by another one.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    // Independent stream derived from (seed, name).
    static Rng substream(std::uint64_t seed, std::string_view name);

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

    // Uniform in [0, n). n must be > 0.
    std::size_t index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    double normal(double mean, double stddev) {
        return std::normal_distribution<double>(mean, stddev)(engine_);
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view s);

}  // namespace rsb

#endif  // RSB_RNG_HPP
