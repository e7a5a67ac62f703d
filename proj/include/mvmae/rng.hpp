#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>

namespace mvmae {

// Portable random source. The engine is std::mt19937_64 (fully specified by
// the standard); the distributions are implemented here because the standard
// library ones are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), rejection-sampled.
    std::size_t below(std::size_t n);

    bool bernoulli(double p) { return uniform() < p; }

    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Normal(0, stddev) resampled until |x| <= bound * stddev.
    double truncated_normal(double stddev, double bound = 2.0);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

    std::string state() const;
    void set_state(const std::string& text);

    // Stateless seed derivation: mixes a base seed with a key path so that
    // per-(step, study, view) streams are independent of execution order.
    static std::uint64_t derive(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

private:
    std::mt19937_64 engine_;
};

}  // namespace mvmae
