#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace mda {

// Seeded pseudo-random stream. Every distribution is implemented here on top
// of the raw mt19937_64 output so sequences are identical across standard
// library implementations.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t position() const { return draws_; }

    std::uint64_t next_u64();
    // [0, 1)
    double uniform();
    double uniform(double lo, double hi);
    // [0, n), unbiased
    std::size_t below(std::size_t n);
    double normal();
    bool bernoulli(double p_true);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }
    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::uint64_t draws_ = 0;
    bool has_spare_normal_ = false;
    double spare_normal_ = 0.0;
};

// Deterministic sub-seed for a named component of a run.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_id);

} // namespace mda
