#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>

namespace dsmm::num {

/// xoshiro256** keyed by (seed, stream label).
///
/// Everything is integer arithmetic plus log/sqrt/cos for normals, so a given
/// (seed, stream, call sequence) reproduces on any conforming platform. Named
/// sub-streams from split() depend only on the seed and the label path, never
/// on how many draws the parent has made.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::string_view stream = "");

    Rng split(std::string_view label) const;

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Standard normal (Box-Muller, one draw per call).
    double normal();
    // Uniform on {0, ..., bound - 1}. bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    std::uint64_t seed() const { return seed_; }
    const std::string& stream() const { return stream_; }

private:
    std::uint64_t seed_;
    std::string stream_;
    std::array<std::uint64_t, 4> state_{};
};

}  // namespace dsmm::num
