#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace coachsim {

/// Seeded random source. Draws are reproducible across platforms and
/// standard libraries: the engine is mt19937_64 and the range reduction is
/// done here rather than by std::uniform_int_distribution.
///
/// Not thread-safe; give each task its own instance.
class Rng
{
public:
    explicit Rng(std::uint64_t seed)
    : engine_(seed)
    { }

    [[nodiscard]] std::uint64_t next() { return engine_(); }

    /// Uniform in [0, n). n must be positive.
    [[nodiscard]] std::size_t uniform_index(std::size_t n);

    /// Fair coin.
    [[nodiscard]] bool coin() { return (engine_() >> 63) != 0; }

    /// Uniform in [0, 1).
    [[nodiscard]] double uniform01();

    /// k distinct indices from [0, n), uniformly, in draw order.
    [[nodiscard]] std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    /// Random RFC 4122 version-4 UUID string.
    [[nodiscard]] std::string uuid4();

private:
    std::mt19937_64 engine_;
};

template <typename T>
T const & pick(Rng & rng, std::span<T const> values)
{
    return values[rng.uniform_index(values.size())];
}

} // namespace coachsim
