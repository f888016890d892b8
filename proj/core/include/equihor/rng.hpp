#pragma once

#include <array>
#include <cstdint>

namespace equihor {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless:
// every draw is a pure function of (key, counter), so streams can be consumed
// in any order and on any number of workers.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter generate(Counter counter, Key key) noexcept;
};

// Draws keyed by (seed, stream, index). `stream` is typically a path id and
// `index` a time-step id.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

    // Uniform on the open interval (0, 1).
    double uniform(std::uint64_t stream, std::uint64_t index) const noexcept;

    // Standard normal via Box-Muller on one Philox block.
    double normal(std::uint64_t stream, std::uint64_t index) const noexcept;

private:
    Philox4x32::Counter block(std::uint64_t stream, std::uint64_t index) const noexcept;

    std::uint64_t seed_;
    Philox4x32::Key key_;
};

}  // namespace equihor
