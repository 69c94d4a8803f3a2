#pragma once

#include <cstdint>
#include <limits>

namespace phonon_uq {

// SplitMix64 finalizer; the mixing core of the counter-based generator below.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derive an independent stream key from a parent key and a stream id.
constexpr std::uint64_t derive_key(std::uint64_t key, std::uint64_t stream) noexcept
{
    return mix64(mix64(key) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

/**
 * Counter-based generator: output n is a pure function of (key, n).
 *
 * Any (sample, dimension) pair can get its own substream through
 * derive_key, so results do not depend on evaluation order or thread count.
 * Satisfies UniformRandomBitGenerator.
 */
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key, std::uint64_t counter = 0) noexcept
        : key_(key), counter_(counter) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        return mix64(mix64(key_) ^ (counter_++ * 0xd1b54a32d192ed03ULL));
    }

    /// Uniform double in the open interval (0, 1).
    double uniform() noexcept
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Unbiased integer in [0, n); n must be > 0.
    std::uint64_t bounded(std::uint64_t n) noexcept
    {
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = (*this)();
            if (r >= threshold) return r % n;
        }
    }

    constexpr CounterRng substream(std::uint64_t stream) const noexcept
    {
        return CounterRng(derive_key(key_, stream));
    }

    constexpr std::uint64_t key() const noexcept { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace phonon_uq
