#pragma once

#include <cmath>
#include <cstdint>

namespace sonc {

// Counter-based generator: every output is a pure function of
// (seed, stream, counter), so sampling is reproducible bit-for-bit on any
// platform and streams can be consumed concurrently without shared state.
//
// The word function is two rounds of the splitmix64 finalizer over the
// 192-bit input, which is more than enough mixing for Monte-Carlo use.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() { return word(seed_, stream_, counter_++); }

    // Uniform on [0, 1): 53 random mantissa bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1]: never returns 0, safe for logs.
    double next_double_open0() { return 1.0 - next_double(); }

    bool next_bool() { return (next_u64() >> 63) != 0; }

    // Standard normal via Box-Muller; one value per call, no cached state,
    // so the counter advances by exactly two words.
    double next_gaussian() {
        double u1 = next_double_open0();
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

    static std::uint64_t word(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t counter) {
        std::uint64_t x = mix(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
        x = mix(x ^ mix(counter + 0xbf58476d1ce4e5b9ULL));
        return x;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

} // namespace sonc
