#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace textsmooth {

// splitmix64 finalizer; used to derive independent stream seeds from
// (seed, epoch, step, slot) tuples so every phase has its own stream.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
    return mix64(mix64(a) ^ (b + 0x9e3779b97f4a7c15ULL));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix64(mix64(a, b), c);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                           std::uint64_t d) {
    return mix64(mix64(a, b, c), d);
}

// mt19937_64 with hand-rolled distributions. The standard pins the engine
// output but not the distributions, so sampling is done here to keep runs
// reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // [0, 1), 53-bit resolution
    double uniform() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Box-Muller, one draw per call (the sine half is discarded so the
    // consumption pattern stays fixed)
    double gaussian() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    double truncated_normal(double sigma, double clip) {
        for (;;) {
            const double x = gaussian() * sigma;
            if (std::fabs(x) <= clip) {
                return x;
            }
        }
    }

    // [0, n), rejection sampled
    int uniform_int(int n) {
        const std::uint64_t un = static_cast<std::uint64_t>(n);
        const std::uint64_t bound = ~std::uint64_t{0} - (~std::uint64_t{0} % un);
        for (;;) {
            const std::uint64_t r = next();
            if (r < bound) {
                return static_cast<int>(r % un);
            }
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

// Fisher-Yates
inline std::vector<int> permutation(int n, Rng& rng) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] = i;
    }
    for (int i = n - 1; i > 0; --i) {
        const int j = rng.uniform_int(i + 1);
        std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
    }
    return p;
}

} // namespace textsmooth
