#pragma once

#include <cstdint>
#include <random>

namespace rim {

// splitmix64; used to derive independent substream seeds from one user seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Deterministic substream seed from (seed, tag_a, tag_b).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag_a, std::uint64_t tag_b = 0) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s ^= tag_a + 0x632be59bd9b4e019ull;
    h ^= splitmix64(s);
    s ^= tag_b + 0x1d8e4e27c47d124full;
    h ^= splitmix64(s);
    return h;
}

/// Seeded standard-normal stream. One instance per substream.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}
    double operator()() { return dist_(eng_); }

private:
    std::mt19937_64 eng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

/// Seeded uniform stream on [0, 1).
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed) : eng_(seed) {}
    double operator()() { return dist_(eng_); }
    /// Uniform on [a, b).
    double operator()(double a, double b) { return a + (b - a) * dist_(eng_); }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> dist_{0.0, 1.0};
};

} // namespace rim
