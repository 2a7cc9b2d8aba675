#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace nrsi {

// Neumaier-compensated accumulator. Long reductions (norms, inner products,
// contraction cells) stay accurate to a few ulps regardless of length.
class Accumulator {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Scatter-add companion: sum/compensation buffers indexed in lockstep.
inline void compensated_add(double& sum, double& comp, double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
        comp += (sum - t) + v;
    } else {
        comp += (v - t) + sum;
    }
    sum = t;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives an independent, reproducible sub-stream seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream + 0x9e3779b97f4a7c15ULL));
}

// Uniform draw in [0, 1) that depends only on the engine's output sequence,
// not on library-specific distribution internals.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform draw in (0, 1]; used wherever strictly positive starts are required.
inline double uniform_positive(std::mt19937_64& rng) {
    return 1.0 - uniform01(rng);
}

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
}

// Shortest decimal text that parses back to the exact same double.
inline std::string to_roundtrip_string(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace nrsi
