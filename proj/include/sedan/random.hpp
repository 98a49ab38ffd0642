#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace sedan {

using Rng = std::mt19937_64;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;

/// SplitMix64 finalizer; used to turn structured keys into well-spread seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive combination of 64-bit words into a single seed.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) noexcept {
    std::uint64_t h = 0x6a09e667f3bcc909ULL;
    for (std::uint64_t w : words) h = mix64(h ^ mix64(w));
    return h;
}

/// M x N matrix of i.i.d. CN(0, variance) entries (real and imaginary parts N(0, variance/2)).
inline ComplexMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                      double variance = 1.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
    ComplexMatrix out(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            out(i, j) = {re, im};
        }
    return out;
}

}  // namespace sedan
