#pragma once

// Source enumeration from the distribution of angles between noise-residual snapshots.
//
// For each hypothesis k the snapshots are projected onto the orthogonal complement of the
// k dominant eigenvectors of the sample covariance. The pairwise angles between the projected
// columns are summarised by a Gaussian fit, consecutive fits are compared with the Bhattacharyya
// distance (score eta_k), and the rank estimate is the k after which eta_k drops the most.

#include "sedan/error.hpp"
#include "sedan/random.hpp"
#include "sedan/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace sedan {

/// Pairwise angles arccos(Re<b_i, b_j> / (|b_i| |b_j|)) for all i < j, row-major in (i, j).
struct AngleSet {
    std::vector<double> angles;

    std::size_t size() const { return angles.size(); }
};

struct GaussianSummary {
    double mean = 0.0;
    double variance = 0.0;
    std::size_t count = 0;
};

/// Scores eta_1..eta_K, K = min(M, N) - 1. `values[k - 1]` holds eta_k.
struct ScoreSeries {
    std::vector<double> values;
    /// Smallest residual dimension scored, M - K. Below 3 the Gaussian angle approximation is poor.
    int min_residual_dimension = 0;

    std::size_t size() const { return values.size(); }
    double eta(int k) const { return values.at(static_cast<std::size_t>(k - 1)); }
    bool low_dimension() const { return min_residual_dimension - 1 < 2; }
};

struct EnumerationResult {
    int rank_estimate = 0;
    ScoreSeries scores;
};

namespace detail {

// Relative column-norm floor below which a column counts as zero.
inline constexpr double kDegenerateColumnRatio = 1e-12;
// How far |cos| may stray past 1 before it is treated as a numerical failure instead of rounding.
inline constexpr double kCosineSlack = 1e-6;

inline double clamped_arccos(double c) {
    if (std::abs(c) > 1.0 + kCosineSlack)
        throw NumericalError("angle_set: normalized inner product " + std::to_string(c) + " outside [-1, 1]");
    return std::acos(std::clamp(c, -1.0, 1.0));
}

template <typename Derived>
AngleSet angle_set_impl(const Eigen::MatrixBase<Derived>& B) {
    const Eigen::Index N = B.cols();
    if (N < 2) throw InvalidArgument("angle_set: need at least two columns");
    const ComplexMatrix gram = B.adjoint() * B;
    Eigen::VectorXd norms = gram.diagonal().real().cwiseMax(0.0).cwiseSqrt();
    const double floor = kDegenerateColumnRatio * norms.maxCoeff();
    for (Eigen::Index j = 0; j < N; ++j)
        if (!(norms(j) > floor))
            throw DegenerateInput("angle_set: column " + std::to_string(j) + " has near-zero norm");

    AngleSet out;
    out.angles.reserve(static_cast<std::size_t>(N * (N - 1) / 2));
    for (Eigen::Index i = 0; i < N; ++i)
        for (Eigen::Index j = i + 1; j < N; ++j)
            out.angles.push_back(clamped_arccos(gram(i, j).real() / (norms(i) * norms(j))));
    return out;
}

}  // namespace detail

inline AngleSet angle_set(const ComplexMatrix& B) { return detail::angle_set_impl(B); }

inline GaussianSummary summarize(const AngleSet& set) {
    const auto n = set.angles.size();
    if (n < 2) throw InvalidArgument("summarize: need at least two angles");
    double mean = 0.0;
    for (double a : set.angles) mean += a;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double a : set.angles) ss += (a - mean) * (a - mean);
    return {mean, ss / static_cast<double>(n - 1), n};
}

/// Bhattacharyya distance between N(mu1, var1) and N(mu2, var2).
inline double bhattacharyya(double mu1, double var1, double mu2, double var2) {
    if (!(var1 > 0.0) || !(var2 > 0.0)) throw InvalidArgument("bhattacharyya: variances must be positive");
    const double sum = var1 + var2;
    const double d = mu1 - mu2;
    return 0.25 * d * d / sum + 0.5 * std::log(sum / (2.0 * std::sqrt(var1 * var2)));
}

inline double empirical_bd(const GaussianSummary& s1, const GaussianSummary& s2) {
    if (!(s1.variance > 0.0) || !(s2.variance > 0.0))
        throw DegenerateInput("empirical_bd: angle set has zero sample variance");
    return bhattacharyya(s1.mean, s1.variance, s2.mean, s2.variance);
}

inline double empirical_bd(const AngleSet& s1, const AngleSet& s2) {
    return empirical_bd(summarize(s1), summarize(s2));
}

/// Score series using a caller-supplied decomposition of the sample covariance of X.
inline ScoreSeries score_series(const ComplexMatrix& X, const SpectralDecomposition& decomp) {
    const auto M = static_cast<int>(X.rows());
    const auto N = static_cast<int>(X.cols());
    if (M < 5) throw InvalidArgument("score_series: need at least 5 antennas, got " + std::to_string(M));
    if (N < 2) throw InvalidArgument("score_series: need at least 2 snapshots, got " + std::to_string(N));

    const int K = std::min(M, N) - 1;
    const ComplexMatrix coords = eigenbasis_coordinates(X, decomp);

    auto summary_at = [&](int k) {
        try {
            return summarize(detail::angle_set_impl(coords.bottomRows(M - k)));
        } catch (const DegenerateInput& e) {
            throw DegenerateInput("hypothesis k=" + std::to_string(k) + ": " + e.what());
        }
    };

    ScoreSeries out;
    out.min_residual_dimension = M - K;
    out.values.reserve(static_cast<std::size_t>(std::max(K, 0)));
    GaussianSummary previous = summary_at(0);
    for (int k = 1; k <= K; ++k) {
        GaussianSummary current = summary_at(k);
        try {
            out.values.push_back(empirical_bd(current, previous));
        } catch (const DegenerateInput& e) {
            throw DegenerateInput("hypothesis k=" + std::to_string(k) + ": " + e.what());
        }
        previous = current;
    }
    return out;
}

inline ScoreSeries score_series(const ComplexMatrix& X) {
    return score_series(X, spectral_decompose(sample_covariance(X)));
}

/// Smallest k in 1..K-1 maximising eta_k - eta_{k+1}.
inline int argmax_drop(const ScoreSeries& scores) {
    if (scores.size() < 2) throw InvalidArgument("argmax_drop: need at least two scores");
    int best = 1;
    double best_drop = scores.eta(1) - scores.eta(2);
    for (int k = 2; k + 1 <= static_cast<int>(scores.size()); ++k) {
        const double drop = scores.eta(k) - scores.eta(k + 1);
        if (drop > best_drop) {
            best_drop = drop;
            best = k;
        }
    }
    return best;
}

inline EnumerationResult estimate_rank(const ComplexMatrix& X, const SpectralDecomposition& decomp) {
    if (std::min(X.rows(), X.cols()) < 4)
        throw InvalidArgument("estimate_rank: need min(M, N) >= 4");
    EnumerationResult result;
    result.scores = score_series(X, decomp);
    result.rank_estimate = argmax_drop(result.scores);
    return result;
}

inline EnumerationResult estimate_rank(const ComplexMatrix& X) {
    if (std::min(X.rows(), X.cols()) < 4)
        throw InvalidArgument("estimate_rank: need min(M, N) >= 4");
    return estimate_rank(X, spectral_decompose(sample_covariance(X)));
}

}  // namespace sedan
