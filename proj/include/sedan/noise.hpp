#pragma once

// Additive noise families. Every sampler is normalised so that
// (1/M) E[||z(n)||^2] equals the requested power.

#include "sedan/error.hpp"
#include "sedan/random.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

namespace sedan {

struct IidGaussian {
    double power = 1.0;
};

/// Locally correlated Gaussian noise, C[i,j] = power * gamma^|i-j|.
struct BandedGaussian {
    double power = 1.0;
    double gamma = 0.5;
};

/// Uncorrelated Gaussian noise whose per-antenna power ramps linearly from power*(1-beta) to power*(1+beta).
struct DiagonalGaussian {
    double power = 1.0;
    double beta = 0.5;
};

/// Isotropic heavy-tailed noise with density proportional to exp(-zeta ||z||_2).
struct L2Isotropic {
    double power = 1.0;
};

/// Granularity at which a Middleton mixture component is drawn.
enum class MixtureScope {
    Snapshot,  // one component per column: z(n) ~ CN(0, s_m^2 I), isotropic
    Entry,     // one component per antenna and snapshot: i.i.d. impulsive entries, non-isotropic
};

/// Truncated Middleton class-A Gaussian mixture.
struct MiddletonClassA {
    double power = 1.0;
    double A = 0.3;
    double Gamma = 0.005;
    int components = 10;
    MixtureScope scope = MixtureScope::Snapshot;
};

using NoiseModel = std::variant<IidGaussian, BandedGaussian, DiagonalGaussian, L2Isotropic, MiddletonClassA>;

/// Short tag used on the command line and in CSV output.
inline std::string_view noise_tag(const NoiseModel& model) {
    return std::visit(
        [](const auto& m) -> std::string_view {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, IidGaussian>) return "iid";
            else if constexpr (std::is_same_v<T, BandedGaussian>) return "bcn";
            else if constexpr (std::is_same_v<T, DiagonalGaussian>) return "dcn";
            else if constexpr (std::is_same_v<T, L2Isotropic>) return "l2";
            else return "gmn";
        },
        model);
}

/// Default-parameter model for a tag; throws InvalidArgument on an unknown tag.
inline NoiseModel noise_from_tag(std::string_view tag, double power = 1.0) {
    if (tag == "iid") return IidGaussian{power};
    if (tag == "bcn") return BandedGaussian{power};
    if (tag == "dcn") return DiagonalGaussian{power};
    if (tag == "l2") return L2Isotropic{power};
    if (tag == "gmn") return MiddletonClassA{power};
    throw InvalidArgument("unknown noise model '" + std::string(tag) + "' (expected iid|bcn|dcn|l2|gmn)");
}

inline double noise_power(const NoiseModel& model) {
    return std::visit([](const auto& m) { return m.power; }, model);
}

inline void validate(const NoiseModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if (!(m.power > 0.0)) throw InvalidArgument("noise model: power must be positive");
            if constexpr (std::is_same_v<T, BandedGaussian>) {
                if (!(m.gamma >= 0.0 && m.gamma < 1.0)) throw InvalidArgument("noise model: gamma must be in [0, 1)");
            } else if constexpr (std::is_same_v<T, DiagonalGaussian>) {
                if (!(m.beta >= 0.0 && m.beta < 1.0)) throw InvalidArgument("noise model: beta must be in [0, 1)");
            } else if constexpr (std::is_same_v<T, MiddletonClassA>) {
                if (!(m.A > 0.0)) throw InvalidArgument("noise model: A must be positive");
                if (!(m.Gamma > 0.0)) throw InvalidArgument("noise model: Gamma must be positive");
                if (m.components < 1) throw InvalidArgument("noise model: need at least one mixture component");
            }
        },
        model);
}

inline ComplexMatrix noise_covariance(const NoiseModel& model, int M) {
    if (M < 1) throw InvalidArgument("noise_covariance: need at least one antenna");
    validate(model);
    ComplexMatrix C = ComplexMatrix::Zero(M, M);
    if (const auto* m = std::get_if<IidGaussian>(&model)) {
        C.diagonal().setConstant(m->power);
    } else if (const auto* m = std::get_if<BandedGaussian>(&model)) {
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) C(i, j) = m->power * std::pow(m->gamma, std::abs(i - j));
    } else if (const auto* m = std::get_if<DiagonalGaussian>(&model)) {
        for (int i = 0; i < M; ++i) {
            const double t = M == 1 ? 0.5 : static_cast<double>(i) / (M - 1);
            C(i, i) = m->power * ((1.0 - m->beta) + 2.0 * m->beta * t);
        }
    } else {
        throw UnsupportedModel("noise_covariance: model '" + std::string(noise_tag(model)) +
                               "' has no Gaussian covariance");
    }
    return C;
}

/// Columns i.i.d. CN(0, cov), via the lower Cholesky factor.
inline ComplexMatrix sample_gaussian(const ComplexMatrix& cov, int N, Rng& rng) {
    if (cov.rows() != cov.cols()) throw InvalidArgument("sample_gaussian: covariance must be square");
    Eigen::LLT<ComplexMatrix> llt(cov);
    if (llt.info() != Eigen::Success)
        throw NumericalError("sample_gaussian: covariance is not positive definite");
    return llt.matrixL() * complex_gaussian(cov.rows(), N, rng);
}

/// Rate of the Gamma(2M, zeta) radius giving (1/M) E||z||^2 = power.
inline double l2_rate(int M, double power) {
    const double d = 2.0 * M;
    return std::sqrt(d * (d + 1.0) / (M * power));
}

inline ComplexMatrix sample_l2_isotropic(int M, double power, int N, Rng& rng) {
    if (!(power > 0.0)) throw InvalidArgument("sample_l2_isotropic: power must be positive");
    const double zeta = l2_rate(M, power);
    std::gamma_distribution<double> radius(2.0 * M, 1.0 / zeta);
    ComplexMatrix Z = complex_gaussian(M, N, rng);
    for (int n = 0; n < N; ++n) {
        double norm = Z.col(n).norm();
        while (norm == 0.0) {
            Z.col(n) = complex_gaussian(M, 1, rng);
            norm = Z.col(n).norm();
        }
        Z.col(n) *= radius(rng) / norm;
    }
    return Z;
}

/// Mixture weights proportional to A^m / m!, m < components, renormalised after truncation.
inline std::vector<double> gmn_weights(double A, int components) {
    std::vector<double> w(static_cast<std::size_t>(components));
    double term = 1.0, total = 0.0;
    for (int m = 0; m < components; ++m) {
        if (m > 0) term *= A / m;
        w[static_cast<std::size_t>(m)] = term;
        total += term;
    }
    for (double& x : w) x /= total;
    return w;
}

/// Per-component variances c (m/A + Gamma)/(1 + Gamma), with c fixing the mixture power.
inline std::vector<double> gmn_variances(double power, double A, double Gamma, int components) {
    const auto w = gmn_weights(A, components);
    std::vector<double> var(w.size());
    double mean_power = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        var[m] = (static_cast<double>(m) / A + Gamma) / (1.0 + Gamma);
        mean_power += w[m] * var[m];
    }
    for (double& v : var) v *= power / mean_power;
    return var;
}

inline ComplexMatrix sample_gmn(int M, double power, double A, double Gamma, int components, int N, Rng& rng,
                                MixtureScope scope = MixtureScope::Snapshot) {
    validate(MiddletonClassA{power, A, Gamma, components, scope});
    const auto w = gmn_weights(A, components);
    const auto var = gmn_variances(power, A, Gamma, components);
    std::vector<double> scale(var.size());
    for (std::size_t m = 0; m < var.size(); ++m) scale[m] = std::sqrt(var[m]);
    std::discrete_distribution<int> pick(w.begin(), w.end());
    ComplexMatrix Z = complex_gaussian(M, N, rng);
    for (int n = 0; n < N; ++n) {
        if (scope == MixtureScope::Snapshot) {
            Z.col(n) *= scale[static_cast<std::size_t>(pick(rng))];
        } else {
            for (int i = 0; i < M; ++i) Z(i, n) *= scale[static_cast<std::size_t>(pick(rng))];
        }
    }
    return Z;
}

/// M x N noise matrix under any model.
inline ComplexMatrix sample_noise(const NoiseModel& model, int M, int N, Rng& rng) {
    validate(model);
    if (const auto* m = std::get_if<IidGaussian>(&model)) return complex_gaussian(M, N, rng, m->power);
    if (const auto* m = std::get_if<L2Isotropic>(&model)) return sample_l2_isotropic(M, m->power, N, rng);
    if (const auto* m = std::get_if<MiddletonClassA>(&model))
        return sample_gmn(M, m->power, m->A, m->Gamma, m->components, N, rng, m->scope);
    return sample_gaussian(noise_covariance(model, M), N, rng);
}

}  // namespace sedan
