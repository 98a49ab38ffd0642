#pragma once

#include "sedan/error.hpp"
#include "sedan/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace sedan {

/// (1/N) X X^H.
inline ComplexMatrix sample_covariance(const ComplexMatrix& X) {
    if (X.cols() < 1) throw InvalidArgument("sample_covariance: need at least one snapshot");
    ComplexMatrix C = ComplexMatrix::Zero(X.rows(), X.rows());
    C.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(X.cols()));
    C.triangularView<Eigen::StrictlyUpper>() = C.adjoint();
    return C;
}

/// C = U diag(lambda) U^H with eigenvalues in descending order.
struct SpectralDecomposition {
    ComplexMatrix eigenvectors;
    Eigen::VectorXd eigenvalues;

    Eigen::Index dimension() const { return eigenvalues.size(); }
};

inline SpectralDecomposition spectral_decompose(const ComplexMatrix& C) {
    if (C.rows() != C.cols() || C.rows() == 0)
        throw InvalidArgument("spectral_decompose: matrix must be square and non-empty");
    const ComplexMatrix sym = (C + C.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericalError("spectral_decompose: eigen-iteration did not converge");

    const Eigen::Index M = C.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(M));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    SpectralDecomposition out{ComplexMatrix(M, M), Eigen::VectorXd(M)};
    for (Eigen::Index i = 0; i < M; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(i)];
        out.eigenvectors.col(i) = solver.eigenvectors().col(src);
        out.eigenvalues(i) = values(src);
    }
    return out;
}

/// Noise-component estimate Z_k = U_k^perp (U_k^perp)^H X for hypothesis k.
struct ResidualMatrix {
    ComplexMatrix entries;
    int hypothesis = 0;
};

inline ResidualMatrix residual(const ComplexMatrix& X, const SpectralDecomposition& decomp, int k) {
    const auto M = decomp.dimension();
    if (X.rows() != M) throw InvalidArgument("residual: snapshot dimension does not match decomposition");
    if (k < 0 || k > M)
        throw InvalidArgument("residual: hypothesis " + std::to_string(k) + " outside [0, " + std::to_string(M) + "]");
    if (k == 0) return {X, 0};
    if (k == M) return {ComplexMatrix::Zero(X.rows(), X.cols()), k};
    const auto complement = decomp.eigenvectors.rightCols(M - k);
    return {complement * (complement.adjoint() * X), k};
}

/// Coordinates of the snapshots in the eigenbasis, U^H X. Row i holds the component along the
/// i-th eigenvector, so rows k..M-1 are an isometric image of the residual for hypothesis k.
inline ComplexMatrix eigenbasis_coordinates(const ComplexMatrix& X, const SpectralDecomposition& decomp) {
    if (X.rows() != decomp.dimension())
        throw InvalidArgument("eigenbasis_coordinates: snapshot dimension does not match decomposition");
    return decomp.eigenvectors.adjoint() * X;
}

}  // namespace sedan
