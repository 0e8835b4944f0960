#pragma once

#include <cstddef>

#include "smilegan/matrix.hpp"

namespace smilegan {

enum class CovarianceKind { full, diagonal };

// First and second moments of a sample, with either a full covariance matrix
// or its diagonal only.
struct GaussianMoments {
    Vector mean;
    Matrix cov;        // d x d, populated when kind == full
    Vector cov_diag;   // length d, populated when kind == diagonal
    CovarianceKind kind = CovarianceKind::diagonal;

    std::size_t dim() const { return mean.size(); }
};

struct EigenDecomposition {
    Vector values;   // descending
    Matrix vectors;  // columns are eigenvectors, aligned with values
};

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Symmetry is the
// caller's responsibility; only the upper triangle drives the rotations.
EigenDecomposition jacobi_eigen(const Matrix& a);

// Symmetric PSD square root B with B*B ~= a. Eigenvalues in [-1e-8, 0) are
// clamped to zero; anything below -1e-8 is rejected as indefinite.
Matrix sym_sqrt(const Matrix& a);

// Ordinary least squares through the normal equations, solved with the
// Jacobi eigendecomposition. Rejects systems whose smallest singular value
// falls below 1e-10 times the largest.
Vector least_squares_fit(const Matrix& design, const Vector& targets);

// Column means and unbiased (n-1 divisor) sample covariance.
GaussianMoments sample_moments(const Matrix& rows, CovarianceKind kind);

}  // namespace smilegan
