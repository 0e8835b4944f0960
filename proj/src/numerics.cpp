#include "smilegan/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace smilegan {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotSymmetric: return "NotSymmetric";
        case ErrorCode::NotPSD: return "NotPSD";
        case ErrorCode::RankDeficient: return "RankDeficient";
        case ErrorCode::TooFewSamples: return "TooFewSamples";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::GraphNotRetained: return "GraphNotRetained";
        case ErrorCode::EmptyDataset: return "EmptyDataset";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
        case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::KindMismatch: return "KindMismatch";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::TooManyClusters: return "TooManyClusters";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::ArchMismatch: return "ArchMismatch";
        case ErrorCode::SpecInvalid: return "SpecInvalid";
        case ErrorCode::InsufficientCN: return "InsufficientCN";
        case ErrorCode::MissingCovariates: return "MissingCovariates";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::SchemaError: return "SchemaError";
    }
    return "Error";
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw Error(ErrorCode::ShapeMismatch, "matmul inner dimensions disagree");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.data() + i * c.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            const double* bk = b.data() + k * b.cols();
            for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
        }
    }
    return c;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw Error(ErrorCode::ShapeMismatch, "matmul_bt contraction dimensions disagree");
    // work against b^T so the inner loop is an independent-elements update,
    // which vectorizes without reassociating a reduction
    const Matrix bt = transpose(b);
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        const double* ai = a.data() + i * a.cols();
        double* ci = c.data() + i * c.cols();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = ai[k];
            const double* btk = bt.data() + k * bt.cols();
            for (std::size_t j = 0; j < bt.cols(); ++j) ci[j] += aik * btk[j];
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i]));
    return m;
}

namespace {

void require_square_symmetric(const Matrix& a) {
    if (a.rows() != a.cols())
        throw Error(ErrorCode::NotSymmetric, "matrix is not square");
    const double tol = 1e-10 * std::max(1.0, max_abs(a));
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j) - a(j, i)) > tol)
                throw Error(ErrorCode::NotSymmetric, "symmetry tolerance exceeded");
}

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
}

}  // namespace

EigenDecomposition jacobi_eigen(const Matrix& input) {
    const std::size_t n = input.rows();
    Matrix a = input;
    Matrix v = Matrix::identity(n);

    const double scale = std::max(1.0, frobenius_norm(a));
    const double tol = 1e-14 * scale;
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps && off_diagonal_norm(a) > tol; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= tol / (n * n + 1.0)) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    EigenDecomposition out;
    out.values.resize(n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Vector diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
    std::sort(order.begin(), order.end(),
              [&](std::size_t x, std::size_t y) { return diag[x] > diag[y]; });

    out.vectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        out.values[c] = diag[order[c]];
        for (std::size_t r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
    }
    return out;
}

Matrix sym_sqrt(const Matrix& a) {
    require_square_symmetric(a);
    EigenDecomposition eig = jacobi_eigen(a);

    const std::size_t n = a.rows();
    Vector roots(n);
    for (std::size_t i = 0; i < n; ++i) {
        double lambda = eig.values[i];
        if (lambda < -1e-8)
            throw Error(ErrorCode::NotPSD, "eigenvalue below -1e-8");
        roots[i] = std::sqrt(std::max(lambda, 0.0));
    }

    // B = V sqrt(L) V^T, symmetrized to remove rotation round-off
    Matrix b(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += eig.vectors(i, k) * roots[k] * eig.vectors(j, k);
            b(i, j) = s;
            b(j, i) = s;
        }
    }
    return b;
}

Vector least_squares_fit(const Matrix& design, const Vector& targets) {
    const std::size_t n = design.rows();
    const std::size_t p = design.cols();
    if (targets.size() != n)
        throw Error(ErrorCode::ShapeMismatch, "targets length does not match design rows");
    if (n < p)
        throw Error(ErrorCode::RankDeficient, "fewer rows than columns");

    // normal equations G x = h
    Matrix g(p, p);
    Vector h(p, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = design.data() + i * p;
        for (std::size_t a = 0; a < p; ++a) {
            h[a] += row[a] * targets[i];
            for (std::size_t b = a; b < p; ++b) g(a, b) += row[a] * row[b];
        }
    }
    for (std::size_t a = 0; a < p; ++a)
        for (std::size_t b = 0; b < a; ++b) g(a, b) = g(b, a);

    EigenDecomposition eig = jacobi_eigen(g);
    const double sigma_max = std::sqrt(std::max(eig.values.front(), 0.0));
    const double sigma_min = std::sqrt(std::max(eig.values.back(), 0.0));
    if (sigma_max == 0.0 || sigma_min < 1e-10 * sigma_max)
        throw Error(ErrorCode::RankDeficient, "smallest singular value below tolerance");

    // x = V L^-1 V^T h
    Vector vth(p, 0.0);
    for (std::size_t k = 0; k < p; ++k) {
        double s = 0.0;
        for (std::size_t r = 0; r < p; ++r) s += eig.vectors(r, k) * h[r];
        vth[k] = s / eig.values[k];
    }
    Vector x(p, 0.0);
    for (std::size_t r = 0; r < p; ++r) {
        double s = 0.0;
        for (std::size_t k = 0; k < p; ++k) s += eig.vectors(r, k) * vth[k];
        x[r] = s;
    }
    return x;
}

GaussianMoments sample_moments(const Matrix& rows, CovarianceKind kind) {
    const std::size_t n = rows.rows();
    const std::size_t d = rows.cols();
    if (n < 2)
        throw Error(ErrorCode::TooFewSamples, "need at least 2 samples");

    GaussianMoments m;
    m.kind = kind;
    m.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double* r = rows.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) m.mean[j] += r[j];
    }
    for (std::size_t j = 0; j < d; ++j) m.mean[j] /= static_cast<double>(n);

    const double divisor = static_cast<double>(n - 1);
    if (kind == CovarianceKind::diagonal) {
        m.cov_diag.assign(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = rows.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) {
                const double dev = r[j] - m.mean[j];
                m.cov_diag[j] += dev * dev;
            }
        }
        for (std::size_t j = 0; j < d; ++j) m.cov_diag[j] /= divisor;
    } else {
        m.cov = Matrix(d, d);
        Vector dev(d);
        for (std::size_t i = 0; i < n; ++i) {
            const double* r = rows.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) dev[j] = r[j] - m.mean[j];
            for (std::size_t a = 0; a < d; ++a) {
                const double da = dev[a];
                double* ca = m.cov.data() + a * d;
                for (std::size_t b = a; b < d; ++b) ca[b] += da * dev[b];
            }
        }
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = a; b < d; ++b) {
                m.cov(a, b) /= divisor;
                m.cov(b, a) = m.cov(a, b);
            }
        }
    }
    return m;
}

}  // namespace smilegan
