#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "ilab/rng.hpp"

// Test-only oracles, intentionally independent of the library's own
// spectral path (Eigen's dense solvers vs our Lanczos/QL/Jacobi).
namespace testutil {

struct DenseEig {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // columns match values
};

inline DenseEig dense_eig(const Eigen::MatrixXd& a) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    const Eigen::Index n = a.rows();
    DenseEig out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.values[i] = es.eigenvalues()[n - 1 - i];
        out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
    }
    return out;
}

inline Eigen::VectorXd dense_singular_values(const Eigen::MatrixXd& m) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues();
}

inline Eigen::MatrixXd random_symmetric(int n, ilab::Rng& rng, double scale = 1.0) {
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            const double v = scale * rng.normal();
            a(i, j) = v;
            a(j, i) = v;
        }
    return a;
}

// Symmetric matrix with a clustered spectrum (hard case for plain Lanczos).
inline Eigen::MatrixXd clustered_symmetric(int n, ilab::Rng& rng) {
    Eigen::VectorXd evals(n);
    for (int i = 0; i < n; ++i) {
        const int cluster = i % 4;
        evals[i] = static_cast<double>(cluster) + 1e-9 * rng.normal();
    }
    Eigen::MatrixXd g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ();
    return q * evals.asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_orthonormal(int p, int m, ilab::Rng& rng) {
    Eigen::MatrixXd g(p, m);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
    const Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    return Eigen::MatrixXd(qr.householderQ()).leftCols(m);
}

// Central-difference Hessian of a scalar function (oracle for analytic
// Hessians).
inline Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                                  const Eigen::VectorXd& x, double h) {
    const Eigen::Index n = x.size();
    Eigen::MatrixXd hess(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            const double v = (f(xpp) - f(xpm) - f(xmp) + f(xmm)) / (4.0 * h * h);
            hess(i, j) = v;
            hess(j, i) = v;
        }
    }
    return hess;
}

}  // namespace testutil
