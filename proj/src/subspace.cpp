#include "ilab/subspace.hpp"

#include <algorithm>
#include <cmath>

namespace ilab::subspace {

double orthonormality_defect(const OrthonormalBasis& v) {
    const Eigen::MatrixXd g = v.columns.transpose() * v.columns;
    return (g - Eigen::MatrixXd::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff();
}

Eigen::VectorXd jacobi_singular_values(const Eigen::MatrixXd& m) {
    // One-sided Jacobi: rotate column pairs of a working copy until all
    // pairs are orthogonal; singular values are the column norms.
    Eigen::MatrixXd a = m.rows() >= m.cols() ? m : Eigen::MatrixXd(m.transpose());
    const Eigen::Index q = a.cols();
    const double tol = 1e-15;
    for (int sweep = 0; sweep < 64; ++sweep) {
        bool converged = true;
        for (Eigen::Index j = 0; j < q - 1; ++j) {
            for (Eigen::Index k = j + 1; k < q; ++k) {
                const double ajj = a.col(j).squaredNorm();
                const double akk = a.col(k).squaredNorm();
                const double ajk = a.col(j).dot(a.col(k));
                if (std::abs(ajk) <= tol * std::sqrt(ajj * akk) || ajk == 0.0) continue;
                converged = false;
                const double tau = (akk - ajj) / (2.0 * ajk);
                const double t = std::copysign(1.0, tau) / (std::abs(tau) + std::hypot(1.0, tau));
                const double c = 1.0 / std::hypot(1.0, t);
                const double s = c * t;
                const Eigen::VectorXd cj = a.col(j);
                a.col(j) = c * cj - s * a.col(k);
                a.col(k) = s * cj + c * a.col(k);
            }
        }
        if (converged) break;
    }
    Eigen::VectorXd sv(q);
    for (Eigen::Index j = 0; j < q; ++j) sv[j] = a.col(j).norm();
    std::sort(sv.data(), sv.data() + q, std::greater<double>());
    return sv;
}

PrincipalAngles principal_angles(const OrthonormalBasis& a, const OrthonormalBasis& b) {
    if (a.columns.rows() != b.columns.rows())
        throw DomainError("bases live in different ambient dimensions");
    const Eigen::Index m_min = std::min(a.columns.cols(), b.columns.cols());
    const Eigen::MatrixXd cross = a.columns.transpose() * b.columns;
    const Eigen::VectorXd sv = jacobi_singular_values(cross);
    PrincipalAngles out;
    out.angles.resize(m_min);
    for (Eigen::Index i = 0; i < m_min; ++i) {
        const double sigma = std::clamp(sv[i], 0.0, 1.0);
        out.angles[m_min - 1 - i] = std::acos(sigma);  // descending sigma -> ascending angle
    }
    return out;
}

double grassmann_distance(const PrincipalAngles& p) {
    double sq = 0.0;
    for (double phi : p.angles) sq += phi * phi;
    return std::sqrt(sq);
}

double misalignment_score(const OrthonormalBasis& a, const OrthonormalBasis& b) {
    const PrincipalAngles p = principal_angles(a, b);
    const double h = grassmann_distance(p);
    const double m_min = static_cast<double>(p.angles.size());
    return 1.0 - std::cos(h / std::sqrt(m_min));
}

double similarity_score(const OrthonormalBasis& a, const OrthonormalBasis& b) {
    return 1.0 - misalignment_score(a, b);
}

}  // namespace ilab::subspace
