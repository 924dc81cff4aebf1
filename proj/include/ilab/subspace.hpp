#pragma once

#include <Eigen/Core>
#include <vector>

#include "ilab/common.hpp"

namespace ilab::subspace {

// Column-orthonormal basis of a subspace of R^p.
struct OrthonormalBasis {
    Eigen::MatrixXd columns;  // p x m, p >= m >= 1
};

// Worst deviation of V^T V from identity; bases used here should keep
// this below ~1e-10.
double orthonormality_defect(const OrthonormalBasis& v);

struct PrincipalAngles {
    std::vector<double> angles;  // ascending, each in [0, pi/2]
};

// Singular values of a small dense matrix by one-sided Jacobi,
// descending. Exposed for tests.
Eigen::VectorXd jacobi_singular_values(const Eigen::MatrixXd& m);

// Principal angles between span(a) and span(b) via the SVD of a^T b;
// cos(phi_i) = sigma_i, truncated to min(m_a, m_b).
PrincipalAngles principal_angles(const OrthonormalBasis& a, const OrthonormalBasis& b);

// Geodesic Grassmannian distance: Euclidean norm of the angle vector.
double grassmann_distance(const PrincipalAngles& angles);

// Cosine-Grassmannian misalignment score in [0, 1]:
// S = 1 - cos(h / sqrt(m_min)); reduces to 1 - |cosine similarity| for
// one-dimensional subspaces.
double misalignment_score(const OrthonormalBasis& a, const OrthonormalBasis& b);

// Complement 1 - S, for consumers that want a similarity instead.
double similarity_score(const OrthonormalBasis& a, const OrthonormalBasis& b);

}  // namespace ilab::subspace
