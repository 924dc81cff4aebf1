#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "ilab/common.hpp"

namespace ilab::spectral {

// Matrix-free symmetric operator: the only interface the module needs.
struct HvpOracle {
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
    Eigen::Index dim = 0;
};

// Wrap a dense symmetric matrix as an oracle (testing and CLI use).
HvpOracle dense_oracle(Eigen::MatrixXd a);

// Probe |a.Hb - b.Ha| on random vectors; returns the worst relative
// asymmetry seen. Oracles shipped in-repo must keep this near zero.
double symmetry_defect(const HvpOracle& oracle, int probes, std::uint64_t seed);

struct TridiagonalResult {
    Eigen::VectorXd diag;     // m
    Eigen::VectorXd offdiag;  // m-1, entries >= 0
};

struct KrylovBasis {
    Eigen::MatrixXd columns;  // n x m, orthonormal
};

struct LanczosOptions {
    double gamma_max = 0.7071067811865476;  // sqrt(1/2)
    double gamma_min = 1e-14;
    int max_attempts = 8;
};

// Orthogonalize w against the columns of basis. Returns (w_perp, gamma)
// with gamma = |w_perp| / |w|. Empty basis returns (w, 1).
std::pair<Eigen::VectorXd, double> mpk_orthogonalize(const Eigen::VectorXd& w,
                                                     const Eigen::MatrixXd& basis);

// Lanczos iteration with the Parlett-Kahan twice-is-enough rule: accept
// when gamma >= gamma_max, reorthogonalize once otherwise, and restart
// the whole attempt with a fresh seeded start vector when the second
// pass still lands below gamma_min. An exact invariant-subspace
// breakdown (candidate norm ~ 0) extends the basis with a fresh random
// direction instead of restarting, so degenerate operators still yield
// an order-m basis.
std::pair<TridiagonalResult, KrylovBasis> lanczos_mpk(const HvpOracle& oracle, int order,
                                                      std::uint64_t seed,
                                                      const LanczosOptions& opts = {});

struct TridiagEigen {
    Eigen::VectorXd values;   // descending
    Eigen::MatrixXd vectors;  // column i pairs with values[i]; empty if not requested
};

// Implicit-shift QL on a symmetric tridiagonal matrix.
TridiagEigen tridiag_eigen(const TridiagonalResult& t, bool want_vectors = true);

struct SpectrumEstimate {
    std::vector<double> ritz_values;  // descending
    double lambda1 = 0.0;
    Eigen::VectorXd v1;  // unit length
};

SpectrumEstimate estimate_spectrum(const HvpOracle& oracle, int order, std::uint64_t seed,
                                   const LanczosOptions& opts = {});

// Leading eigenpair; v1 is reconstructed as U q_top and normalized.
std::pair<double, Eigen::VectorXd> top_eigenpair(const HvpOracle& oracle, int order,
                                                 std::uint64_t seed,
                                                 const LanczosOptions& opts = {});

// Central second difference of a scalar loss along direction v.
double directional_curvature(const std::function<double(const Eigen::VectorXd&)>& loss,
                             const Eigen::VectorXd& theta, const Eigen::VectorXd& v, double h);

// Finite-difference surrogate for higher-order curvature content:
// (lambda1(theta + h v1) - 2 lambda1(theta) + lambda1(theta - h v1)) / h^2.
double ut_proxy(const std::function<double(const Eigen::VectorXd&)>& lambda_along,
                const Eigen::VectorXd& theta, const Eigen::VectorXd& v1, double h);

}  // namespace ilab::spectral
