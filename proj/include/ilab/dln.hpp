#pragma once

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "ilab/common.hpp"

namespace ilab::dln {

// Scalar convex loss z(theta) with derivatives, for the product
// parameterization theta = prod(vartheta_i).
struct LossModel {
    enum class Kind { Quadratic, Mse, BinaryCe };
    Kind kind = Kind::Quadratic;
    double target = 0.0;  // y for MSE; label in {-1,+1} for binary CE

    double value(double theta) const;
    double d1(double theta) const;
    double d2(double theta) const;

    static LossModel quadratic() { return {Kind::Quadratic, 0.0}; }
    static LossModel mse(double y) { return {Kind::Mse, y}; }
    static LossModel binary_ce(double y) { return {Kind::BinaryCe, y}; }
    static LossModel from_name(const std::string& name, double target = 0.0);
};

struct Dln2State {
    double theta1 = 0.0;
    double theta2 = 0.0;
    double product() const { return theta1 * theta2; }
};

// Full 2x2 Hessian of z(theta1 * theta2):
// [[z'' t2^2, z'' t1 t2 + z'], [z'' t1 t2 + z', z'' t1^2]].
Eigen::Matrix2d hessian2(const Dln2State& s, const LossModel& loss);

// Anisotropy scalar beta = | z'' (t2^2 - t1^2) / (2 (z' + z'' theta)) |.
// Throws DomainError("Newton-step singularity") when the denominator
// underflows to zero.
double beta(const Dln2State& s, const LossModel& loss);

// Leading-eigenvector component ratio R = beta + sqrt(beta^2 + 1).
double rotation_ratio_r2(double beta_value);

// One-step relative change of beta under GD at learning rate eta:
// |(1 - eta^2 z'^2) / (1 - zeta eta z' + eta^2 z'^2)| with
// zeta = t1/t2 + t2/t1. Approximate; predicts the rotation direction.
double gamma_beta(const Dln2State& s, const LossModel& loss, double eta);

struct EosThreshold {
    double eta_eos = 0.0;       // 2 |t1| / (|t2| |z'|)
    double xi = 0.0;            // t1^2 / (t1^2 + t2^2)
    double boundary = 0.0;      // eta_eos * (1 - xi)
    bool relabeled = false;     // true if inputs were swapped to enforce |t1| <= |t2|
    bool instability_exists = false;  // t2^2 > 2 t1^2 strictly
};

// Learning-rate threshold for the rotation-regime boundary. Magnitudes
// follow the paper's w.l.o.g. positive convention. Throws when z' = 0.
EosThreshold eta_eos(const Dln2State& s, const LossModel& loss);

// Closed-form eigenpairs of a symmetric 2x2 matrix, descending.
struct Eigen2 {
    double lambda1, lambda2;
    Eigen::Vector2d v1, v2;
};
Eigen2 eigen2(const Eigen::Matrix2d& h);

struct TrajectoryPoint {
    int step = 0;
    Dln2State state;
    double loss = 0.0;
    double lambda1 = 0.0;
    double angle = 0.0;  // leading-eigenvector angle, see gd_trajectory
    double beta = 0.0;
    double rotation_ratio = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    bool diverged = false;
};

// Exact GD iterates: dtheta1 = -eta z' t2, dtheta2 = -eta z' t1
// (simultaneous update). The eigenvector angle is reported in
// (-pi/2, pi/2], sign fixed so the theta2-component is nonnegative.
// |theta| > 1e100 truncates with diverged = true.
Trajectory gd_trajectory(const Dln2State& s0, const LossModel& loss, double eta, int steps);

struct DlnNState {
    Eigen::VectorXd thetas;  // all nonzero
    double product() const;
};

// General-n Hessian: H_ij = z'' Theta^2/(t_i t_j) + z' Theta/(t_i t_j)
// off-diagonal, H_ii = z'' Theta^2 / t_i^2. Equivalently
// D/(t_i t_j) - z' Theta / t_i^2 on the diagonal, D = z'' Theta^2 + z' Theta.
Eigen::MatrixXd hessian_n(const DlnNState& s, const LossModel& loss);

// Unit vector with components proportional to 1/theta_j.
Eigen::VectorXd leading_eigvec_approx(const DlnNState& s);

// Relative spread of c_i = (lambda + z' Theta / t_i^2) v_i t_i; near
// zero exactly when (lambda, v) is an eigenpair.
double constancy_residual(const Eigen::MatrixXd& h, const Eigen::VectorXd& v, double lambda,
                          const DlnNState& s, const LossModel& loss);

// Alignment ratio R_n = f(theta_k) / f(theta_sharp) with
// f(t) = |t| (lambda1 + z' Theta / t^2); index convention: sharpest =
// argmin |theta|.
double rotation_ratio_rn(const DlnNState& s, double lambda1, const LossModel& loss, int k);

// Critical scale (2 z' Theta / lambda1)^(1/3) below which f' flips sign.
double theta_crit(double lambda1, const LossModel& loss, double theta_prod);

// Learning rate eta_eq with Theta_{t+2} = Theta_t under scalar GD
// Theta <- Theta - eta z'(Theta), found by bisection on the bracket.
// Throws when the two-step displacement does not change sign across it.
double period2_eta(const std::function<double(double)>& z_prime, double theta0, double eta_lo,
                   double eta_hi, double tol = 1e-10, int max_iter = 200);

// Rescaled eigenproblem for shared parameters: B_kj = (t_k / t_j) H_kj,
// the similarity transform D H D^{-1} with D = diag(theta). B has H's
// spectrum and acts on omega = theta .* v; its columns scale like
// 1/theta_j^2, which drives the R^2 monotonicity.
Eigen::MatrixXd shared_rescaled_matrix(const Eigen::MatrixXd& h, const Eigen::VectorXd& thetas);

// R^2(i,j) = (omega_j / omega_i)^2 with omega = theta .* v1 the top
// eigenvector of B in omega coordinates (computed through the symmetric
// problem B is similar to).
double omega_ratio_sq(const Eigen::MatrixXd& h, const Eigen::VectorXd& thetas, int i, int j,
                      std::uint64_t seed = 1);

}  // namespace ilab::dln
