#pragma once

#include <Eigen/Core>
#include <utility>

#include "ilab/common.hpp"

namespace ilab::optim {

struct OptimizerConfig {
    double eta = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double q_thresh = kInf;       // second-moment cap; inf = plain Adam
    double noise_scale_alpha = 0.0;
    bool bias_correction = true;  // the paper's update omits it; tests run both
};

struct OptimizerState {
    Eigen::VectorXd m;  // first moment
    Eigen::VectorXd q;  // second moment, elementwise >= 0
    long step_count = 0;

    static OptimizerState zeros(Eigen::Index n) {
        return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
    }
};

// theta - eta * grad.
Eigen::VectorXd gd_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double eta);

// Noise-scaled update theta - eta (grad + alpha * xi). alpha = 0 is GD,
// alpha = 1 standard SGD noise.
Eigen::VectorXd sgd_alpha_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& full_grad,
                               const Eigen::VectorXd& minibatch_noise_xi, double alpha_scale,
                               double eta);

// Proportional effective temperature eta (N/B) alpha^2 sigma_bar^2.
double effective_temperature(double eta, double n_data, double batch, double alpha_scale,
                             double sigma_bar_sq);

// Moment recursions m <- b1 m + (1 - b1) g, q <- b2 q + (1 - b2) g^2 and
// update theta - eta m_hat / (sqrt(q_hat) + eps). beta1 = 0 is RMSprop.
std::pair<OptimizerState, Eigen::VectorXd> adam_step(const OptimizerState& state,
                                                     const Eigen::VectorXd& theta,
                                                     const Eigen::VectorXd& grad,
                                                     const OptimizerConfig& cfg);

// Same recursions; the second moment actually used is capped at read
// time, q_mod = min(q_hat, q_thresh), while the stored accumulator
// keeps growing unclipped.
std::pair<OptimizerState, Eigen::VectorXd> clipped_ada_step(const OptimizerState& state,
                                                            const Eigen::VectorXd& theta,
                                                            const Eigen::VectorXd& grad,
                                                            const OptimizerConfig& cfg);

// The clipped second moment a step would divide by (for diagnostics).
Eigen::VectorXd clipped_second_moment(const OptimizerState& state, const OptimizerConfig& cfg);

// lambda_max / sum_i v1_i^2 (q_mod_i + eps); instability when
// eta * lambda_eff > 2.
double effective_curvature(double lambda_max, const Eigen::VectorXd& v1,
                           const Eigen::VectorXd& q_mod, double epsilon);

}  // namespace ilab::optim
