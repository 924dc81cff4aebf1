#include "ilab/optim.hpp"

#include <cmath>

namespace ilab::optim {

Eigen::VectorXd gd_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& grad, double eta) {
    return theta - eta * grad;
}

Eigen::VectorXd sgd_alpha_step(const Eigen::VectorXd& theta, const Eigen::VectorXd& full_grad,
                               const Eigen::VectorXd& minibatch_noise_xi, double alpha_scale,
                               double eta) {
    return theta - eta * (full_grad + alpha_scale * minibatch_noise_xi);
}

double effective_temperature(double eta, double n_data, double batch, double alpha_scale,
                             double sigma_bar_sq) {
    if (!(batch > 0.0) || !(n_data > 0.0) || batch > n_data)
        throw DomainError("need 0 < B <= N");
    return eta * (n_data / batch) * alpha_scale * alpha_scale * sigma_bar_sq;
}

namespace {

struct Moments {
    OptimizerState state;
    Eigen::VectorXd m_hat;
    Eigen::VectorXd q_hat;
};

Moments advance_moments(const OptimizerState& state, const Eigen::VectorXd& grad,
                        const OptimizerConfig& cfg) {
    Moments out;
    out.state.step_count = state.step_count + 1;
    out.state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
    out.state.q = cfg.beta2 * state.q + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    if (cfg.bias_correction) {
        const double t = static_cast<double>(out.state.step_count);
        out.m_hat = out.state.m / (1.0 - std::pow(cfg.beta1, t));
        out.q_hat = out.state.q / (1.0 - std::pow(cfg.beta2, t));
    } else {
        out.m_hat = out.state.m;
        out.q_hat = out.state.q;
    }
    return out;
}

}  // namespace

std::pair<OptimizerState, Eigen::VectorXd> adam_step(const OptimizerState& state,
                                                     const Eigen::VectorXd& theta,
                                                     const Eigen::VectorXd& grad,
                                                     const OptimizerConfig& cfg) {
    Moments mo = advance_moments(state, grad, cfg);
    const Eigen::VectorXd denom = mo.q_hat.cwiseSqrt().array() + cfg.epsilon;
    Eigen::VectorXd new_theta = theta - cfg.eta * mo.m_hat.cwiseQuotient(denom);
    return {std::move(mo.state), std::move(new_theta)};
}

std::pair<OptimizerState, Eigen::VectorXd> clipped_ada_step(const OptimizerState& state,
                                                            const Eigen::VectorXd& theta,
                                                            const Eigen::VectorXd& grad,
                                                            const OptimizerConfig& cfg) {
    if (!(cfg.q_thresh > 0.0)) throw DomainError("q_thresh must be positive");
    Moments mo = advance_moments(state, grad, cfg);
    const Eigen::VectorXd q_mod = mo.q_hat.cwiseMin(cfg.q_thresh);
    const Eigen::VectorXd denom = q_mod.cwiseSqrt().array() + cfg.epsilon;
    Eigen::VectorXd new_theta = theta - cfg.eta * mo.m_hat.cwiseQuotient(denom);
    return {std::move(mo.state), std::move(new_theta)};
}

Eigen::VectorXd clipped_second_moment(const OptimizerState& state, const OptimizerConfig& cfg) {
    Eigen::VectorXd q_hat = state.q;
    if (cfg.bias_correction && state.step_count > 0) {
        q_hat /= (1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count)));
    }
    return q_hat.cwiseMin(cfg.q_thresh);
}

double effective_curvature(double lambda_max, const Eigen::VectorXd& v1,
                           const Eigen::VectorXd& q_mod, double epsilon) {
    if (v1.size() != q_mod.size()) throw DomainError("v1 and q_mod must have matching size");
    double denom = 0.0;
    for (Eigen::Index i = 0; i < v1.size(); ++i)
        denom += v1[i] * v1[i] * (q_mod[i] + epsilon);
    if (!(denom > 0.0)) throw DomainError("degenerate preconditioner sum");
    return lambda_max / denom;
}

}  // namespace ilab::optim
