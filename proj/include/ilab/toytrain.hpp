#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ilab/common.hpp"
#include "ilab/spectral.hpp"

namespace ilab::train {

enum class Act { Identity, Relu };
enum class Loss { Mse, Ce };

// Small dense MLP over a flat parameter vector. Layer l maps
// dims[l] -> dims[l+1]; hidden layers use acts[l], the output layer is
// linear.
struct MlpModel {
    std::vector<int> dims;
    std::vector<Act> acts;      // one per hidden layer (dims.size() - 2)
    Eigen::VectorXd params;

    static MlpModel create(std::vector<int> dims, Act hidden_act, std::uint64_t seed);
    Eigen::Index param_count() const;

    // Batch forward; inputs are rows.
    Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;
};

struct Dataset {
    Eigen::MatrixXd inputs;   // k x d
    Eigen::MatrixXd targets;  // k x c (one-hot for CE)
    std::string kind;

    // Two-class Gaussian blobs with unit-separation centers.
    static Dataset blobs(int dim, int count, std::uint64_t seed, double separation = 3.0);
    static Dataset from_csv(const std::string& path, int target_cols);
};

double forward_loss(const MlpModel& model, const Dataset& data, Loss loss);
Eigen::VectorXd grad(const MlpModel& model, const Dataset& data, Loss loss);

// Hessian-vector product by central differences of the gradient with
// h = 1e-5 (1 + |theta|_inf). Feeds spectral::HvpOracle.
Eigen::VectorXd hvp(const MlpModel& model, const Dataset& data, Loss loss,
                    const Eigen::VectorXd& v);
spectral::HvpOracle hvp_oracle(const MlpModel& model, const Dataset& data, Loss loss);

// Estimate of -grad(L) . grad(lambda_max) via a directional derivative
// along the normalized gradient. Returns the estimate and whether the
// top eigenvalue was well-separated enough to trust it.
struct SelfStabEstimate {
    double value = 0.0;
    bool reliable = false;
    double gap = 0.0;
};
SelfStabEstimate selfstab_alpha(const MlpModel& model, const Dataset& data, Loss loss,
                                int lanczos_order = 30, std::uint64_t seed = 7,
                                double h = 1e-3);

struct DiagnosticsConfig {
    int every = 1;             // cadence in epochs
    int lanczos_order = 30;
    int top_k = 2;             // basis size for subspace scores
    double ut_h = 1e-2;        // step for the U_t finite-difference proxy
    bool track_u_proxy = true;
    bool track_selfstab = false;  // costly; off by default
    std::uint64_t seed = 9;
};

struct Intervention {
    int epoch = 0;
    std::optional<double> new_eta;
    std::optional<std::string> new_optimizer;  // gd | rmsprop | adam | clipped-ada
};

struct TrainConfig {
    std::string optimizer = "gd";  // gd | sgd | rmsprop | adam | clipped-ada
    double eta = 0.01;
    double q_thresh = kInf;
    double noise_alpha = 0.0;  // sgd noise scale
    int batch = 0;             // sgd pseudo-minibatch size; 0 = k/8
    int epochs = 100;
    std::uint64_t seed = 1;
    std::vector<Intervention> interventions;
};

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0;
    double lambda_max = 0.0;
    double lambda_neg = 0.0;
    double delta_t = 0.0;          // eta * lambda_max - 2
    double u_proxy = 0.0;          // raw finite-difference value, may be negative
    double gamma_u_abs = 0.0;      // max(|U_t|/|U_t+1|, |U_t+1|/|U_t|), NaN before 2nd value
    double xi_sign = 0.0;          // sign(U_{t+1} - U_t), 0 before 2nd value
    double theta_osc = 0.0;        // |theta - theta*|, theta* the period-2 average
    double subspace_score = 0.0;   // misalignment vs instability-onset baseline
    double alpha_selfstab = 0.0;   // NaN when not tracked/unreliable
    bool diagnostics = false;      // true when the spectral block ran
};

struct TrainLog {
    std::vector<EpochRecord> records;
    std::string status = "ok";  // ok | diverged
    int instability_onset = -1; // first diagnostic epoch with eta*lambda > 2
};

TrainLog train(MlpModel& model, const Dataset& data, Loss loss, const TrainConfig& cfg,
               const DiagnosticsConfig& diag);

}  // namespace ilab::train
