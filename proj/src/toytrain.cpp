#include "ilab/toytrain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ilab/optim.hpp"
#include "ilab/rng.hpp"
#include "ilab/subspace.hpp"

namespace ilab::train {

namespace {

struct LayerView {
    Eigen::Map<const Eigen::MatrixXd> w;
    Eigen::Map<const Eigen::VectorXd> b;
};

LayerView layer_view(const Eigen::VectorXd& params, const std::vector<int>& dims, int l,
                     Eigen::Index offset) {
    const int in = dims[static_cast<std::size_t>(l)];
    const int out = dims[static_cast<std::size_t>(l) + 1];
    return {Eigen::Map<const Eigen::MatrixXd>(params.data() + offset, out, in),
            Eigen::Map<const Eigen::VectorXd>(params.data() + offset + out * in, out)};
}

Eigen::Index layer_size(const std::vector<int>& dims, int l) {
    return static_cast<Eigen::Index>(dims[static_cast<std::size_t>(l) + 1]) *
               (dims[static_cast<std::size_t>(l)] + 1);
}

Eigen::MatrixXd apply_act(Act act, const Eigen::MatrixXd& z) {
    if (act == Act::Identity) return z;
    return z.cwiseMax(0.0);
}

Eigen::MatrixXd act_mask(Act act, const Eigen::MatrixXd& z) {
    if (act == Act::Identity) return Eigen::MatrixXd::Ones(z.rows(), z.cols());
    return (z.array() > 0.0).cast<double>();
}

struct ForwardPass {
    std::vector<Eigen::MatrixXd> pre;   // pre-activations per layer
    std::vector<Eigen::MatrixXd> post;  // activations, post[0] = inputs
    Eigen::MatrixXd out;
};

ForwardPass run_forward(const MlpModel& model, const Eigen::MatrixXd& inputs) {
    const int layers = static_cast<int>(model.dims.size()) - 1;
    ForwardPass fp;
    fp.post.push_back(inputs);
    Eigen::Index offset = 0;
    for (int l = 0; l < layers; ++l) {
        const auto lv = layer_view(model.params, model.dims, l, offset);
        offset += layer_size(model.dims, l);
        Eigen::MatrixXd z = fp.post.back() * lv.w.transpose();
        z.rowwise() += lv.b.transpose();
        fp.pre.push_back(z);
        if (l + 1 < layers) {
            fp.post.push_back(apply_act(model.acts[static_cast<std::size_t>(l)], z));
        } else {
            fp.out = z;
        }
    }
    return fp;
}

// Row-wise stable softmax.
Eigen::MatrixXd softmax(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits;
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        const double mx = p.row(i).maxCoeff();
        p.row(i) = (p.row(i).array() - mx).exp();
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

}  // namespace

MlpModel MlpModel::create(std::vector<int> dims, Act hidden_act, std::uint64_t seed) {
    if (dims.size() < 2) throw DomainError("mlp needs at least input and output dims");
    MlpModel m;
    m.dims = std::move(dims);
    m.acts.assign(m.dims.size() - 2, hidden_act);
    Eigen::Index total = 0;
    for (int l = 0; l + 1 < static_cast<int>(m.dims.size()); ++l)
        total += layer_size(m.dims, l);
    m.params.resize(total);
    Rng rng(seed);
    Eigen::Index offset = 0;
    for (int l = 0; l + 1 < static_cast<int>(m.dims.size()); ++l) {
        const int in = m.dims[static_cast<std::size_t>(l)];
        const int out = m.dims[static_cast<std::size_t>(l) + 1];
        const double scale = std::sqrt(2.0 / static_cast<double>(in));
        for (int i = 0; i < out * in; ++i) m.params[offset + i] = scale * rng.normal();
        for (int i = 0; i < out; ++i) m.params[offset + out * in + i] = 0.0;
        offset += layer_size(m.dims, l);
    }
    return m;
}

Eigen::Index MlpModel::param_count() const { return params.size(); }

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& inputs) const {
    return run_forward(*this, inputs).out;
}

Dataset Dataset::blobs(int dim, int count, std::uint64_t seed, double separation) {
    if (dim < 1 || count < 2) throw DomainError("blobs need dim >= 1, count >= 2");
    Dataset d;
    d.kind = "blobs";
    d.inputs.resize(count, dim);
    d.targets = Eigen::MatrixXd::Zero(count, 2);
    Rng rng(seed);
    Eigen::VectorXd dir(dim);
    for (int i = 0; i < dim; ++i) dir[i] = rng.normal();
    dir.normalize();
    for (int i = 0; i < count; ++i) {
        const int cls = i % 2;
        const double side = cls == 0 ? -0.5 : 0.5;
        for (int j = 0; j < dim; ++j)
            d.inputs(i, j) = separation * side * dir[j] + rng.normal();
        d.targets(i, cls) = 1.0;
    }
    return d;
}

Dataset Dataset::from_csv(const std::string& path, int target_cols) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open dataset: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> row;
        bool numeric = true;
        while (std::getline(ss, tok, ',')) {
            try {
                row.push_back(std::stod(tok));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DomainError("empty dataset: " + path);
    const int cols = static_cast<int>(rows[0].size());
    if (target_cols < 1 || target_cols >= cols)
        throw DomainError("target column count out of range");
    if (static_cast<int>(rows.size()) > 2048)
        throw DomainError("desk-scale datasets are capped at 2048 rows");
    Dataset d;
    d.kind = "csv";
    const int k = static_cast<int>(rows.size());
    const int in_cols = cols - target_cols;
    d.inputs.resize(k, in_cols);
    d.targets.resize(k, target_cols);
    for (int i = 0; i < k; ++i) {
        if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != cols)
            throw DomainError("ragged dataset rows");
        for (int j = 0; j < in_cols; ++j)
            d.inputs(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        for (int j = 0; j < target_cols; ++j)
            d.targets(i, j) =
                rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(in_cols + j)];
    }
    return d;
}

double forward_loss(const MlpModel& model, const Dataset& data, Loss loss) {
    if (data.inputs.cols() != model.dims.front() || data.targets.cols() != model.dims.back())
        throw DomainError("dataset shapes do not match the model");
    const Eigen::MatrixXd out = model.forward(data.inputs);
    const double k = static_cast<double>(data.inputs.rows());
    if (loss == Loss::Mse) {
        return 0.5 * (out - data.targets).squaredNorm() / k;
    }
    // mean softmax cross-entropy
    double total = 0.0;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        const double mx = out.row(i).maxCoeff();
        const double lse = mx + std::log((out.row(i).array() - mx).exp().sum());
        total += lse - out.row(i).dot(data.targets.row(i));
    }
    return total / k;
}

Eigen::VectorXd grad(const MlpModel& model, const Dataset& data, Loss loss) {
    const ForwardPass fp = run_forward(model, data.inputs);
    const double k = static_cast<double>(data.inputs.rows());
    const int layers = static_cast<int>(model.dims.size()) - 1;

    Eigen::MatrixXd delta;  // dLoss/d(pre-activation of current layer)
    if (loss == Loss::Mse) {
        delta = (fp.out - data.targets) / k;
    } else {
        delta = (softmax(fp.out) - data.targets) / k;
    }

    Eigen::VectorXd g(model.param_count());
    std::vector<Eigen::Index> offsets(static_cast<std::size_t>(layers));
    Eigen::Index off = 0;
    for (int l = 0; l < layers; ++l) {
        offsets[static_cast<std::size_t>(l)] = off;
        off += layer_size(model.dims, l);
    }
    for (int l = layers - 1; l >= 0; --l) {
        const int in = model.dims[static_cast<std::size_t>(l)];
        const int out = model.dims[static_cast<std::size_t>(l) + 1];
        const Eigen::MatrixXd gw = delta.transpose() * fp.post[static_cast<std::size_t>(l)];
        const Eigen::VectorXd gb = delta.colwise().sum();
        Eigen::Map<Eigen::MatrixXd>(g.data() + offsets[static_cast<std::size_t>(l)], out, in) = gw;
        Eigen::Map<Eigen::VectorXd>(g.data() + offsets[static_cast<std::size_t>(l)] + out * in,
                                    out) = gb;
        if (l > 0) {
            const auto lv = layer_view(model.params, model.dims, l,
                                       offsets[static_cast<std::size_t>(l)]);
            delta = (delta * lv.w)
                        .cwiseProduct(act_mask(model.acts[static_cast<std::size_t>(l) - 1],
                                               fp.pre[static_cast<std::size_t>(l) - 1]));
        }
    }
    return g;
}

Eigen::VectorXd hvp(const MlpModel& model, const Dataset& data, Loss loss,
                    const Eigen::VectorXd& v) {
    if (v.size() != model.param_count()) throw DomainError("hvp vector length mismatch");
    const double h = 1e-5 * (1.0 + model.params.cwiseAbs().maxCoeff());
    MlpModel shifted = model;
    shifted.params = model.params + h * v;
    const Eigen::VectorXd gp = grad(shifted, data, loss);
    shifted.params = model.params - h * v;
    const Eigen::VectorXd gm = grad(shifted, data, loss);
    Eigen::VectorXd out = (gp - gm) / (2.0 * h);
    if (!out.allFinite()) throw DomainError("non-finite hvp");
    return out;
}

spectral::HvpOracle hvp_oracle(const MlpModel& model, const Dataset& data, Loss loss) {
    spectral::HvpOracle o;
    o.dim = model.param_count();
    // capture by value: oracle stays valid after the model moves on
    MlpModel snapshot = model;
    o.apply = [snapshot, &data, loss](const Eigen::VectorXd& v) {
        return hvp(snapshot, data, loss, v);
    };
    return o;
}

SelfStabEstimate selfstab_alpha(const MlpModel& model, const Dataset& data, Loss loss,
                                int lanczos_order, std::uint64_t seed, double h) {
    SelfStabEstimate est;
    const Eigen::VectorXd g = grad(model, data, loss);
    const double gnorm = g.norm();
    if (gnorm < 1e-300) return est;
    const Eigen::VectorXd dir = g / gnorm;

    auto lambda_at = [&](const Eigen::VectorXd& params) {
        MlpModel m = model;
        m.params = params;
        const auto oracle = hvp_oracle(m, data, loss);
        const int order = std::min<int>(lanczos_order, static_cast<int>(oracle.dim));
        return spectral::estimate_spectrum(oracle, order, seed);
    };

    const auto here = lambda_at(model.params);
    est.gap = here.ritz_values.size() > 1 ? here.ritz_values[0] - here.ritz_values[1] : kInf;
    const auto plus = lambda_at(model.params + h * dir);
    const auto minus = lambda_at(model.params - h * dir);
    const double dlambda_ds = (plus.lambda1 - minus.lambda1) / (2.0 * h);
    est.value = -gnorm * dlambda_ds;
    est.reliable = est.gap > 1e-6;
    return est;
}

namespace {

subspace::OrthonormalBasis top_k_basis(const spectral::KrylovBasis& basis,
                                       const spectral::TridiagEigen& eig, int k) {
    const int kk = std::min<int>(k, static_cast<int>(eig.values.size()));
    subspace::OrthonormalBasis b;
    b.columns.resize(basis.columns.rows(), kk);
    for (int i = 0; i < kk; ++i) b.columns.col(i) = basis.columns * eig.vectors.col(i);
    // Ritz vectors of a symmetric tridiagonal are orthonormal already;
    // normalize defensively against float drift.
    for (int i = 0; i < kk; ++i) b.columns.col(i).normalize();
    return b;
}

}  // namespace

TrainLog train(MlpModel& model, const Dataset& data, Loss loss, const TrainConfig& cfg,
               const DiagnosticsConfig& diag) {
    if (cfg.epochs < 1) throw DomainError("epochs must be >= 1");
    TrainLog log;
    log.records.reserve(static_cast<std::size_t>(cfg.epochs));

    std::string opt_name = cfg.optimizer;
    double eta = cfg.eta;
    optim::OptimizerConfig ocfg;
    ocfg.eta = eta;
    ocfg.q_thresh = cfg.q_thresh;
    ocfg.bias_correction = true;
    optim::OptimizerState ostate = optim::OptimizerState::zeros(model.param_count());

    Rng noise_rng(derive_seed(cfg.seed, 0x5dULL));
    const int batch = cfg.batch > 0 ? cfg.batch
                                    : std::max<int>(1, static_cast<int>(data.inputs.rows()) / 8);

    Eigen::VectorXd prev_params = model.params;
    bool have_prev = false;
    double prev_u = 0.0;
    bool have_prev_u = false;
    std::optional<subspace::OrthonormalBasis> baseline;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& iv : cfg.interventions) {
            if (iv.epoch == epoch) {
                if (iv.new_eta) {
                    eta = *iv.new_eta;
                    ocfg.eta = eta;
                }
                if (iv.new_optimizer) opt_name = *iv.new_optimizer;
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = forward_loss(model, data, loss);
        if (!is_finite(rec.loss) || rec.loss > 1e30) {
            log.status = "diverged";
            log.records.push_back(rec);
            break;
        }

        const bool do_diag = diag.every > 0 && (epoch % diag.every == 0);
        rec.diagnostics = do_diag;
        rec.u_proxy = std::numeric_limits<double>::quiet_NaN();
        rec.gamma_u_abs = std::numeric_limits<double>::quiet_NaN();
        rec.alpha_selfstab = std::numeric_limits<double>::quiet_NaN();
        if (do_diag) {
            const auto oracle = hvp_oracle(model, data, loss);
            const int order = std::min<int>(diag.lanczos_order, static_cast<int>(oracle.dim));
            const auto [tri, kry] = spectral::lanczos_mpk(oracle, order,
                                                          derive_seed(diag.seed, epoch));
            const auto eig = spectral::tridiag_eigen(tri, true);
            rec.lambda_max = eig.values[0];
            rec.lambda_neg = eig.values[eig.values.size() - 1];
            rec.delta_t = eta * rec.lambda_max - 2.0;

            const auto basis = top_k_basis(kry, eig, diag.top_k);
            if (!baseline && rec.delta_t > 0.0) {
                baseline = basis;
                log.instability_onset = epoch;
            }
            rec.subspace_score =
                baseline ? subspace::misalignment_score(*baseline, basis) : 0.0;

            if (diag.track_u_proxy) {
                Eigen::VectorXd v1 = kry.columns * eig.vectors.col(0);
                v1.normalize();
                auto lambda_along = [&](const Eigen::VectorXd& p) {
                    MlpModel m = model;
                    m.params = p;
                    const auto o = hvp_oracle(m, data, loss);
                    return spectral::top_eigenpair(o, order, derive_seed(diag.seed, epoch))
                        .first;
                };
                const double h = diag.ut_h;
                const double lp = lambda_along(model.params + h * v1);
                const double lm = lambda_along(model.params - h * v1);
                rec.u_proxy = (lp - 2.0 * rec.lambda_max + lm) / (h * h);
                if (have_prev_u) {
                    const double au = std::abs(prev_u), bu = std::abs(rec.u_proxy);
                    if (au > 0.0 && bu > 0.0)
                        rec.gamma_u_abs = std::max(au / bu, bu / au);
                    rec.xi_sign = rec.u_proxy > prev_u ? 1.0 : (rec.u_proxy < prev_u ? -1.0 : 0.0);
                }
                prev_u = rec.u_proxy;
                have_prev_u = true;
            }
            if (diag.track_selfstab) {
                const auto ss = selfstab_alpha(model, data, loss, order,
                                               derive_seed(diag.seed, 0xa1fa + epoch));
                rec.alpha_selfstab =
                    ss.reliable ? ss.value : std::numeric_limits<double>::quiet_NaN();
            }
        }

        rec.theta_osc = have_prev ? 0.5 * (model.params - prev_params).norm() : 0.0;
        log.records.push_back(rec);
        prev_params = model.params;
        have_prev = true;

        // --- update step
        Eigen::VectorXd g = grad(model, data, loss);
        if (opt_name == "sgd" && cfg.noise_alpha != 0.0) {
            // pseudo-minibatch noise: gradient on a random subset minus
            // the full gradient, zero mean over subset draws
            Dataset sub;
            sub.inputs.resize(batch, data.inputs.cols());
            sub.targets.resize(batch, data.targets.cols());
            for (int i = 0; i < batch; ++i) {
                const auto idx = static_cast<Eigen::Index>(
                    noise_rng.uniform() * static_cast<double>(data.inputs.rows()));
                sub.inputs.row(i) = data.inputs.row(idx);
                sub.targets.row(i) = data.targets.row(idx);
            }
            const Eigen::VectorXd gb = grad(model, sub, loss);
            g += cfg.noise_alpha * (gb - g);
        }

        if (opt_name == "gd" || opt_name == "sgd") {
            model.params = optim::gd_step(model.params, g, eta);
        } else if (opt_name == "adam") {
            auto [s, p] = optim::adam_step(ostate, model.params, g, ocfg);
            ostate = std::move(s);
            model.params = std::move(p);
        } else if (opt_name == "rmsprop") {
            optim::OptimizerConfig rcfg = ocfg;
            rcfg.beta1 = 0.0;
            auto [s, p] = optim::adam_step(ostate, model.params, g, rcfg);
            ostate = std::move(s);
            model.params = std::move(p);
        } else if (opt_name == "clipped-ada") {
            auto [s, p] = optim::clipped_ada_step(ostate, model.params, g, ocfg);
            ostate = std::move(s);
            model.params = std::move(p);
        } else {
            throw DomainError("unknown optimizer: " + opt_name);
        }
    }
    return log;
}

}  // namespace ilab::train
