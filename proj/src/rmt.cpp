#include "ilab/rmt.hpp"

#include <cmath>

#include "ilab/rng.hpp"
#include "ilab/spectral.hpp"

namespace ilab::rmt {

double overlap_formula(double lambda1, double sigma, double batch) {
    if (!(lambda1 > 0.0) || !(sigma > 0.0) || !(batch > 0.0))
        throw DomainError("overlap formula wants positive inputs");
    if (lambda1 > 2.0 * sigma / std::sqrt(batch))
        return 1.0 - sigma * sigma / (batch * lambda1 * lambda1);
    return 0.0;
}

Eigen::MatrixXd sample_wigner(int dim, double sigma, std::uint64_t seed,
                              bool per_entry_variance) {
    if (dim < 2) throw DomainError("wigner dim must be >= 2");
    Rng rng(seed);
    const double off_sd =
        per_entry_variance ? sigma : sigma / std::sqrt(static_cast<double>(dim));
    const double diag_sd = std::sqrt(2.0) * off_sd;
    Eigen::MatrixXd xi(dim, dim);
    for (int i = 0; i < dim; ++i) {
        xi(i, i) = diag_sd * rng.normal();
        for (int j = i + 1; j < dim; ++j) {
            const double v = off_sd * rng.normal();
            xi(i, j) = v;
            xi(j, i) = v;
        }
    }
    return xi;
}

Eigen::MatrixXd sample_spiked(const SpikedModelConfig& cfg) {
    if (cfg.dim < 2 || cfg.batch < 1 || !(cfg.sigma > 0.0) || !(cfg.lambda1 > 0.0))
        throw DomainError("invalid spiked model config");
    Eigen::MatrixXd h =
        sample_wigner(cfg.dim, cfg.sigma, cfg.seed, cfg.per_entry_variance) /
        std::sqrt(static_cast<double>(cfg.batch));
    h(0, 0) += cfg.lambda1;  // spike along e1
    return h;
}

OverlapResult empirical_overlap(const SpikedModelConfig& cfg, int trials) {
    if (trials < 10) throw DomainError("need at least 10 trials");
    OverlapResult out;
    out.formula = overlap_formula(cfg.lambda1, cfg.sigma, cfg.batch);
    out.trials.reserve(static_cast<std::size_t>(trials));
    const int order = std::min(cfg.dim, 64);
    for (int t = 0; t < trials; ++t) {
        SpikedModelConfig c = cfg;
        c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        const Eigen::MatrixXd h = sample_spiked(c);
        const auto [lambda, v1] =
            spectral::top_eigenpair(spectral::dense_oracle(h), order, derive_seed(c.seed, 77));
        (void)lambda;
        out.trials.push_back(v1[0] * v1[0]);
    }
    double sum = 0.0;
    for (double v : out.trials) sum += v;
    out.mean = sum / static_cast<double>(trials);
    double var = 0.0;
    for (double v : out.trials) var += (v - out.mean) * (v - out.mean);
    var /= static_cast<double>(trials - 1);
    out.ci_half = 1.959963984540054 * std::sqrt(var / static_cast<double>(trials));
    return out;
}

double bulk_variance_from_edge(double lambda_neg_edge) {
    if (!(lambda_neg_edge < 0.0)) throw DomainError("negative edge must be negative");
    return 0.25 * lambda_neg_edge * lambda_neg_edge;
}

double nonquadraticness_ratio(double lambda_neg_edge, double u_s_u) {
    if (!(lambda_neg_edge < 0.0)) throw DomainError("negative edge must be negative");
    if (!(u_s_u > 0.0)) throw DomainError("u^T S u must be positive");
    return -lambda_neg_edge / (2.0 * u_s_u);
}

double semicircle_cdf(double x, double sigma) {
    const double r = 2.0 * sigma;
    if (x <= -r) return 0.0;
    if (x >= r) return 1.0;
    const double z = x / r;
    return 0.5 + (z * std::sqrt(1.0 - z * z) + std::asin(z)) / M_PI;
}

}  // namespace ilab::rmt
