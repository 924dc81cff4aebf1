#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "ilab/common.hpp"

namespace ilab::rmt {

struct SpikedModelConfig {
    int dim = 100;        // P
    int batch = 128;      // B
    double sigma = 0.1;   // bulk scale
    double lambda1 = 10;  // spike
    std::uint64_t seed = 1;
    // false: GOE-style entry variance sigma^2 / P so the bulk edge of Xi
    // sits at 2 sigma; true: the literal "variance sigma^2 per entry"
    // reading (edge at 2 sigma sqrt(P)).
    bool per_entry_variance = false;
};

// gamma = 1 - sigma^2 / (B lambda1^2) above the detection threshold
// lambda1 > 2 sigma / sqrt(B); 0 at or below it.
double overlap_formula(double lambda1, double sigma, double batch);

// Symmetric Wigner noise matrix with the configured normalization.
Eigen::MatrixXd sample_wigner(int dim, double sigma, std::uint64_t seed,
                              bool per_entry_variance = false);

// lambda1 e1 e1^T + Xi / sqrt(B).
Eigen::MatrixXd sample_spiked(const SpikedModelConfig& cfg);

struct OverlapResult {
    double mean = 0.0;
    double ci_half = 0.0;  // 95% normal CI half-width
    double formula = 0.0;
    std::vector<double> trials;
};

// Mean squared overlap |<v1_hat, e1>|^2 over independent trials; the
// top eigenvector comes from the spectral module.
OverlapResult empirical_overlap(const SpikedModelConfig& cfg, int trials);

// sigma_eps^2 = lambda_-^2 / 4 (Wigner edge inversion).
double bulk_variance_from_edge(double lambda_neg_edge);

// Proportional non-quadraticness proxy -lambda_- / (2 u^T S u).
double nonquadraticness_ratio(double lambda_neg_edge, double u_s_u);

// CDF of the semicircle law on [-2 sigma, 2 sigma] (for bulk tests).
double semicircle_cdf(double x, double sigma);

}  // namespace ilab::rmt
