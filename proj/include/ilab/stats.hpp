#pragma once

#include <functional>
#include <span>
#include <vector>

#include "ilab/common.hpp"

namespace ilab::stats {

// inf{u : F_hat(u) >= p} on a sorted sample.
double quantile_sorted(std::span<const double> sorted, double p);

// Same convention on a weighted atom list (values sorted, weights
// normalized by the caller or not; normalization happens internally).
double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p);

double mean(std::span<const double> xs);
double stdev(std::span<const double> xs);

// Silverman's rule 1.06 sigma_hat n^{-1/5}.
double silverman_bandwidth(std::span<const double> xs);

struct Kde {
    std::vector<double> grid;
    std::vector<double> density;
    double bandwidth = 0.0;
    // Leftmost maximizer of the estimated density.
    double mode() const;
    // Local maxima count with a relative prominence filter (unimodality
    // diagnostics).
    int count_modes(double rel_prominence = 0.05) const;
};

// Gaussian KDE on a regular grid via linear binning. Weights may be
// empty (equal weights). bandwidth <= 0 selects Silverman's rule.
Kde gaussian_kde(std::span<const double> xs, std::span<const double> weights = {},
                 double bandwidth = 0.0, int grid_size = 2048);

struct DistStats {
    double median = 0.0;
    double mode = 0.0;
    double q05 = 0.0;
    double q95 = 0.0;
    double edge_spread = 0.0;  // q95 - q05
    double mean = 0.0;
    long n = 0;
};

// Median (inf convention), KDE mode, 5%/95% quantiles and their spread.
DistStats dist_stats(std::span<const double> samples, double kde_bandwidth = 0.0);
DistStats dist_stats_weighted(std::span<const double> values, std::span<const double> weights,
                              double kde_bandwidth = 0.0);

// Dvoretzky-Kiefer-Wolfowitz half-band sqrt(log(2/delta) / (2n)).
double dkw_epsilon(long n, double confidence);

// Kolmogorov-Smirnov distance between the ECDF of samples and a CDF.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace ilab::stats
