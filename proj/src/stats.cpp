#include "ilab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace ilab::stats {

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const auto n = static_cast<long>(sorted.size());
    long k = static_cast<long>(std::ceil(p * static_cast<double>(n)));
    k = std::clamp(k, 1L, n);
    return sorted[static_cast<std::size_t>(k - 1)];
}

double weighted_quantile(std::span<const double> values, std::span<const double> weights,
                         double p) {
    if (values.empty() || values.size() != weights.size())
        throw DomainError("weighted quantile needs matching nonempty arrays");
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    double total = 0.0;
    for (double w : weights) total += w;
    double cum = 0.0;
    for (std::size_t i : idx) {
        cum += weights[i];
        if (cum >= p * total - 1e-15 * total) return values[i];
    }
    return values[idx.back()];
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw DomainError("mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double stdev(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

double silverman_bandwidth(std::span<const double> xs) {
    const double sd = stdev(xs);
    const double n = static_cast<double>(xs.size());
    const double bw = 1.06 * sd * std::pow(n, -0.2);
    return bw > 0.0 ? bw : 1e-3;
}

double Kde::mode() const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < density.size(); ++i)
        if (density[i] > density[best]) best = i;  // strict: leftmost maximizer
    return grid[best];
}

int Kde::count_modes(double rel_prominence) const {
    if (density.empty()) return 0;
    const double peak = *std::max_element(density.begin(), density.end());
    const double floor_level = rel_prominence * peak;
    int modes = 0;
    bool rising = false;
    double valley = 0.0;
    for (std::size_t i = 1; i < density.size(); ++i) {
        if (density[i] > density[i - 1]) {
            if (!rising && density[i - 1] + floor_level < peak) valley = density[i - 1];
            rising = true;
        } else if (density[i] < density[i - 1] && rising) {
            if (density[i - 1] - valley > floor_level) ++modes;
            rising = false;
            valley = density[i - 1];
        }
    }
    if (rising) ++modes;
    return std::max(modes, 1);
}

Kde gaussian_kde(std::span<const double> xs, std::span<const double> weights, double bandwidth,
                 int grid_size) {
    if (xs.empty()) throw DomainError("kde of empty sample");
    if (!weights.empty() && weights.size() != xs.size())
        throw DomainError("weights must match samples");
    double bw = bandwidth;
    if (bw <= 0.0) bw = silverman_bandwidth(xs);
    auto [mn_it, mx_it] = std::minmax_element(xs.begin(), xs.end());
    const double lo = *mn_it - 4.0 * bw;
    const double hi = *mx_it + 4.0 * bw;
    const double dx = (hi - lo) / static_cast<double>(grid_size - 1);

    // Linear binning, then convolution with a truncated Gaussian.
    std::vector<double> mass(static_cast<std::size_t>(grid_size), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double pos = (xs[i] - lo) / dx;
        const auto j = static_cast<long>(std::floor(pos));
        const double frac = pos - static_cast<double>(j);
        if (j >= 0 && j + 1 < grid_size) {
            mass[static_cast<std::size_t>(j)] += w * (1.0 - frac);
            mass[static_cast<std::size_t>(j) + 1] += w * frac;
        } else if (j < 0) {
            mass.front() += w;
        } else {
            mass.back() += w;
        }
        total += w;
    }

    const int reach = std::min(grid_size - 1, static_cast<int>(std::ceil(5.0 * bw / dx)));
    std::vector<double> kernel(static_cast<std::size_t>(reach) + 1);
    for (int k = 0; k <= reach; ++k) {
        const double u = static_cast<double>(k) * dx / bw;
        kernel[static_cast<std::size_t>(k)] = std::exp(-0.5 * u * u);
    }
    const double norm = 1.0 / (std::sqrt(2.0 * M_PI) * bw * total);

    Kde out;
    out.bandwidth = bw;
    out.grid.resize(static_cast<std::size_t>(grid_size));
    out.density.assign(static_cast<std::size_t>(grid_size), 0.0);
    for (int i = 0; i < grid_size; ++i)
        out.grid[static_cast<std::size_t>(i)] = lo + dx * static_cast<double>(i);
    for (int i = 0; i < grid_size; ++i) {
        const double m = mass[static_cast<std::size_t>(i)];
        if (m == 0.0) continue;
        const int k0 = std::max(0, i - reach);
        const int k1 = std::min(grid_size - 1, i + reach);
        for (int k = k0; k <= k1; ++k)
            out.density[static_cast<std::size_t>(k)] +=
                m * kernel[static_cast<std::size_t>(std::abs(k - i))];
    }
    for (auto& d : out.density) d *= norm;
    return out;
}

DistStats dist_stats(std::span<const double> samples, double kde_bandwidth) {
    if (samples.empty()) throw DomainError("dist_stats of empty sample");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    DistStats s;
    s.n = static_cast<long>(sorted.size());
    s.median = quantile_sorted(sorted, 0.5);
    s.q05 = quantile_sorted(sorted, 0.05);
    s.q95 = quantile_sorted(sorted, 0.95);
    s.edge_spread = s.q95 - s.q05;
    s.mean = mean(sorted);
    if (sorted.front() == sorted.back()) {
        s.mode = sorted.front();  // point mass
    } else {
        s.mode = gaussian_kde(sorted, {}, kde_bandwidth).mode();
    }
    return s;
}

DistStats dist_stats_weighted(std::span<const double> values, std::span<const double> weights,
                              double kde_bandwidth) {
    if (values.empty() || values.size() != weights.size())
        throw DomainError("dist_stats_weighted needs matching nonempty arrays");
    DistStats s;
    s.n = static_cast<long>(values.size());
    s.median = weighted_quantile(values, weights, 0.5);
    s.q05 = weighted_quantile(values, weights, 0.05);
    s.q95 = weighted_quantile(values, weights, 0.95);
    s.edge_spread = s.q95 - s.q05;
    double total = 0.0, acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        acc += values[i] * weights[i];
        total += weights[i];
    }
    s.mean = acc / total;
    auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    if (*mn_it == *mx_it) {
        s.mode = *mn_it;
    } else {
        s.mode = gaussian_kde(values, weights, kde_bandwidth).mode();
    }
    return s;
}

double dkw_epsilon(long n, double confidence) {
    if (n < 1) throw DomainError("dkw needs n >= 1");
    const double delta = 1.0 - confidence;
    if (delta <= 0.0 || delta >= 1.0) throw DomainError("confidence must be in (0,1)");
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        worst = std::max({worst, std::abs(f - lo), std::abs(f - hi)});
    }
    return worst;
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("pearson needs matched n >= 2");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

namespace {
std::vector<double> ranks(std::span<const double> x) {
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> r(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank for ties
        for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}
}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    return pearson(rx, ry);
}

}  // namespace ilab::stats
