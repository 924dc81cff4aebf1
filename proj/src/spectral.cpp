#include "ilab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "ilab/rng.hpp"

namespace ilab::spectral {

HvpOracle dense_oracle(Eigen::MatrixXd a) {
    auto mat = std::make_shared<Eigen::MatrixXd>(std::move(a));
    HvpOracle o;
    o.dim = mat->rows();
    o.apply = [mat](const Eigen::VectorXd& v) -> Eigen::VectorXd { return (*mat) * v; };
    return o;
}

double symmetry_defect(const HvpOracle& oracle, int probes, std::uint64_t seed) {
    Rng rng(seed);
    const auto n = oracle.dim;
    double worst = 0.0;
    for (int p = 0; p < probes; ++p) {
        Eigen::VectorXd a(n), b(n);
        for (Eigen::Index i = 0; i < n; ++i) a[i] = rng.normal();
        for (Eigen::Index i = 0; i < n; ++i) b[i] = rng.normal();
        const Eigen::VectorXd ha = oracle.apply(a);
        const Eigen::VectorXd hb = oracle.apply(b);
        const double scale = a.norm() * b.norm() * std::max(ha.norm() / std::max(a.norm(), 1e-300),
                                                            hb.norm() / std::max(b.norm(), 1e-300));
        const double defect = std::abs(a.dot(hb) - b.dot(ha));
        worst = std::max(worst, defect / std::max(scale, 1e-300));
    }
    return worst;
}

std::pair<Eigen::VectorXd, double> mpk_orthogonalize(const Eigen::VectorXd& w,
                                                     const Eigen::MatrixXd& basis) {
    const double w_norm = w.norm();
    if (w_norm < 1e-300) throw DomainError("degenerate probe");
    if (basis.cols() == 0) return {w, 1.0};
    Eigen::VectorXd w_perp = w - basis * (basis.transpose() * w);
    const double gamma = w_perp.norm() / w_norm;
    return {std::move(w_perp), gamma};
}

namespace {

Eigen::VectorXd random_unit(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd v(n);
    double norm = 0.0;
    // Resample on a degenerate draw; astronomically unlikely but cheap.
    do {
        for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
        norm = v.norm();
    } while (norm < 1e-300);
    return v / norm;
}

// Fresh direction orthogonal to the current basis columns [0, cols).
Eigen::VectorXd fresh_orthogonal(const Eigen::MatrixXd& basis, Eigen::Index cols, Rng& rng) {
    const Eigen::Index n = basis.rows();
    for (int tries = 0; tries < 64; ++tries) {
        Eigen::VectorXd v = random_unit(n, rng);
        if (cols > 0) {
            v -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
            // one cleanup pass
            v -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * v);
        }
        const double norm = v.norm();
        if (norm > 1e-8) return v / norm;
    }
    throw ConvergenceError("could not draw a direction orthogonal to the current basis");
}

}  // namespace

std::pair<TridiagonalResult, KrylovBasis> lanczos_mpk(const HvpOracle& oracle, int order,
                                                      std::uint64_t seed,
                                                      const LanczosOptions& opts) {
    const Eigen::Index n = oracle.dim;
    if (order < 1 || order > n) throw DomainError("lanczos order must satisfy 1 <= m <= dim");
    if (opts.max_attempts < 1) throw DomainError("max_attempts must be >= 1");

    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
        Eigen::VectorXd offdiag = Eigen::VectorXd::Zero(std::max(order - 1, 0));
        Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, order);
        u.col(0) = random_unit(n, rng);

        double beta = 0.0;
        double h_scale = 0.0;  // running estimate of the operator scale
        bool restart = false;

        for (int i = 0; i < order && !restart; ++i) {
            const Eigen::VectorXd ui = u.col(i);
            Eigen::VectorXd w = oracle.apply(ui);
            if (!w.allFinite()) throw DomainError("oracle produced a non-finite vector");
            const double a = w.dot(ui);
            w -= a * ui;
            if (i > 0) w -= beta * u.col(i - 1);
            diag[i] = a;
            h_scale = std::max({h_scale, std::abs(a) + beta, 1e-300});

            if (i + 1 >= order) break;

            // Exact invariant subspace: continue the basis with a fresh
            // direction rather than burning an attempt.
            if (w.norm() <= 1e-12 * h_scale) {
                offdiag[i] = 0.0;
                u.col(i + 1) = fresh_orthogonal(u, i + 1, rng);
                beta = 0.0;
                continue;
            }

            auto [w_perp, gamma] = mpk_orthogonalize(w, u.leftCols(i + 1));
            if (gamma < opts.gamma_max) {
                // twice is enough
                if (w_perp.norm() <= 1e-12 * h_scale) {
                    offdiag[i] = 0.0;
                    u.col(i + 1) = fresh_orthogonal(u, i + 1, rng);
                    beta = 0.0;
                    continue;
                }
                std::tie(w_perp, gamma) = mpk_orthogonalize(w_perp, u.leftCols(i + 1));
                if (gamma < opts.gamma_min) {
                    restart = true;  // declare dependence; new attempt
                    break;
                }
            }
            beta = w_perp.norm();
            if (beta <= 1e-12 * h_scale) {
                offdiag[i] = 0.0;
                u.col(i + 1) = fresh_orthogonal(u, i + 1, rng);
                beta = 0.0;
                continue;
            }
            offdiag[i] = beta;
            u.col(i + 1) = w_perp / beta;
        }

        if (!restart) {
            return {TridiagonalResult{std::move(diag), std::move(offdiag)},
                    KrylovBasis{std::move(u)}};
        }
    }
    throw ConvergenceError("Lanczos failed to build an order-" + std::to_string(order) +
                           " basis after " + std::to_string(opts.max_attempts) + " restarts");
}

TridiagEigen tridiag_eigen(const TridiagonalResult& t, bool want_vectors) {
    const int n = static_cast<int>(t.diag.size());
    if (n == 0) return {};
    if (t.offdiag.size() != std::max(n - 1, 0))
        throw DomainError("tridiagonal offdiag length must be m-1");

    Eigen::VectorXd d = t.diag;
    Eigen::VectorXd e(n);
    for (int i = 0; i + 1 < n; ++i) e[i] = t.offdiag[i];
    e[n - 1] = 0.0;
    Eigen::MatrixXd z;
    if (want_vectors) z = Eigen::MatrixXd::Identity(n, n);

    // Implicit-shift QL with Wilkinson shift.
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (++iter > 64) throw ConvergenceError("tridiagonal QL did not converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if (want_vectors) {
                        for (int k = 0; k < n; ++k) {
                            f = z(k, i + 1);
                            z(k, i + 1) = s * z(k, i) + c * f;
                            z(k, i) = c * z(k, i) - s * f;
                        }
                    }
                }
                if (r == 0.0 && m - 1 >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }

    // Sort descending.
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return d[a] > d[b]; });
    TridiagEigen out;
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n, n);
    for (int i = 0; i < n; ++i) {
        out.values[i] = d[idx[i]];
        if (want_vectors) out.vectors.col(i) = z.col(idx[i]);
    }
    return out;
}

SpectrumEstimate estimate_spectrum(const HvpOracle& oracle, int order, std::uint64_t seed,
                                   const LanczosOptions& opts) {
    auto [tri, basis] = lanczos_mpk(oracle, order, seed, opts);
    auto eig = tridiag_eigen(tri, true);
    SpectrumEstimate est;
    est.ritz_values.assign(eig.values.data(), eig.values.data() + eig.values.size());
    est.lambda1 = eig.values[0];
    est.v1 = basis.columns * eig.vectors.col(0);
    est.v1.normalize();
    return est;
}

std::pair<double, Eigen::VectorXd> top_eigenpair(const HvpOracle& oracle, int order,
                                                 std::uint64_t seed, const LanczosOptions& opts) {
    auto est = estimate_spectrum(oracle, order, seed, opts);
    return {est.lambda1, std::move(est.v1)};
}

double directional_curvature(const std::function<double(const Eigen::VectorXd&)>& loss,
                             const Eigen::VectorXd& theta, const Eigen::VectorXd& v, double h) {
    if (!(h > 0.0)) throw DomainError("step h must be positive");
    const double lp = loss(theta + h * v);
    const double l0 = loss(theta);
    const double lm = loss(theta - h * v);
    if (!is_finite(lp) || !is_finite(l0) || !is_finite(lm))
        throw DomainError("non-finite loss evaluation");
    return (lp - 2.0 * l0 + lm) / (h * h);
}

double ut_proxy(const std::function<double(const Eigen::VectorXd&)>& lambda_along,
                const Eigen::VectorXd& theta, const Eigen::VectorXd& v1, double h) {
    if (!(h > 0.0)) throw DomainError("step h must be positive");
    const double lp = lambda_along(theta + h * v1);
    const double l0 = lambda_along(theta);
    const double lm = lambda_along(theta - h * v1);
    return (lp - 2.0 * l0 + lm) / (h * h);
}

}  // namespace ilab::spectral
