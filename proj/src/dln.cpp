#include "ilab/dln.hpp"

#include <algorithm>
#include <cmath>

#include "ilab/spectral.hpp"

namespace ilab::dln {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

double LossModel::value(double theta) const {
    switch (kind) {
        case Kind::Quadratic:
            return 0.5 * theta * theta;
        case Kind::Mse:
            return 0.5 * (theta - target) * (theta - target);
        case Kind::BinaryCe: {
            // log(1 + exp(-y theta)), stable form
            const double m = -target * theta;
            return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
        }
    }
    return 0.0;
}

double LossModel::d1(double theta) const {
    switch (kind) {
        case Kind::Quadratic:
            return theta;
        case Kind::Mse:
            return theta - target;
        case Kind::BinaryCe:
            return -target / (1.0 + std::exp(target * theta));
    }
    return 0.0;
}

double LossModel::d2(double theta) const {
    switch (kind) {
        case Kind::Quadratic:
        case Kind::Mse:
            return 1.0;
        case Kind::BinaryCe: {
            const double s = sigmoid(target * theta);
            return s * (1.0 - s);
        }
    }
    return 0.0;
}

LossModel LossModel::from_name(const std::string& name, double target) {
    if (name == "quad" || name == "quadratic") return quadratic();
    if (name == "mse") return mse(target);
    if (name == "bce" || name == "binary_ce") return binary_ce(target == 0.0 ? 1.0 : target);
    throw DomainError("unknown loss kind: " + name);
}

Eigen::Matrix2d hessian2(const Dln2State& s, const LossModel& loss) {
    const double theta = s.product();
    const double z1 = loss.d1(theta);
    const double z2 = loss.d2(theta);
    Eigen::Matrix2d h;
    const double off = z2 * s.theta1 * s.theta2 + z1;
    h << z2 * s.theta2 * s.theta2, off, off, z2 * s.theta1 * s.theta1;
    return h;
}

double beta(const Dln2State& s, const LossModel& loss) {
    const double theta = s.product();
    const double z1 = loss.d1(theta);
    const double z2 = loss.d2(theta);
    const double denom = 2.0 * (z1 + z2 * theta);
    if (std::abs(denom) < 1e-300) throw DomainError("Newton-step singularity");
    return std::abs(z2 * (s.theta2 * s.theta2 - s.theta1 * s.theta1) / denom);
}

double rotation_ratio_r2(double beta_value) {
    if (beta_value < 0.0) throw DomainError("beta must be nonnegative");
    return beta_value + std::sqrt(beta_value * beta_value + 1.0);
}

double gamma_beta(const Dln2State& s, const LossModel& loss, double eta) {
    if (s.theta1 == 0.0 || s.theta2 == 0.0) throw DomainError("zero parameter in DLN state");
    const double z1 = loss.d1(s.product());
    const double zeta = s.theta1 / s.theta2 + s.theta2 / s.theta1;
    const double x = eta * z1;
    const double denom = 1.0 - zeta * x + x * x;
    if (std::abs(denom) < 1e-300) throw DomainError("Newton-step singularity");
    return std::abs((1.0 - x * x) / denom);
}

EosThreshold eta_eos(const Dln2State& s, const LossModel& loss) {
    const double z1 = loss.d1(s.product());
    if (z1 == 0.0) throw DomainError("at minimum, threshold undefined");
    EosThreshold out;
    double t1 = s.theta1, t2 = s.theta2;
    if (std::abs(t1) > std::abs(t2)) {
        std::swap(t1, t2);
        out.relabeled = true;
    }
    if (t2 == 0.0) throw DomainError("zero parameter in DLN state");
    out.eta_eos = 2.0 * std::abs(t1) / (std::abs(t2) * std::abs(z1));
    out.xi = t1 * t1 / (t1 * t1 + t2 * t2);
    out.boundary = out.eta_eos * (1.0 - out.xi);
    out.instability_exists = t2 * t2 > 2.0 * t1 * t1;
    return out;
}

Eigen2 eigen2(const Eigen::Matrix2d& h) {
    const double a = h(0, 0), b = h(0, 1), d = h(1, 1);
    const double tr = a + d;
    const double gap = std::hypot(a - d, 2.0 * b);
    Eigen2 out;
    out.lambda1 = 0.5 * (tr + gap);
    out.lambda2 = 0.5 * (tr - gap);
    if (gap == 0.0) {
        out.v1 = Eigen::Vector2d(1.0, 0.0);
        out.v2 = Eigen::Vector2d(0.0, 1.0);
        return out;
    }
    // Pick the better-conditioned row of (H - lambda1 I).
    Eigen::Vector2d v1a(b, out.lambda1 - a), v1b(out.lambda1 - d, b);
    out.v1 = v1a.norm() >= v1b.norm() ? v1a : v1b;
    out.v1.normalize();
    out.v2 = Eigen::Vector2d(-out.v1[1], out.v1[0]);
    return out;
}

namespace {

// Angle in (-pi/2, pi/2], sign fixed so the theta2-component >= 0.
double eigvec_angle(Eigen::Vector2d v) {
    if (v[1] < 0.0 || (v[1] == 0.0 && v[0] < 0.0)) v = -v;
    return std::atan2(v[0], v[1]);
}

}  // namespace

Trajectory gd_trajectory(const Dln2State& s0, const LossModel& loss, double eta, int steps) {
    if (steps < 1) throw DomainError("steps must be >= 1");
    Trajectory traj;
    traj.points.reserve(steps + 1);
    Dln2State s = s0;
    for (int k = 0; k <= steps; ++k) {
        if (std::abs(s.theta1) > 1e100 || std::abs(s.theta2) > 1e100) {
            traj.diverged = true;
            break;
        }
        TrajectoryPoint p;
        p.step = k;
        p.state = s;
        p.loss = loss.value(s.product());
        const Eigen::Matrix2d h = hessian2(s, loss);
        const Eigen2 eig = eigen2(h);
        p.lambda1 = eig.lambda1;
        p.angle = eigvec_angle(eig.v1);
        try {
            p.beta = beta(s, loss);
            p.rotation_ratio = rotation_ratio_r2(p.beta);
        } catch (const DomainError&) {
            p.beta = std::numeric_limits<double>::quiet_NaN();
            p.rotation_ratio = std::numeric_limits<double>::quiet_NaN();
        }
        traj.points.push_back(p);
        if (k == steps) break;
        const double z1 = loss.d1(s.product());
        const double d1 = eta * z1 * s.theta2;
        const double d2 = eta * z1 * s.theta1;
        s.theta1 -= d1;
        s.theta2 -= d2;
    }
    return traj;
}

double DlnNState::product() const {
    double p = 1.0;
    for (Eigen::Index i = 0; i < thetas.size(); ++i) p *= thetas[i];
    return p;
}

Eigen::MatrixXd hessian_n(const DlnNState& s, const LossModel& loss) {
    const Eigen::Index n = s.thetas.size();
    for (Eigen::Index i = 0; i < n; ++i)
        if (s.thetas[i] == 0.0) throw DomainError("zero parameter in DLN state");
    const double theta = s.product();
    const double z1 = loss.d1(theta);
    const double z2 = loss.d2(theta);
    const double d = z2 * theta * theta + z1 * theta;
    Eigen::MatrixXd h(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = d / (s.thetas[i] * s.thetas[j]);
            if (i == j) v -= z1 * theta / (s.thetas[i] * s.thetas[i]);
            h(i, j) = v;
            h(j, i) = v;
        }
    }
    return h;
}

Eigen::VectorXd leading_eigvec_approx(const DlnNState& s) {
    const Eigen::Index n = s.thetas.size();
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (s.thetas[i] == 0.0) throw DomainError("zero parameter in DLN state");
        v[i] = 1.0 / s.thetas[i];
    }
    v.normalize();
    return v;
}

double constancy_residual(const Eigen::MatrixXd& h, const Eigen::VectorXd& v, double lambda,
                          const DlnNState& s, const LossModel& loss) {
    (void)h;
    const Eigen::Index n = s.thetas.size();
    const double theta = s.product();
    const double z1 = loss.d1(theta);
    double cmin = kInf, cmax = -kInf, csum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = s.thetas[i];
        const double c = (lambda + z1 * theta / (ti * ti)) * v[i] * ti;
        cmin = std::min(cmin, c);
        cmax = std::max(cmax, c);
        csum += c;
    }
    const double mean = csum / static_cast<double>(n);
    return (cmax - cmin) / std::max(std::abs(mean), 1e-300);
}

double rotation_ratio_rn(const DlnNState& s, double lambda1, const LossModel& loss, int k) {
    const Eigen::Index n = s.thetas.size();
    if (k < 0 || k >= n) throw DomainError("index out of range");
    Eigen::Index sharp = 0;
    for (Eigen::Index i = 1; i < n; ++i)
        if (std::abs(s.thetas[i]) < std::abs(s.thetas[sharp])) sharp = i;
    const double theta = s.product();
    const double z1 = loss.d1(theta);
    auto f = [&](double t) { return std::abs(t) * (lambda1 + z1 * theta / (t * t)); };
    return f(s.thetas[k]) / f(s.thetas[sharp]);
}

double theta_crit(double lambda1, const LossModel& loss, double theta_prod) {
    return std::cbrt(2.0 * loss.d1(theta_prod) * theta_prod / lambda1);
}

double period2_eta(const std::function<double(double)>& z_prime, double theta0, double eta_lo,
                   double eta_hi, double tol, int max_iter) {
    auto two_step = [&](double eta) {
        const double t1 = theta0 - eta * z_prime(theta0);
        const double t2 = t1 - eta * z_prime(t1);
        return t2 - theta0;
    };
    double lo = eta_lo, hi = eta_hi;
    double flo = two_step(lo), fhi = two_step(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw DomainError("bracket does not straddle equilibrium");
    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < max_iter; ++it) {
        mid = 0.5 * (lo + hi);
        const double fm = two_step(mid);
        if (std::abs(fm) <= tol) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    if (std::abs(two_step(mid)) <= tol) return mid;
    throw ConvergenceError("period-2 bisection did not reach tolerance");
}

Eigen::MatrixXd shared_rescaled_matrix(const Eigen::MatrixXd& h, const Eigen::VectorXd& thetas) {
    const Eigen::Index n = h.rows();
    if (thetas.size() != n) throw DomainError("theta length must match Hessian size");
    Eigen::MatrixXd b(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        if (thetas[k] == 0.0) throw DomainError("zero parameter in DLN state");
        for (Eigen::Index j = 0; j < n; ++j) b(k, j) = thetas[k] / thetas[j] * h(k, j);
    }
    return b;
}

double omega_ratio_sq(const Eigen::MatrixXd& h, const Eigen::VectorXd& thetas, int i, int j,
                      std::uint64_t seed) {
    const int n = static_cast<int>(h.rows());
    if (i < 0 || j < 0 || i >= n || j >= n) throw DomainError("index out of range");
    if (thetas.size() != n) throw DomainError("theta length must match Hessian size");
    auto [lambda, v1] = spectral::top_eigenpair(spectral::dense_oracle(h), n, seed);
    (void)lambda;
    const double wi = v1[i] * thetas[i];
    const double wj = v1[j] * thetas[j];
    if (wi == 0.0) throw DomainError("vanishing omega component");
    const double r = wj / wi;
    return r * r;
}

}  // namespace ilab::dln
