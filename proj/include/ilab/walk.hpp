#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ilab/common.hpp"
#include "ilab/rng.hpp"
#include "ilab/stats.hpp"

namespace ilab::walk {

// State-dependent step-size function alpha(x) > 0, strictly increasing
// on the ranges we evaluate it on.
class AlphaFn {
public:
    enum class Kind { Sigmoid, Affine, Tabulated };

    static AlphaFn sigmoid(double beta);              // 1 / (1 + exp(-beta x))
    static AlphaFn affine(double a, double b);        // a + b x, clamped to (0, inf)
    static AlphaFn tabulated(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;
    // d alpha / dx; analytic for sigmoid/affine, finite difference for
    // tabulated points.
    double derivative(double x) const;

    Kind kind() const { return kind_; }
    std::string describe() const;

    // Parse "sigmoid:0.01" or "affine:0.5,0.01".
    static AlphaFn parse(const std::string& spec);

private:
    Kind kind_ = Kind::Sigmoid;
    double p1_ = 0.01, p2_ = 0.0;
    std::vector<double> xs_, ys_;
};

// Initial distribution of X_0.
class InitDist {
public:
    enum class Kind { Point, Gaussian, Uniform, BimodalGaussian };

    static InitDist point(double u);
    static InitDist gaussian(double mu, double sd);           // unimodal
    static InitDist uniform(double a, double b);              // unimodal, bounded
    static InitDist bimodal(double mu1, double mu2, double sd);

    double sample(Rng& rng) const;
    double cdf(double u) const;
    double pdf(double u) const;
    double median() const;
    double mode() const;  // leftmost global maximizer of the density
    bool bounded_above() const;
    double ess_sup() const;  // +inf if unbounded
    // Interval carrying all but `tail_mass` of the probability.
    std::pair<double, double> effective_support(double tail_mass = 1e-12) const;
    bool is_point() const { return kind_ == Kind::Point; }
    bool is_unimodal() const { return kind_ != Kind::BimodalGaussian; }

    Kind kind() const { return kind_; }
    std::string describe() const;

    // Parse "point:0", "unimodal:0,1", "uniform:0,1", "bimodal:0,4" or
    // "bimodal:0,4,1".
    static InitDist parse(const std::string& spec);

private:
    Kind kind_ = Kind::Point;
    double a_ = 0.0, b_ = 0.0, c_ = 1.0;
};

// One update X -> X + xi * alpha(X); xi in {-1, +1}.
double step(double x, int xi, const AlphaFn& alpha);

// The four two-step branch values (T++, T+-, T-+, T--), each carrying
// probability 1/4.
std::array<double, 4> two_step_branches(double x, const AlphaFn& alpha);

// Exact law of X_t from a point mass: 2^t equally weighted atoms.
// atom index bit k = sign of step k (set bit = +).
struct ExactDist {
    std::vector<double> atoms;
    int t = 0;
    double weight() const { return 1.0 / static_cast<double>(atoms.size()); }
    double cdf(double u) const;  // P(X_t <= u)
};
ExactDist enumerate_paths(double x0, const AlphaFn& alpha, int t);

// Extend an exact distribution by one step (atom count doubles).
ExactDist extend_one_step(const ExactDist& d, const AlphaFn& alpha);

struct WalkConfig {
    AlphaFn alpha = AlphaFn::sigmoid(0.01);
    InitDist x0 = InitDist::point(0.0);
    int horizon = 200;        // even
    long n_paths = 100000;
    std::uint64_t master_seed = 1;
};

struct PathEnsemble {
    std::vector<int> times;                     // checkpoint times, ascending
    std::vector<std::vector<double>> samples;   // one array per checkpoint
};

// Simulates n_paths independent walks with per-path RNG substreams
// derived from (master_seed, path_index); bit-identical regardless of
// worker count. checkpoint times must be ascending and <= horizon.
PathEnsemble simulate_ensemble(const WalkConfig& cfg, const std::vector<int>& checkpoints,
                               int n_threads = 1);

// Reachable-range estimate and grid verification of alpha conditions.
struct RangeInfo {
    double lo = 0.0, hi = 0.0;
    double alpha_min = 0.0, alpha_max = 0.0;
    double deriv_min = 0.0, deriv_max = 0.0;
    bool strictly_increasing = false;
};
RangeInfo verify_alpha_on_range(const AlphaFn& alpha, double x_lo, double x_hi, int horizon,
                                int grid_points = 10000);

struct CheckReport {
    std::string name;
    bool passed = false;
    bool precondition_ok = true;
    std::string detail;
    std::vector<std::pair<std::string, double>> metrics;
};

// Point-mass contraction: F_t(u) >= 1/2 for all t <= t_max, strict at
// even t, by exhaustive enumeration.
CheckReport check_pmc(const AlphaFn& alpha, double u, int t_max);

// Every enumerated sign string with nonpositive sum ends strictly below
// the start (zero-sum negativity plus unmatched-minus drops).
CheckReport check_zero_sum_strings(const AlphaFn& alpha, double u, int t);

// Two-step quantitative contraction: three of four branches land below
// u - eps for eps < min(delta1, delta2, delta3), so F_2(u - eps) >= 3/4.
CheckReport check_two_step_contraction(const AlphaFn& alpha, double u);

// Uniform gap under global bounds alpha >= c0, alpha' >= c1 on the
// visited range: S_t = 0 paths satisfy X_t <= u - (t/2) c0 c1, and each
// unmatched minus adds at least c0 of extra drop.
CheckReport check_uniform_gap(const AlphaFn& alpha, double u, int t, double c0, double c1);

// Mass conditions for median contraction: F_2(m0) >= A + (3/4)B + (1/4)C,
// and m2 < m0 whenever B < C.
CheckReport check_mass_conditions(const InitDist& x0, const AlphaFn& alpha);

// Upper-envelope drift for bounded initializations: Z_{t+2} <= Z_t - c,
// Z_t <= b - (t/2)c, median domination F_t(Z_t) >= 1/2, and the finite
// crossing at N = ceil((b - m0)/c).
CheckReport check_envelope_drift(const InitDist& x0, const AlphaFn& alpha, int t_max,
                                 int ancestor_grid = 201);

struct DriftOptions {
    int checkpoint_stride = 2;  // even
    double confidence = 0.99;
    int mode_bootstrap = 16;
    int n_threads = 1;
};

// Monte Carlo even-time median drift, mode/median ordering and the
// quantified local drift bound, all with CI slack. Detects violated
// regularity (L_alpha >= 1) and reports it as a precondition failure
// while still asserting drift direction.
CheckReport check_median_mode_drift(const WalkConfig& cfg, const DriftOptions& opts = {});

// Window-smoothed density monotone outside the deterministic band
// [y-(t) - w, y+(t)] and outside the CLT band B_t(kappa), with excess
// bounded by (4/w) exp(-kappa^2/2); plus the exact width bound
// y+(t) - y-(t) <= 2 t alpha_max.
CheckReport check_band_monotonicity(const WalkConfig& cfg, int t, double w, double kappa,
                                    int ancestor_grid = 201);

// Coupled (U_t, delta_t) system with absorption at delta <= 0.
struct CoupledConfig {
    std::function<double(double)> f_log_u;   // positive increasing, arg delta > 0
    std::function<double(double)> f_lambda;  // nondecreasing, arg U > 0
    double eta = 1.0;
    double c_t = 2.0;             // stability constant
    double zeta_halfwidth = 0.0;  // zero-mean uniform noise on lambda
    double u0 = 3.0;

    // The worked setting f_logU(d) = k d, f_lambda(U) = a U^b.
    static CoupledConfig example_box(double k, double a, double b, double eta = 1.0,
                                     double c = 2.0, double u0 = 3.0);
};

struct CoupledTrajectory {
    std::vector<double> u;       // length horizon + 1
    std::vector<double> delta;   // length horizon + 1 (delta after freeze repeats)
    std::vector<double> lambda;  // f_lambda(U) + zeta
    int exit_time = -1;          // first t with delta <= 0; -1 if never
};

CoupledTrajectory simulate_coupled(const CoupledConfig& cfg, int horizon, std::uint64_t seed);

}  // namespace ilab::walk
