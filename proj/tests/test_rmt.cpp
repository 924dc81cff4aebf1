#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ilab/rmt.hpp"
#include "ilab/spectral.hpp"
#include "ilab/stats.hpp"

using namespace ilab;

TEST_CASE("overlap formula worked values") {
    // boundary branch
    CHECK(rmt::overlap_formula(2.0 * 0.1 / std::sqrt(128.0), 0.1, 128) == 0.0);
    // worked numbers: lambda1 = 10, sigma^2 = 0.01, B = 128
    CHECK(rmt::overlap_formula(10.0, 0.1, 128) ==
          doctest::Approx(1.0 - 7.8125e-7).epsilon(1e-12));
    // noiseless-batch limit
    CHECK(rmt::overlap_formula(1.0, 0.5, 1e12) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("wigner sampling") {
    SUBCASE("symmetry is exact by construction") {
        const Eigen::MatrixXd xi = rmt::sample_wigner(64, 0.3, 5);
        CHECK((xi - xi.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("bulk edge sits near 2 sigma") {
        const int p = 1000;
        const double sigma = 0.5;
        const Eigen::MatrixXd xi = rmt::sample_wigner(p, sigma, 7);
        const auto [top, v] = spectral::top_eigenpair(spectral::dense_oracle(xi), 48, 3);
        (void)v;
        CHECK(top == doctest::Approx(2.0 * sigma).epsilon(0.05));
    }
    SUBCASE("per-entry normalization scales the edge by sqrt(P)") {
        const int p = 300;
        const Eigen::MatrixXd xi = rmt::sample_wigner(p, 0.1, 9, true);
        const auto [top, v] = spectral::top_eigenpair(spectral::dense_oracle(xi), 48, 3);
        (void)v;
        CHECK(top == doctest::Approx(2.0 * 0.1 * std::sqrt(static_cast<double>(p))).epsilon(0.08));
    }
}

TEST_CASE("spiked sampling") {
    SUBCASE("vanishing noise leaves the pure spike") {
        rmt::SpikedModelConfig cfg;
        cfg.dim = 50;
        cfg.sigma = 1e-9;
        cfg.lambda1 = 3.0;
        cfg.seed = 11;
        const Eigen::MatrixXd h = rmt::sample_spiked(cfg);
        const auto [top, v1] = spectral::top_eigenpair(spectral::dense_oracle(h), 20, 5);
        CHECK(top == doctest::Approx(3.0).epsilon(1e-6));
        CHECK(v1[0] * v1[0] >= 1.0 - 1e-8);
    }
    SUBCASE("construction is recovered within 1e-8 by the spectral module") {
        rmt::SpikedModelConfig cfg;
        cfg.dim = 200;
        cfg.sigma = 0.05;
        cfg.lambda1 = 10.0;
        cfg.batch = 256;
        cfg.seed = 13;
        const Eigen::MatrixXd h = rmt::sample_spiked(cfg);
        const auto truth = testutil::dense_eig(h);
        const auto [top, v1] = spectral::top_eigenpair(spectral::dense_oracle(h), 40, 5);
        (void)v1;
        CHECK(top == doctest::Approx(truth.values[0]).epsilon(1e-8));
    }
}

TEST_CASE("empirical overlap approaches the formula") {
    rmt::SpikedModelConfig cfg;
    cfg.dim = 300;
    cfg.batch = 128;
    cfg.sigma = 0.1;
    cfg.lambda1 = 10.0;
    cfg.seed = 17;
    const auto res = rmt::empirical_overlap(cfg, 30);
    const double tol = 5.0 / std::sqrt(static_cast<double>(cfg.dim)) + res.ci_half;
    CHECK(std::abs(res.mean - res.formula) <= tol);
}

TEST_CASE("below the threshold the overlap is O(1/P)") {
    rmt::SpikedModelConfig cfg;
    cfg.dim = 300;
    cfg.batch = 128;
    cfg.sigma = 0.5;
    cfg.lambda1 = 0.5 / std::sqrt(128.0);  // sigma / sqrt(B), below 2 sigma / sqrt(B)
    cfg.seed = 19;
    const auto res = rmt::empirical_overlap(cfg, 30);
    CHECK(res.formula == 0.0);
    CHECK(res.mean <= 10.0 / static_cast<double>(cfg.dim));
}

TEST_CASE("zero noise gives overlap exactly one") {
    rmt::SpikedModelConfig cfg;
    cfg.dim = 60;
    cfg.sigma = 1e-300;
    cfg.lambda1 = 2.0;
    cfg.seed = 23;
    const auto res = rmt::empirical_overlap(cfg, 10);
    CHECK(res.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("semicircle bulk at moderate size") {
    const int p = 400;
    const double sigma = 0.3;
    const Eigen::MatrixXd xi = rmt::sample_wigner(p, sigma, 29);
    auto [tri, basis] = spectral::lanczos_mpk(spectral::dense_oracle(xi), p, 31);
    (void)basis;
    const auto eig = spectral::tridiag_eigen(tri, false);
    std::vector<double> evals(eig.values.data(), eig.values.data() + p);
    const double ks = stats::ks_distance(
        evals, [sigma](double x) { return rmt::semicircle_cdf(x, sigma); });
    CHECK(ks <= 0.05);
}

TEST_CASE("threshold sharpness when sweeping the spike") {
    rmt::SpikedModelConfig cfg;
    cfg.dim = 200;
    cfg.batch = 64;
    cfg.sigma = 0.4;
    cfg.seed = 37;
    const double thresh = 2.0 * cfg.sigma / std::sqrt(static_cast<double>(cfg.batch));
    cfg.lambda1 = 0.5 * thresh;
    const auto below = rmt::empirical_overlap(cfg, 15);
    cfg.lambda1 = 4.0 * thresh;
    const auto above = rmt::empirical_overlap(cfg, 15);
    CHECK(below.mean <= 20.0 / static_cast<double>(cfg.dim));
    CHECK(above.mean >= 0.8);
}

TEST_CASE("formula convergence as P grows") {
    double prev_gap = kInf;
    for (int p : {100, 300}) {
        rmt::SpikedModelConfig cfg;
        cfg.dim = p;
        cfg.batch = 128;
        cfg.sigma = 0.1;
        cfg.lambda1 = 10.0;
        cfg.seed = 41;
        const auto res = rmt::empirical_overlap(cfg, 25);
        const double gap = std::abs(res.mean - res.formula);
        CHECK(gap <= prev_gap + res.ci_half);
        prev_gap = gap;
    }
}

TEST_CASE("negative-edge proxies") {
    CHECK(rmt::bulk_variance_from_edge(-2.0 * 0.3) == doctest::Approx(0.09));
    CHECK(rmt::nonquadraticness_ratio(-1.0, 10.0) == doctest::Approx(0.05));
    CHECK(rmt::nonquadraticness_ratio(-1e-12, 10.0) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK_THROWS_AS(rmt::nonquadraticness_ratio(-1.0, -2.0), DomainError);
    CHECK_THROWS_AS(rmt::bulk_variance_from_edge(0.5), DomainError);
}
