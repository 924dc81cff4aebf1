#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ilab/subspace.hpp"

using namespace ilab;
using subspace::OrthonormalBasis;

namespace {
OrthonormalBasis line(const Eigen::VectorXd& v) {
    OrthonormalBasis b;
    b.columns = v.normalized();
    return b;
}
}  // namespace

TEST_CASE("principal angles on elementary configurations") {
    Eigen::VectorXd e1 = Eigen::Vector2d(1, 0), e2 = Eigen::Vector2d(0, 1);
    SUBCASE("identical subspaces have zero angles") {
        ilab::Rng rng(2);
        OrthonormalBasis b;
        b.columns = testutil::random_orthonormal(6, 3, rng);
        const auto p = subspace::principal_angles(b, b);
        for (double phi : p.angles) CHECK(phi == doctest::Approx(0.0).epsilon(1e-7));
        CHECK(subspace::misalignment_score(b, b) == doctest::Approx(0.0).epsilon(1e-10));
    }
    SUBCASE("orthogonal lines meet at pi/2") {
        const auto p = subspace::principal_angles(line(e1), line(e2));
        REQUIRE(p.angles.size() == 1);
        CHECK(p.angles[0] == doctest::Approx(M_PI / 2).epsilon(1e-12));
        CHECK(subspace::misalignment_score(line(e1), line(e2)) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("45 degree line") {
        const auto p = subspace::principal_angles(line(e1), line(Eigen::Vector2d(1, 1)));
        REQUIRE(p.angles.size() == 1);
        CHECK(p.angles[0] == doctest::Approx(M_PI / 4).epsilon(1e-12));
        CHECK(subspace::misalignment_score(line(e1), line(Eigen::Vector2d(1, 1))) ==
              doctest::Approx(1.0 - std::cos(M_PI / 4)).epsilon(1e-10));
    }
    SUBCASE("dimension mismatch raises") {
        OrthonormalBasis a3;
        a3.columns = Eigen::Vector3d(1, 0, 0);
        CHECK_THROWS_AS(subspace::principal_angles(a3, line(e1)), DomainError);
    }
}

TEST_CASE("grassmann distance is the Euclidean angle norm") {
    subspace::PrincipalAngles p;
    p.angles = {};
    CHECK(subspace::grassmann_distance(p) == 0.0);
    p.angles = {M_PI / 4};
    CHECK(subspace::grassmann_distance(p) == doctest::Approx(M_PI / 4));
    p.angles = {M_PI / 4, M_PI / 4};
    CHECK(subspace::grassmann_distance(p) == doctest::Approx(M_PI / (2.0 * std::sqrt(2.0))));
}

TEST_CASE("jacobi singular values match the dense SVD oracle") {
    ilab::Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int r = 1 + static_cast<int>(rng.uniform() * 6);
        const int c = 1 + static_cast<int>(rng.uniform() * 6);
        Eigen::MatrixXd m(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) m(i, j) = rng.normal();
        const Eigen::VectorXd ours = subspace::jacobi_singular_values(m);
        const Eigen::VectorXd truth = testutil::dense_singular_values(m);
        REQUIRE(ours.size() == truth.size());
        for (Eigen::Index i = 0; i < ours.size(); ++i)
            CHECK(ours[i] == doctest::Approx(truth[i]).epsilon(1e-10));
    }
}

TEST_CASE("score properties over random bases") {
    ilab::Rng rng(11);
    for (int trial = 0; trial < 1000; ++trial) {
        const int p = 4 + static_cast<int>(rng.uniform() * 5);
        const int ma = 1 + static_cast<int>(rng.uniform() * 3);
        const int mb = 1 + static_cast<int>(rng.uniform() * 3);
        OrthonormalBasis a, b;
        a.columns = testutil::random_orthonormal(p, std::min(ma, p), rng);
        b.columns = testutil::random_orthonormal(p, std::min(mb, p), rng);

        const double s = subspace::misalignment_score(a, b);
        CHECK(s >= -1e-12);
        CHECK(s <= 1.0 + 1e-12);
        // symmetry
        CHECK(subspace::misalignment_score(b, a) == doctest::Approx(s).epsilon(1e-9));
        // column sign flip leaves the score unchanged
        OrthonormalBasis b_flip = b;
        b_flip.columns.col(0) *= -1.0;
        CHECK(subspace::misalignment_score(a, b_flip) == doctest::Approx(s).epsilon(1e-9));
        // orthonormal recombination within span(b) leaves it unchanged
        if (b.columns.cols() > 1) {
            const Eigen::MatrixXd rot = testutil::random_orthonormal(
                static_cast<int>(b.columns.cols()), static_cast<int>(b.columns.cols()), rng);
            OrthonormalBasis b_rot;
            b_rot.columns = b.columns * rot;
            CHECK(subspace::misalignment_score(a, b_rot) == doctest::Approx(s).epsilon(1e-8));
        }
        CHECK(subspace::similarity_score(a, b) == doctest::Approx(1.0 - s).epsilon(1e-12));
    }
}

TEST_CASE("1-D score is monotone in the angle") {
    double prev = -1.0;
    for (int i = 0; i <= 20; ++i) {
        const double phi = M_PI / 2 * static_cast<double>(i) / 20.0;
        const auto a = line(Eigen::Vector2d(1, 0));
        const auto b = line(Eigen::Vector2d(std::cos(phi), std::sin(phi)));
        const double s = subspace::misalignment_score(a, b);
        CHECK(s == doctest::Approx(1.0 - std::cos(phi)).epsilon(1e-9));
        CHECK(s > prev - 1e-12);
        prev = s;
    }
}
