#include "doctest.h"

#include "dshc/losses.hpp"
#include "dshc/training.hpp"

#include <cmath>

using namespace dshc;

TEST_CASE("sign_quantize maps zero to +1") {
    Eigen::Vector4d o(0.3, -0.7, 0.0, 1.0);
    const Eigen::Vector4d s = sign_quantize(o);
    CHECK(s == Eigen::Vector4d(1, -1, 1, 1));
    CHECK(sign_quantize(Eigen::Vector2d(-0.0, -1e-12)) == Eigen::Vector2d(1, -1));
}

TEST_CASE("quantization loss of the worked example") {
    Eigen::Vector4d o(0.3, -0.7, 0.0, 1.0);
    // (1-0.3)^2 + (-1+0.7)^2 + 1 + 0 = 0.49 + 0.09 + 1
    CHECK(quantization_loss(o, Eigen::Vector4d::Ones()) == doctest::Approx(1.58).epsilon(1e-12));
    CHECK(quantization_loss(Eigen::Vector4d(1, -1, 1, -1), Eigen::Vector4d(-1, -1, 1, 1)) == 0.0);
}

TEST_CASE("hash loss zero cases follow the Hamming identity") {
    const Eigen::Vector4d a(1, -1, 1, -1);
    CHECK(hash_loss(a, a, 1, 4) == 0.0);
    const Eigen::Vector4d half(1, 1, -1, -1);  // two bits differ from a
    CHECK(a.dot(half) == 0.0);
    CHECK(hash_loss(a, half, 0, 4) == 0.0);
    CHECK(hash_loss(a, -a, 1, 4) == 64.0);   // (-4 - 4)^2
    CHECK(hash_loss(a, a, 0, 4) == 16.0);
    CHECK_THROWS_AS(hash_loss(a, a, 2, 4), ArgumentError);
    CHECK_THROWS_AS(hash_loss(a, a, 1, 5), ArgumentError);
}

TEST_CASE("preserved loss is the sum of squared errors") {
    const Eigen::Vector3d e(1, 2, 3);
    const Eigen::Vector3d r(1, 0, 4);
    CHECK(preserved_loss(e, r, e, e) == 5.0);
    CHECK(preserved_loss(e, r, r, e) == 10.0);
    CHECK_THROWS_AS(preserved_loss(Eigen::VectorXd(e), Eigen::VectorXd::Zero(2), e, e), ArgumentError);
}

TEST_CASE("gamma schedule endpoints and midpoint") {
    CHECK(gamma_schedule(0, 100, 1e-4, 1e-1) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(gamma_schedule(50, 100, 1e-4, 1e-1) == doctest::Approx(0.05005).epsilon(1e-12));
    CHECK(gamma_schedule(99, 100, 1e-4, 1e-1) == doctest::Approx(1e-4 + (1e-1 - 1e-4) * 0.99).epsilon(1e-12));
    CHECK_THROWS_AS(gamma_schedule(100, 100, 1e-4, 1e-1), ArgumentError);
    CHECK_THROWS_AS(gamma_schedule(0, 0, 1e-4, 1e-1), ArgumentError);
}

TEST_CASE("gamma schedule is linear in t") {
    const std::size_t T = 37;
    const double g0 = gamma_schedule(0, T, 0.01, 0.5);
    const double step = gamma_schedule(1, T, 0.01, 0.5) - g0;
    for (std::size_t t = 0; t < T; ++t) {
        CHECK(gamma_schedule(t, T, 0.01, 0.5) == doctest::Approx(g0 + step * static_cast<double>(t)).epsilon(1e-12));
    }
}
