#include "imudr/geometry.hpp"

#include "helpers.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace imudr;

namespace {

Mat5T<double> tangent_hat(const TangentSE23& xi) {
    Mat5T<double> m = Mat5T<double>::Zero();
    m.topLeftCorner<3, 3>() = skew(xi.xi_rot);
    m.block<3, 1>(0, 3) = xi.xi_vel;
    m.block<3, 1>(0, 4) = xi.xi_pos;
    return m;
}

}  // namespace

TEST_CASE("skew of a unit axis") {
    Mat3 expected;
    expected << 0, 0, 0, 0, 0, -1, 0, 1, 0;
    CHECK((skew<double>({1, 0, 0}) - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("skew realizes the cross product") {
    const Vec3 v(1, 2, 3), w(4, 5, 6);
    const Vec3 expected = oracles::cross_product(v, w);
    CHECK((skew(v) * w - expected).norm() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(expected.isApprox(Vec3(-3, 6, -3)));

    Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        const Vec3 a = test_helpers::random_vec3(rng, 10.0);
        const Vec3 b = test_helpers::random_vec3(rng, 10.0);
        CHECK((skew(a) * b - oracles::cross_product(a, b)).norm() < 1e-12);
        CHECK((skew(a) + skew(a).transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((skew(a) * b + skew(b) * a).norm() < 1e-12);
    }
}

TEST_CASE("exp_so3 basics") {
    CHECK(exp_so3<double>(Vec3::Zero()).isIdentity(0.0));

    Mat3 quarter_turn;
    quarter_turn << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    CHECK((exp_so3<double>({0, 0, M_PI / 2}) - quarter_turn).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((exp_so3<double>({0, 0, M_PI / 2}) - oracles::rodrigues({0, 0, M_PI / 2}))
              .cwiseAbs()
              .maxCoeff() < 1e-14);
}

TEST_CASE("exp_so3 against the series oracle") {
    Rng rng(12);
    for (int i = 0; i < 200; ++i) {
        // 20 series terms are ample below this norm
        const Vec3 xi = test_helpers::random_vec3(rng, 1.0) * rng.uniform(0.0, 1.15);
        const Mat3 r = exp_so3(xi);
        CHECK((r - oracles::exp_series<Mat3>(skew(xi))).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(r.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("exp_so3 inverse composition and full range") {
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        Vec3 axis = test_helpers::random_vec3(rng, 1.0);
        if (axis.norm() < 1e-9) axis = Vec3::UnitZ();
        const Vec3 xi = axis.normalized() * rng.uniform(0.0, M_PI);
        CHECK((exp_so3(xi) * exp_so3<double>(-xi) - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-9);
        CHECK((exp_so3(xi) - oracles::exp_scaling_squaring<Mat3>(skew(xi))).cwiseAbs().maxCoeff() <
              1e-10);
    }
}

TEST_CASE("small-angle branch is continuous at the switch") {
    const Vec3 axis = Vec3(1, -2, 0.5).normalized();
    const Mat3 below = exp_so3<double>(axis * (kSmallAngle * (1.0 - 1e-9)));
    const Mat3 above = exp_so3<double>(axis * (kSmallAngle * (1.0 + 1e-9)));
    CHECK((below - above).cwiseAbs().maxCoeff() < 1e-12);

    const Mat3 jb = left_jacobian_so3<double>(axis * (kSmallAngle * (1.0 - 1e-9)));
    const Mat3 ja = left_jacobian_so3<double>(axis * (kSmallAngle * (1.0 + 1e-9)));
    CHECK((jb - ja).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("exp_se23 trivial and nilpotent cases") {
    const ExtendedPose id = exp_se23<double>({});
    CHECK(id.rotation.isIdentity(0.0));
    CHECK(id.velocity.norm() == 0.0);
    CHECK(id.position.norm() == 0.0);

    // zero rotation block: higher powers vanish, velocity/position pass through
    TangentSE23 xi;
    xi.xi_vel = {1.5, -2.0, 0.25};
    xi.xi_pos = {-4.0, 0.5, 3.0};
    const ExtendedPose x = exp_se23(xi);
    CHECK(x.rotation.isIdentity(0.0));
    CHECK((x.velocity - xi.xi_vel).norm() == 0.0);
    CHECK((x.position - xi.xi_pos).norm() == 0.0);
}

TEST_CASE("exp_se23 against the 5x5 matrix exponential oracle") {
    Rng rng(14);
    for (int i = 0; i < 200; ++i) {
        TangentSE23 xi;
        Vec3 axis = test_helpers::random_vec3(rng, 1.0);
        if (axis.norm() < 1e-9) axis = Vec3::UnitY();
        xi.xi_rot = axis.normalized() * rng.uniform(0.0, M_PI);
        xi.xi_vel = test_helpers::random_vec3(rng, 5.0);
        xi.xi_pos = test_helpers::random_vec3(rng, 5.0);

        const Mat5T<double> expected = oracles::exp_scaling_squaring(tangent_hat(xi));
        CHECK((to_matrix(exp_se23(xi)) - expected).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("exp_se23 restricted to rotation matches exp_so3") {
    Rng rng(15);
    for (int i = 0; i < 50; ++i) {
        TangentSE23 xi;
        xi.xi_rot = test_helpers::random_vec3(rng, 1.5);
        const ExtendedPose x = exp_se23(xi);
        CHECK((x.rotation - exp_so3(xi.xi_rot)).cwiseAbs().maxCoeff() == 0.0);
        CHECK(x.velocity.norm() == 0.0);
        CHECK(x.position.norm() == 0.0);
    }
}

TEST_CASE("compose identity laws and product oracle") {
    Rng rng(16);
    ExtendedPose b;
    b.rotation = test_helpers::random_rotation(rng);
    b.velocity = {1, 2, 3};
    b.position = {-1, 0.5, 2};
    const ExtendedPose identity;
    CHECK((to_matrix(compose(identity, b)) - to_matrix(b)).cwiseAbs().maxCoeff() == 0.0);
    CHECK((to_matrix(compose(b, identity)) - to_matrix(b)).cwiseAbs().maxCoeff() == 0.0);

    for (int i = 0; i < 100; ++i) {
        ExtendedPose x, y;
        x.rotation = test_helpers::random_rotation(rng);
        x.velocity = test_helpers::random_vec3(rng, 5.0);
        x.position = test_helpers::random_vec3(rng, 5.0);
        y.rotation = test_helpers::random_rotation(rng);
        y.velocity = test_helpers::random_vec3(rng, 5.0);
        y.position = test_helpers::random_vec3(rng, 5.0);
        const Mat5T<double> expected = to_matrix(x) * to_matrix(y);
        CHECK((to_matrix(compose(x, y)) - expected).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((to_matrix(compose(x, inverse(x))) - Mat5T<double>::Identity()).cwiseAbs().maxCoeff() <
              1e-12);
    }
}

TEST_CASE("log_so3 inverts exp_so3") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        Vec3 axis = test_helpers::random_vec3(rng, 1.0);
        if (axis.norm() < 1e-9) axis = Vec3::UnitX();
        const Vec3 xi = axis.normalized() * rng.uniform(1e-10, M_PI - 1e-4);
        CHECK((log_so3(exp_so3(xi)) - xi).norm() < 1e-8 * std::max(1.0, xi.norm()));
    }
    // clamped trace keeps acos finite on slightly non-orthogonal input
    Mat3 r = Mat3::Identity() * (1.0 + 1e-12);
    CHECK(log_so3(r).allFinite());
}

TEST_CASE("log_se23 inverts exp_se23") {
    Rng rng(18);
    for (int i = 0; i < 100; ++i) {
        TangentSE23 xi;
        Vec3 axis = test_helpers::random_vec3(rng, 1.0);
        if (axis.norm() < 1e-9) axis = Vec3::UnitZ();
        xi.xi_rot = axis.normalized() * rng.uniform(0.0, 3.0);
        xi.xi_vel = test_helpers::random_vec3(rng, 5.0);
        xi.xi_pos = test_helpers::random_vec3(rng, 5.0);
        const TangentSE23 back = log_se23(exp_se23(xi));
        CHECK((back.to_vector() - xi.to_vector()).norm() < 1e-8);
    }
}

TEST_CASE("orthonormalize projects back to SO(3)") {
    Rng rng(19);
    for (int i = 0; i < 20; ++i) {
        const Mat3 r = test_helpers::random_rotation(rng);
        Mat3 drifted = r;
        for (int k = 0; k < 9; ++k) drifted(k / 3, k % 3) += rng.uniform(-1e-4, 1e-4);
        const Mat3 fixed = orthonormalize(drifted);
        CHECK((fixed.transpose() * fixed - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(fixed.determinant() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((fixed - r).cwiseAbs().maxCoeff() < 1e-3);
    }
}
