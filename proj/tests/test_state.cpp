#include "imudr/state.hpp"

#include <doctest.h>

using namespace imudr;

TEST_CASE("default parameters match the published constants") {
    const NoiseParameters p = default_parameters();
    CHECK(p.initial.sigma_attitude == 1e-3);
    CHECK(p.initial.sigma_velocity == 0.3);
    CHECK(p.initial.sigma_gyro_bias == 1e-4);
    CHECK(p.initial.sigma_accel_bias == 3e-2);
    CHECK(p.initial.sigma_car_rotation == 3e-3);
    CHECK(p.initial.sigma_lever_arm == 1e-1);
    CHECK(p.process.sigma_gyro == 1.4e-2);
    CHECK(p.process.sigma_accel == 3e-2);
    CHECK(p.process.sigma_gyro_bias == 1e-4);
    CHECK(p.process.sigma_accel_bias == 1e-3);
    CHECK(p.process.sigma_car_rotation == 1e-4);
    CHECK(p.process.sigma_lever_arm == 1e-4);

    const Mat2 n = p.measurement.matrix();
    CHECK(n(0, 0) == 1.0);
    CHECK(n(1, 1) == 9.0);
    CHECK(n(0, 1) == 0.0);

    const ErrorCov p0 = p.initial.covariance();
    CHECK(p0(2, 2) == 0.0);  // yaw

    const ProcessCov q = p.process.covariance();
    for (int i = 0; i < 3; ++i) CHECK(q(i, i) == 1.4e-2 * 1.4e-2);
}

TEST_CASE("initial covariance carries the structural zeros and is PSD") {
    const InitialBeliefs b = default_parameters().initial;
    const ErrorCov p0 = b.covariance();
    CHECK((p0 - p0.transpose()).cwiseAbs().maxCoeff() == 0.0);
    int zeros = 0;
    for (int i = 0; i < err::kDim; ++i) {
        CHECK(p0(i, i) >= 0.0);
        if (p0(i, i) == 0.0) ++zeros;
    }
    CHECK(zeros == 5);
    CHECK(p0(2, 2) == 0.0);
    CHECK(p0(5, 5) == 0.0);
    CHECK(p0(6, 6) == 0.0);
    CHECK(p0(7, 7) == 0.0);
    CHECK(p0(8, 8) == 0.0);
}

TEST_CASE("initial_state zeroes everything but the pose") {
    SUBCASE("identity start") {
        const FilterState x = initial_state(ExtendedPose{});
        CHECK(x.pose.rotation.isIdentity(0.0));
        CHECK(x.pose.velocity.norm() == 0.0);
        CHECK(x.bias_gyro.norm() == 0.0);
        CHECK(x.bias_accel.norm() == 0.0);
        CHECK(x.car_rotation.isIdentity(0.0));
        CHECK(x.lever_arm.norm() == 0.0);
    }
    SUBCASE("velocity passes through") {
        ExtendedPose pose0;
        pose0.velocity = {10, 0, 0};
        const FilterState x = initial_state(pose0);
        CHECK((x.pose.velocity - Vec3(10, 0, 0)).norm() == 0.0);
        CHECK(x.car_rotation.isIdentity(0.0));
    }
}
