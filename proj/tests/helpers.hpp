// Shared deterministic generators for randomized tests.
#pragma once

#include "imudr/filter.hpp"
#include "imudr/rng.hpp"
#include "imudr/state.hpp"

namespace test_helpers {

inline imudr::Vec3 random_vec3(imudr::Rng& rng, double scale) {
    return {rng.uniform(-scale, scale), rng.uniform(-scale, scale), rng.uniform(-scale, scale)};
}

inline imudr::Mat3 random_rotation(imudr::Rng& rng, double max_angle = M_PI - 0.2) {
    imudr::Vec3 axis = random_vec3(rng, 1.0);
    if (axis.norm() < 1e-6) axis = imudr::Vec3::UnitX();
    axis.normalize();
    return imudr::exp_so3<double>(axis * rng.uniform(0.0, max_angle));
}

// Filter state with moderate magnitudes, suitable for finite-difference checks.
inline imudr::FilterState random_state(imudr::Rng& rng) {
    imudr::FilterState x;
    x.pose.rotation = random_rotation(rng);
    x.pose.velocity = random_vec3(rng, 5.0);
    x.pose.position = random_vec3(rng, 10.0);
    x.bias_gyro = random_vec3(rng, 0.01);
    x.bias_accel = random_vec3(rng, 0.1);
    x.car_rotation = random_rotation(rng, 0.3);
    x.lever_arm = random_vec3(rng, 1.0);
    return x;
}

inline imudr::ImuSample random_sample(imudr::Rng& rng) {
    imudr::ImuSample u;
    u.t = 0.0;
    u.omega = random_vec3(rng, 0.5);
    u.accel = random_vec3(rng, 2.0) + imudr::Vec3(0.0, 0.0, 9.80655);
    return u;
}

}  // namespace test_helpers
