// Domain types for IMU samples, the full filter state, and the noise
// parameter containers, plus their default values.
#pragma once

#include "imudr/geometry.hpp"

#include <Eigen/Core>

namespace imudr {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using ErrorCov = Eigen::Matrix<double, 21, 21>;
using ProcessCov = Eigen::Matrix<double, 18, 18>;

// Block offsets of the 21-dimensional right-invariant error
// [attitude, velocity, position, gyro bias, accel bias, car rotation, lever arm].
namespace err {
inline constexpr int kAttitude = 0;
inline constexpr int kVelocity = 3;
inline constexpr int kPosition = 6;
inline constexpr int kGyroBias = 9;
inline constexpr int kAccelBias = 12;
inline constexpr int kCarRotation = 15;
inline constexpr int kLeverArm = 18;
inline constexpr int kDim = 21;
}  // namespace err

// Block offsets of the 18-dimensional process noise
// [gyro, accel, gyro-bias walk, accel-bias walk, car-rotation walk, lever-arm walk].
namespace pnoise {
inline constexpr int kGyro = 0;
inline constexpr int kAccel = 3;
inline constexpr int kGyroBias = 6;
inline constexpr int kAccelBias = 9;
inline constexpr int kCarRotation = 12;
inline constexpr int kLeverArm = 15;
inline constexpr int kDim = 18;
}  // namespace pnoise

struct ImuSample {
    double t = 0.0;       // seconds
    Vec3 omega = Vec3::Zero();  // gyro reading, rad/s
    Vec3 accel = Vec3::Zero();  // specific-force reading, m/s^2
};

// Full filter state: IMU extended pose, both IMU biases, and the car-frame
// mounting (rotation + lever arm) relative to the IMU.
struct FilterState {
    ExtendedPose pose;
    Vec3 bias_gyro = Vec3::Zero();   // rad/s
    Vec3 bias_accel = Vec3::Zero();  // m/s^2
    Mat3 car_rotation = Mat3::Identity();
    Vec3 lever_arm = Vec3::Zero();   // m
};

// Standard deviations of the initial error covariance P0. Yaw, position and
// vertical speed carry structural zeros (perfect prior at initialization).
struct InitialBeliefs {
    double sigma_attitude = 0.0;      // rad, roll and pitch only
    double sigma_velocity = 0.0;      // m/s, horizontal components only
    double sigma_gyro_bias = 0.0;     // rad/s
    double sigma_accel_bias = 0.0;    // m/s^2
    double sigma_car_rotation = 0.0;  // rad
    double sigma_lever_arm = 0.0;     // m

    ErrorCov covariance() const {
        Eigen::Matrix<double, err::kDim, 1> d = Eigen::Matrix<double, err::kDim, 1>::Zero();
        d.segment<2>(err::kAttitude).setConstant(sigma_attitude * sigma_attitude);
        d.segment<2>(err::kVelocity).setConstant(sigma_velocity * sigma_velocity);
        // indices 2 (yaw), 5 (vertical speed), 6..8 (position) stay zero
        d.segment<3>(err::kGyroBias).setConstant(sigma_gyro_bias * sigma_gyro_bias);
        d.segment<3>(err::kAccelBias).setConstant(sigma_accel_bias * sigma_accel_bias);
        d.segment<3>(err::kCarRotation).setConstant(sigma_car_rotation * sigma_car_rotation);
        d.segment<3>(err::kLeverArm).setConstant(sigma_lever_arm * sigma_lever_arm);
        return d.asDiagonal();
    }
};

// Standard deviations of the six isotropic process-noise blocks.
struct ProcessNoise {
    double sigma_gyro = 0.0;            // rad/s
    double sigma_accel = 0.0;           // m/s^2
    double sigma_gyro_bias = 0.0;       // rad/s
    double sigma_accel_bias = 0.0;      // m/s^2
    double sigma_car_rotation = 0.0;    // rad
    double sigma_lever_arm = 0.0;       // m

    Vec6 sigmas() const {
        Vec6 s;
        s << sigma_gyro, sigma_accel, sigma_gyro_bias, sigma_accel_bias,
            sigma_car_rotation, sigma_lever_arm;
        return s;
    }
    ProcessCov covariance() const {
        Eigen::Matrix<double, pnoise::kDim, 1> d;
        const Vec6 s = sigmas();
        for (int b = 0; b < 6; ++b) d.segment<3>(3 * b).setConstant(s[b] * s[b]);
        return d.asDiagonal();
    }
};

// Covariance of the two pseudo-measurements (lateral, upward car-frame
// velocity), stored as the diagonal variances in (m/s)^2.
struct MeasurementNoise {
    double var_lat = 0.0;
    double var_up = 0.0;

    static MeasurementNoise from_sigmas(double sigma_lat, double sigma_up) {
        return {sigma_lat * sigma_lat, sigma_up * sigma_up};
    }
    Mat2 matrix() const {
        Mat2 n = Mat2::Zero();
        n(0, 0) = var_lat;
        n(1, 1) = var_up;
        return n;
    }
};

struct NoiseParameters {
    InitialBeliefs initial;
    ProcessNoise process;
    MeasurementNoise measurement;
};

inline NoiseParameters default_parameters() {
    NoiseParameters p;
    p.initial = {1e-3, 0.3, 1e-4, 3e-2, 3e-3, 1e-1};
    p.process = {1.4e-2, 3e-2, 1e-4, 1e-3, 1e-4, 1e-4};
    p.measurement = MeasurementNoise::from_sigmas(1.0, 3.0);
    return p;
}

// Filter start per the evaluation protocol: pose from the benchmark, biases
// and lever arm at zero, car rotation at identity.
inline FilterState initial_state(const ExtendedPose& pose0) {
    FilterState x;
    x.pose = pose0;
    return x;
}

}  // namespace imudr
