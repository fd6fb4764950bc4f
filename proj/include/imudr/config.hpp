// Runtime configuration: every noise standard deviation, the covariance
// inflation exponent, gravity and the small-angle threshold, loadable from a
// "key = value" text file.
#pragma once

#include "imudr/state.hpp"

#include <string>

namespace imudr {

struct Config {
    // initial error covariance (P0)
    double sigma0_attitude = 1e-3;
    double sigma0_velocity = 0.3;
    double sigma0_gyro_bias = 1e-4;
    double sigma0_accel_bias = 3e-2;
    double sigma0_car_rotation = 3e-3;
    double sigma0_lever_arm = 1e-1;
    // process noise (Q)
    double sigma_gyro = 1.4e-2;
    double sigma_accel = 3e-2;
    double sigma_gyro_bias_walk = 1e-4;
    double sigma_accel_bias_walk = 1e-3;
    double sigma_car_rotation_walk = 1e-4;
    double sigma_lever_arm_walk = 1e-4;
    // pseudo-measurement noise (N) and its adaptation range 10^±beta
    double sigma_lat = 1.0;
    double sigma_up = 3.0;
    double beta = 3.0;
    // world-frame gravity, z up
    double gravity_x = 0.0;
    double gravity_y = 0.0;
    double gravity_z = -9.80655;
    // numerics
    double theta_small = kSmallAngle;
    // sample gaps above this many seconds are flagged as time jumps
    double dt_warn = 0.05;

    Vec3 gravity() const { return {gravity_x, gravity_y, gravity_z}; }
    InitialBeliefs initial_beliefs() const {
        return {sigma0_attitude, sigma0_velocity, sigma0_gyro_bias,
                sigma0_accel_bias, sigma0_car_rotation, sigma0_lever_arm};
    }
    ProcessNoise process_noise() const {
        return {sigma_gyro, sigma_accel, sigma_gyro_bias_walk,
                sigma_accel_bias_walk, sigma_car_rotation_walk, sigma_lever_arm_walk};
    }
    MeasurementNoise measurement_noise() const {
        return MeasurementNoise::from_sigmas(sigma_lat, sigma_up);
    }

    // Parses "key = value" lines; '#' starts a comment. Unknown keys and
    // malformed lines throw std::runtime_error with the line number.
    static Config load(const std::string& path);
    void save(const std::string& path) const;

    // Applies a single "key=value" assignment (used for file lines and for
    // --set command-line overrides). Returns false for unknown keys.
    bool assign(const std::string& key, const std::string& value);
};

}  // namespace imudr
