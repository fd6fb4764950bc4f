// Sequence ingestion (KITTI raw OXTS directories and CSV sequence
// directories), geodetic-to-local ground-truth conversion, synthetic
// trajectory generation, and pose import/export.
#pragma once

#include "imudr/state.hpp"

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace imudr {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// World-frame pose of one trajectory sample.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 position = Vec3::Zero();
};

// One line of a KITTI raw OXTS file: 30 numeric fields.
struct OxtsRecord {
    std::array<double, 30> fields{};

    double lat() const { return fields[0]; }    // deg
    double lon() const { return fields[1]; }    // deg
    double alt() const { return fields[2]; }    // m
    double roll() const { return fields[3]; }   // rad
    double pitch() const { return fields[4]; }  // rad
    double yaw() const { return fields[5]; }    // rad
    Vec3 velocity_enu() const { return {fields[7], fields[6], fields[10]}; }  // ve, vn, vu
    Vec3 accel() const { return {fields[11], fields[12], fields[13]}; }
    Vec3 omega() const { return {fields[17], fields[18], fields[19]}; }
};

// Throws DataError for a wrong field count or a non-numeric field; line_no is
// used in the message only.
OxtsRecord parse_oxts(const std::string& line, int line_no = 0);
std::string format_oxts(const OxtsRecord& record);

// Mercator projection used by the odometry benchmark devkit, with the scale
// fixed by the origin latitude and the output translated so the origin maps
// to zero. Throws DataError for |lat| >= 90 deg.
Vec3 geodetic_to_local(double lat_deg, double lon_deg, double alt, double origin_lat_deg,
                       double origin_lon_deg, double origin_alt);

// R = Rz(yaw) * Ry(pitch) * Rx(roll)
Mat3 rotation_from_rpy(double roll, double pitch, double yaw);
Vec3 rpy_from_rotation(const Mat3& r);

struct Sequence {
    std::string name;
    std::vector<ImuSample> samples;
    std::vector<Pose> gt_pose;      // same length as samples
    std::vector<Vec3> gt_velocity;  // world frame, same length
    std::vector<int> time_jumps;    // indices n with t[n] - t[n-1] above threshold

    std::size_t size() const { return samples.size(); }
    double duration() const {
        return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
    }
};

// Indices n where t[n] - t[n-1] exceeds the threshold. Throws DataError when
// timestamps are not strictly increasing.
std::vector<int> detect_time_jumps(const std::vector<ImuSample>& samples,
                                   double threshold);

// Loads either a KITTI raw directory (timestamps.txt + data/*.txt, optionally
// under an oxts/ subdirectory) or a CSV sequence directory (imu.csv +
// groundtruth.csv). Gaps above dt_warn seconds are flagged as time jumps.
Sequence load_sequence(const std::string& dir, double dt_warn = 0.05);

// CSV sequence directory writer (imu.csv + groundtruth.csv), the inverse of
// the CSV path of load_sequence.
void write_sequence(const Sequence& seq, const std::string& dir);

// Piecewise motion profile: the car holds yaw_rate for `duration` seconds
// while the speed moves toward target_speed under the generator's
// acceleration limit. A stop is a segment with target_speed zero. Road pitch
// (grade) and roll (bank) ease toward their targets at the attitude rate
// limit, giving the trajectory a third dimension.
struct SyntheticSegment {
    double duration = 0.0;      // s
    double target_speed = 0.0;  // m/s
    double yaw_rate = 0.0;      // rad/s
    double grade = 0.0;         // road pitch, rad (positive climbs)
    double bank = 0.0;          // road roll, rad
};

struct SyntheticSpec {
    std::vector<SyntheticSegment> segments;
    double dt = 0.01;
    double initial_speed = 0.0;
    double accel_limit = 1.5;          // m/s^2
    double attitude_rate_limit = 0.1;  // rad/s toward grade/bank targets
    // IMU error injection
    double sigma_gyro_noise = 0.0;   // per-sample std, rad/s
    double sigma_accel_noise = 0.0;  // per-sample std, m/s^2
    Vec3 gyro_bias = Vec3::Zero();
    Vec3 accel_bias = Vec3::Zero();
    // true IMU/car mounting
    Vec3 mount_rotvec = Vec3::Zero();  // rad
    Vec3 lever_arm = Vec3::Zero();     // m
    // lateral car-frame velocity = slip_gain * speed * yaw_rate during turns
    double slip_gain = 0.0;
    Vec3 gravity{0.0, 0.0, -9.80655};
};

// Exact ground-truth kinematics from the piecewise profile; IMU samples are
// produced by inverting the discrete propagation model (omega from the
// rotation increment, accel from the velocity increment minus gravity), then
// biased and perturbed as requested. Noiseless output integrates back to the
// ground truth exactly.
Sequence generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

enum class PoseFormat { kKitti, kCsv };

// kKitti: 12 numbers per line, row-major [R | p]. kCsv: t,x,y,z,roll,pitch,yaw
// (times required).
void export_poses(const std::vector<Pose>& poses, const std::string& path,
                  PoseFormat format, const std::vector<double>* times = nullptr);
std::vector<Pose> import_poses_kitti(const std::string& path);

// Central-difference fallback for ground truths that carry no velocity.
std::vector<Vec3> velocities_from_positions(const std::vector<double>& times,
                                            const std::vector<Pose>& poses);

}  // namespace imudr
