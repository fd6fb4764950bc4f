#include "imudr/dataset.hpp"

#include "imudr/rng.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace imudr {

namespace {

constexpr double kEarthRadius = 6378137.0;  // m
constexpr double kDeg = M_PI / 180.0;

double parse_field(const std::string& token, int field, int line_no) {
    size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != token.size())
        throw DataError("oxts line " + std::to_string(line_no) + ": non-numeric field " +
                        std::to_string(field) + " ('" + token + "')");
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// days since 1970-01-01 (proleptic Gregorian)
long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                         static_cast<unsigned>(d) - 1u;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

// "YYYY-MM-DD HH:MM:SS.fraction" -> (days, seconds of day)
std::pair<long, double> parse_timestamp(const std::string& line, int line_no) {
    int y, mo, d, h, mi;
    double s;
    if (std::sscanf(line.c_str(), "%d-%d-%d %d:%d:%lf", &y, &mo, &d, &h, &mi, &s) != 6)
        throw DataError("timestamps line " + std::to_string(line_no) + ": cannot parse '" +
                        line + "'");
    return {days_from_civil(y, mo, d), h * 3600.0 + mi * 60.0 + s};
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    return lines;
}

std::vector<double> split_csv_row(const std::string& line, size_t expected, int line_no,
                                  const std::string& file) {
    std::vector<double> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(parse_field(cell, (int)out.size(), line_no));
    if (out.size() != expected)
        throw DataError(file + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(expected) + " columns, got " + std::to_string(out.size()));
    return out;
}

Sequence load_csv_sequence(const fs::path& dir, double dt_warn) {
    const auto imu_lines = read_lines((dir / "imu.csv").string());
    const auto gt_lines = read_lines((dir / "groundtruth.csv").string());
    if (imu_lines.size() < 2 || gt_lines.size() < 2)
        throw DataError("sequence " + dir.string() + ": empty csv");
    if (imu_lines.size() != gt_lines.size())
        throw DataError("sequence " + dir.string() + ": imu.csv and groundtruth.csv row counts differ");

    Sequence seq;
    seq.name = dir.filename().string();
    for (size_t i = 1; i < imu_lines.size(); ++i) {
        const auto r = split_csv_row(imu_lines[i], 7, (int)i + 1, "imu.csv");
        seq.samples.push_back({r[0], {r[1], r[2], r[3]}, {r[4], r[5], r[6]}});
        const auto g = split_csv_row(gt_lines[i], 16, (int)i + 1, "groundtruth.csv");
        Pose p;
        p.position = {g[1], g[2], g[3]};
        p.rotation << g[7], g[8], g[9], g[10], g[11], g[12], g[13], g[14], g[15];
        seq.gt_pose.push_back(p);
        seq.gt_velocity.push_back({g[4], g[5], g[6]});
    }
    seq.time_jumps = detect_time_jumps(seq.samples, dt_warn);
    return seq;
}

Sequence load_kitti_sequence(const fs::path& dir, double dt_warn) {
    fs::path base = dir;
    if (fs::exists(dir / "oxts" / "timestamps.txt")) base = dir / "oxts";
    const auto stamp_lines = read_lines((base / "timestamps.txt").string());

    std::vector<fs::path> frames;
    for (const auto& e : fs::directory_iterator(base / "data"))
        if (e.path().extension() == ".txt") frames.push_back(e.path());
    std::sort(frames.begin(), frames.end());
    if (frames.empty()) throw DataError("sequence " + dir.string() + ": no oxts frames");
    if (frames.size() != stamp_lines.size())
        throw DataError("sequence " + dir.string() + ": " + std::to_string(stamp_lines.size()) +
                        " timestamps but " + std::to_string(frames.size()) + " data files");

    Sequence seq;
    seq.name = dir.filename().string();
    const auto t0 = parse_timestamp(stamp_lines[0], 1);
    OxtsRecord origin;
    for (size_t i = 0; i < frames.size(); ++i) {
        const auto lines = read_lines(frames[i].string());
        if (lines.size() != 1)
            throw DataError(frames[i].string() + ": expected a single oxts line");
        const OxtsRecord rec = parse_oxts(lines[0], 1);
        if (i == 0) origin = rec;

        const auto ti = parse_timestamp(stamp_lines[i], (int)i + 1);
        const double t = (ti.first - t0.first) * 86400.0 + (ti.second - t0.second);
        seq.samples.push_back({t, rec.omega(), rec.accel()});

        Pose p;
        p.position = geodetic_to_local(rec.lat(), rec.lon(), rec.alt(), origin.lat(),
                                       origin.lon(), origin.alt());
        p.rotation = rotation_from_rpy(rec.roll(), rec.pitch(), rec.yaw());
        seq.gt_pose.push_back(p);
        seq.gt_velocity.push_back(rec.velocity_enu());
    }
    seq.time_jumps = detect_time_jumps(seq.samples, dt_warn);
    return seq;
}

}  // namespace

OxtsRecord parse_oxts(const std::string& line, int line_no) {
    std::stringstream ss(line);
    std::vector<std::string> tokens;
    std::string t;
    while (ss >> t) tokens.push_back(t);
    if (tokens.size() != 30)
        throw DataError("oxts line " + std::to_string(line_no) + ": expected 30 fields, got " +
                        std::to_string(tokens.size()));
    OxtsRecord rec;
    for (int i = 0; i < 30; ++i) rec.fields[i] = parse_field(tokens[i], i, line_no);
    return rec;
}

std::string format_oxts(const OxtsRecord& record) {
    std::string out;
    for (int i = 0; i < 30; ++i) {
        if (i) out += ' ';
        out += fmt(record.fields[i]);
    }
    return out;
}

Vec3 geodetic_to_local(double lat_deg, double lon_deg, double alt, double origin_lat_deg,
                       double origin_lon_deg, double origin_alt) {
    if (std::abs(lat_deg) >= 90.0 || std::abs(origin_lat_deg) >= 90.0)
        throw DataError("geodetic_to_local: latitude out of range");
    const double scale = std::cos(origin_lat_deg * kDeg);
    auto mercator = [scale](double lat, double lon) {
        return Vec3{scale * kEarthRadius * lon * kDeg,
                    scale * kEarthRadius * std::log(std::tan(M_PI / 4.0 + lat * kDeg / 2.0)),
                    0.0};
    };
    Vec3 p = mercator(lat_deg, lon_deg) - mercator(origin_lat_deg, origin_lon_deg);
    p.z() = alt - origin_alt;
    return p;
}

Mat3 rotation_from_rpy(double roll, double pitch, double yaw) {
    return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
            Eigen::AngleAxisd(roll, Vec3::UnitX()))
        .toRotationMatrix();
}

Vec3 rpy_from_rotation(const Mat3& r) {
    const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
    return {std::atan2(r(2, 1), r(2, 2)), pitch, std::atan2(r(1, 0), r(0, 0))};
}

std::vector<int> detect_time_jumps(const std::vector<ImuSample>& samples, double threshold) {
    std::vector<int> jumps;
    for (size_t i = 1; i < samples.size(); ++i) {
        const double dt = samples[i].t - samples[i - 1].t;
        if (!(dt > 0.0))
            throw DataError("timestamps not strictly increasing at sample " + std::to_string(i));
        if (dt > threshold) jumps.push_back((int)i);
    }
    return jumps;
}

Sequence load_sequence(const std::string& dir, double dt_warn) {
    const fs::path p(dir);
    if (!fs::exists(p)) throw DataError("sequence directory not found: " + dir);
    if (fs::exists(p / "imu.csv")) return load_csv_sequence(p, dt_warn);
    if (fs::exists(p / "timestamps.txt") || fs::exists(p / "oxts" / "timestamps.txt"))
        return load_kitti_sequence(p, dt_warn);
    throw DataError("sequence directory " + dir + ": found neither imu.csv nor timestamps.txt");
}

void write_sequence(const Sequence& seq, const std::string& dir) {
    fs::create_directories(dir);
    std::ofstream imu(fs::path(dir) / "imu.csv");
    std::ofstream gt(fs::path(dir) / "groundtruth.csv");
    if (!imu || !gt) throw DataError("cannot write sequence to " + dir);
    imu << "t,wx,wy,wz,ax,ay,az\n";
    gt << "t,px,py,pz,vx,vy,vz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
    for (size_t i = 0; i < seq.samples.size(); ++i) {
        const ImuSample& s = seq.samples[i];
        imu << fmt(s.t) << ',' << fmt(s.omega.x()) << ',' << fmt(s.omega.y()) << ','
            << fmt(s.omega.z()) << ',' << fmt(s.accel.x()) << ',' << fmt(s.accel.y()) << ','
            << fmt(s.accel.z()) << "\n";
        const Pose& p = seq.gt_pose[i];
        const Vec3& v = seq.gt_velocity[i];
        gt << fmt(s.t);
        for (int k = 0; k < 3; ++k) gt << ',' << fmt(p.position[k]);
        for (int k = 0; k < 3; ++k) gt << ',' << fmt(v[k]);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) gt << ',' << fmt(p.rotation(r, c));
        gt << "\n";
    }
}

Sequence generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.segments.empty()) throw std::invalid_argument("synthetic: no segments");
    if (!(spec.dt > 0.0)) throw std::invalid_argument("synthetic: dt must be positive");
    if (spec.initial_speed < 0.0 || spec.accel_limit <= 0.0)
        throw std::invalid_argument("synthetic: speeds must be nonnegative");
    for (const auto& s : spec.segments)
        if (s.duration <= 0.0 || s.target_speed < 0.0)
            throw std::invalid_argument("synthetic: segment durations positive, speeds nonnegative");

    const double dt = spec.dt;
    struct StepTarget {
        double speed, rate, pitch, roll;
    };
    std::vector<StepTarget> targets;
    for (const auto& s : spec.segments) {
        const int steps = std::max(1, (int)std::lround(s.duration / dt));
        // positive grade climbs; under the zyx euler convention that is a
        // negative pitch angle
        targets.insert(targets.end(), steps, {s.target_speed, s.yaw_rate, -s.grade, s.bank});
    }
    const int n = (int)targets.size();
    targets.push_back(targets.back());  // one trailing step defines the final knot

    // profiles: yaw integrates the rate; speed and road attitude ease toward
    // their targets under the acceleration and attitude-rate limits
    std::vector<double> psi(n + 2), speed(n + 2), pitch(n + 2), roll(n + 2);
    psi[0] = 0.0;
    speed[0] = spec.initial_speed;
    pitch[0] = roll[0] = 0.0;
    for (int k = 0; k <= n; ++k) {
        const StepTarget& tg = targets[k];
        const double dv = spec.accel_limit * dt;
        const double da = spec.attitude_rate_limit * dt;
        speed[k + 1] = speed[k] + std::clamp(tg.speed - speed[k], -dv, dv);
        psi[k + 1] = psi[k] + tg.rate * dt;
        pitch[k + 1] = pitch[k] + std::clamp(tg.pitch - pitch[k], -da, da);
        roll[k + 1] = roll[k] + std::clamp(tg.roll - roll[k], -da, da);
    }

    const Mat3 r_mount = exp_so3(spec.mount_rotvec);  // car frame in IMU frame

    // ground-truth knots: the IMU pose follows the car attitude through the
    // mounting; velocity realizes the car-frame motion [speed, slip, 0]
    // through the lever arm; position is the Euler integral of velocity,
    // matching the discrete model exactly.
    std::vector<Mat3> rot(n + 2);
    for (int k = 0; k <= n + 1; ++k)
        rot[k] = rotation_from_rpy(roll[k], pitch[k], psi[k]) * r_mount.transpose();

    std::vector<Vec3> omega_body(n + 1), vel(n + 1), pos(n + 1);
    for (int k = 0; k <= n; ++k) {
        omega_body[k] = log_so3<double>(rot[k].transpose() * rot[k + 1]) / dt;
        const Vec3 v_car(speed[k], spec.slip_gain * speed[k] * targets[k].rate, 0.0);
        vel[k] = rot[k] * r_mount * (v_car - omega_body[k].cross(spec.lever_arm));
    }
    pos[0].setZero();
    for (int k = 0; k < n; ++k) pos[k + 1] = pos[k] + vel[k] * dt;

    Rng rng(seed);
    auto noise3 = [&rng](double sigma) {
        return Vec3(sigma * rng.gaussian(), sigma * rng.gaussian(), sigma * rng.gaussian());
    };

    Sequence seq;
    seq.name = "synthetic";
    seq.samples.reserve(n);
    for (int k = 0; k < n; ++k) {
        const Vec3 accel = rot[k].transpose() * ((vel[k + 1] - vel[k]) / dt - spec.gravity);
        ImuSample s;
        s.t = k * dt;
        s.omega = omega_body[k] + spec.gyro_bias + noise3(spec.sigma_gyro_noise);
        s.accel = accel + spec.accel_bias + noise3(spec.sigma_accel_noise);
        seq.samples.push_back(s);
        seq.gt_pose.push_back({rot[k], pos[k]});
        seq.gt_velocity.push_back(vel[k]);
    }
    return seq;
}

void export_poses(const std::vector<Pose>& poses, const std::string& path, PoseFormat format,
                  const std::vector<double>* times) {
    if (poses.empty()) throw DataError("export_poses: no poses");
    std::ofstream out(path);
    if (!out) throw DataError("export_poses: cannot write " + path);
    if (format == PoseFormat::kKitti) {
        for (const Pose& p : poses) {
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) out << fmt(p.rotation(r, c)) << ' ';
                out << fmt(p.position[r]) << (r == 2 ? "" : " ");
            }
            out << "\n";
        }
        return;
    }
    if (!times || times->size() != poses.size())
        throw DataError("export_poses: csv export requires per-pose times");
    out << "t,x,y,z,roll,pitch,yaw\n";
    for (size_t i = 0; i < poses.size(); ++i) {
        const Vec3 rpy = rpy_from_rotation(poses[i].rotation);
        out << fmt((*times)[i]) << ',' << fmt(poses[i].position.x()) << ','
            << fmt(poses[i].position.y()) << ',' << fmt(poses[i].position.z()) << ','
            << fmt(rpy.x()) << ',' << fmt(rpy.y()) << ',' << fmt(rpy.z()) << "\n";
    }
}

std::vector<Pose> import_poses_kitti(const std::string& path) {
    std::vector<Pose> poses;
    for (const std::string& line : read_lines(path)) {
        std::stringstream ss(line);
        double v[12];
        for (int i = 0; i < 12; ++i)
            if (!(ss >> v[i]))
                throw DataError(path + ": bad pose line '" + line + "'");
        Pose p;
        p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
        p.position << v[3], v[7], v[11];
        poses.push_back(p);
    }
    if (poses.empty()) throw DataError(path + ": no poses");
    return poses;
}

std::vector<Vec3> velocities_from_positions(const std::vector<double>& times,
                                            const std::vector<Pose>& poses) {
    const size_t n = poses.size();
    if (times.size() != n || n < 2)
        throw DataError("velocities_from_positions: need two timestamped poses");
    std::vector<Vec3> v(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t a = i == 0 ? 0 : i - 1;
        const size_t b = i + 1 == n ? i : i + 1;
        v[i] = (poses[b].position - poses[a].position) / (times[b] - times[a]);
    }
    return v;
}

}  // namespace imudr
