#include "imudr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace imudr {

namespace {

constexpr double kLengths[] = {100, 200, 300, 400, 500, 600, 700, 800};

Pose relative_pose(const Pose& a, const Pose& b) {
    return {a.rotation.transpose() * b.rotation, a.rotation.transpose() * (b.position - a.position)};
}

// atan2 of the skew norm against the clamped trace term: agrees with the
// acos trace formula but returns an exact zero for symmetric products
double rotation_angle(const Mat3& r) {
    const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return std::atan2(0.5 * w.norm(), std::clamp((r.trace() - 1.0) / 2.0, -1.0, 1.0));
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::vector<double> cumulative_distance(const std::vector<Pose>& poses) {
    if (poses.empty()) throw std::invalid_argument("cumulative_distance: no poses");
    std::vector<double> dist(poses.size());
    dist[0] = 0.0;
    for (size_t i = 1; i < poses.size(); ++i)
        dist[i] = dist[i - 1] + (poses[i].position - poses[i - 1].position).norm();
    return dist;
}

ErrorReport relative_errors(const std::vector<Pose>& est, const std::vector<Pose>& gt) {
    if (est.size() != gt.size())
        throw std::invalid_argument("relative_errors: trajectory lengths differ");
    if (gt.size() < 2) throw std::invalid_argument("relative_errors: need at least 2 poses");

    const std::vector<double> dist = cumulative_distance(gt);
    ErrorReport report;
    report.length_m = dist.back();
    report.final_error_m = (est.back().position - gt.back().position).norm();

    double t_sum = 0.0, r_sum = 0.0;
    long n_total = 0;
    for (const double len : kLengths) {
        LengthErrors le;
        le.length_m = len;
        // first frame at or beyond the target distance; advances monotonically
        size_t j = 0;
        for (size_t i = 0; i < gt.size(); ++i) {
            if (j < i + 1) j = i + 1;
            while (j < gt.size() && dist[j] < dist[i] + len) ++j;
            if (j == gt.size()) break;
            const Pose delta_gt = relative_pose(gt[i], gt[j]);
            const Pose delta_est = relative_pose(est[i], est[j]);
            const Pose error = relative_pose(delta_est, delta_gt);
            le.t_rel_pct += error.position.norm() / len;
            le.r_rel_degpm += rotation_angle(error.rotation) / len;
            ++le.count;
        }
        if (le.count > 0) {
            t_sum += le.t_rel_pct;
            r_sum += le.r_rel_degpm;
            n_total += le.count;
            le.t_rel_pct *= 100.0 / le.count;
            le.r_rel_degpm *= (180.0 / M_PI) / le.count;
            report.per_length.push_back(le);
        }
    }
    if (n_total == 0) {
        report.flagged = true;
        return report;
    }
    report.t_rel_pct = 100.0 * t_sum / n_total;
    report.r_rel_degpm = (180.0 / M_PI) * r_sum / n_total;
    return report;
}

namespace {

ErrorReport average_row(const std::vector<ErrorReport>& reports, int* excluded) {
    ErrorReport avg;
    avg.sequence = "average";
    int n = 0;
    *excluded = 0;
    for (const auto& r : reports) {
        if (r.flagged) {
            ++*excluded;
            continue;
        }
        avg.length_m += r.length_m;
        avg.duration_s += r.duration_s;
        avg.t_rel_pct += r.t_rel_pct;
        avg.r_rel_degpm += r.r_rel_degpm;
        avg.final_error_m += r.final_error_m;
        ++n;
    }
    if (n > 0) {
        avg.length_m /= n;
        avg.duration_s /= n;
        avg.t_rel_pct /= n;
        avg.r_rel_degpm /= n;
        avg.final_error_m /= n;
    } else {
        avg.flagged = true;
    }
    return avg;
}

}  // namespace

std::string summarize_csv(const std::vector<ErrorReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("summarize: no reports");
    std::ostringstream out;
    out << "sequence,length_m,duration_s,t_rel_pct,r_rel_degpm,final_err_m\n";
    auto row = [&out](const ErrorReport& r) {
        out << r.sequence << ',' << fmt(r.length_m) << ',' << fmt(r.duration_s) << ','
            << fmt(r.t_rel_pct) << ',' << fmt(r.r_rel_degpm) << ',' << fmt(r.final_error_m)
            << (r.flagged ? ",flagged" : "") << "\n";
    };
    for (const auto& r : reports) row(r);
    int excluded = 0;
    row(average_row(reports, &excluded));
    return out.str();
}

std::string summarize_table(const std::vector<ErrorReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("summarize: no reports");
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-16s %10s %10s %10s %12s %12s\n", "sequence",
                  "length_m", "dur_s", "t_rel_%", "r_rel_deg/m", "final_err_m");
    out << line;
    auto row = [&](const ErrorReport& r) {
        std::snprintf(line, sizeof(line), "%-16s %10.1f %10.1f %10.3f %12.4f %12.2f%s\n",
                      r.sequence.c_str(), r.length_m, r.duration_s, r.t_rel_pct, r.r_rel_degpm,
                      r.final_error_m, r.flagged ? "  (flagged)" : "");
        out << line;
    };
    for (const auto& r : reports) row(r);
    int excluded = 0;
    const ErrorReport avg = average_row(reports, &excluded);
    row(avg);
    if (excluded > 0)
        out << "note: " << excluded << " flagged sequence(s) excluded from the average\n";
    return out.str();
}

void summarize(const std::vector<ErrorReport>& reports, const std::string& csv_path,
               const std::string& table_path) {
    std::ofstream csv(csv_path);
    if (!csv) throw DataError("summarize: cannot write " + csv_path);
    csv << summarize_csv(reports);
    std::ofstream table(table_path);
    if (!table) throw DataError("summarize: cannot write " + table_path);
    table << summarize_table(reports);
}

}  // namespace imudr
