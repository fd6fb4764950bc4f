// Odometry benchmark error metrics: averaged relative translation and
// rotation increment errors over 100..800 m subsequences, plus summary tables.
#pragma once

#include "imudr/dataset.hpp"

#include <string>
#include <vector>

namespace imudr {

struct LengthErrors {
    double length_m = 0.0;
    double t_rel_pct = 0.0;
    double r_rel_degpm = 0.0;
    long count = 0;  // evaluated (start, length) pairs
};

struct ErrorReport {
    std::string sequence;
    double length_m = 0.0;    // total ground-truth path length
    double duration_s = 0.0;  // filled by the caller when times are known
    double t_rel_pct = 0.0;
    double r_rel_degpm = 0.0;
    double final_error_m = 0.0;
    std::vector<LengthErrors> per_length;
    bool flagged = false;  // trajectory shorter than the smallest subsequence
};

// Monotone prefix sums of consecutive ground-truth position deltas.
std::vector<double> cumulative_distance(const std::vector<Pose>& poses);

// Relative increment errors between est and gt over every subsequence of
// length 100, 200, ..., 800 m starting at every frame. Translation errors are
// in percent of the subsequence length, rotation errors in degrees per meter.
ErrorReport relative_errors(const std::vector<Pose>& est, const std::vector<Pose>& gt);

// Per-sequence rows plus an average row over the non-flagged sequences.
std::string summarize_csv(const std::vector<ErrorReport>& reports);
std::string summarize_table(const std::vector<ErrorReport>& reports);
void summarize(const std::vector<ErrorReport>& reports, const std::string& csv_path,
               const std::string& table_path);

}  // namespace imudr
