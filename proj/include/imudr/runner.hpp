// Drives the filter over one sequence: initialization from the ground-truth
// start, per-sample covariance adaptation, and trajectory collection.
#pragma once

#include "imudr/adapter.hpp"
#include "imudr/config.hpp"
#include "imudr/dataset.hpp"
#include "imudr/filter.hpp"

#include <optional>
#include <vector>

namespace imudr {

struct RunOptions {
    Config config;
    // null: static covariance from the config
    const AdapterWeights* weights = nullptr;
    // ablation: car rotation and lever arm frozen at identity/zero
    bool no_alignment = false;
    // propagation only, no pseudo-measurement updates (raw integration)
    bool pure_integration = false;
    // training only; evaluation passes keep this null
    const DropoutMask* dropout = nullptr;
    // learned overrides of the config values
    std::optional<InitialBeliefs> initial_override;
    std::optional<ProcessNoise> process_override;
};

struct RunResult {
    std::vector<double> t;
    std::vector<Pose> poses;
    std::vector<Vec3> velocities;
    std::vector<Vec2> noise_diag;  // adapted N diagonal per step (lat, up)
    FilterState final_state;
    ErrorCov final_cov = ErrorCov::Zero();
    std::vector<double> skipped_update_times;
    std::vector<int> time_jumps;       // dt above config.dt_warn
    double max_cov_asymmetry = 0.0;
};

RunResult run_filter(const Sequence& seq, const RunOptions& options);

}  // namespace imudr
