#include "imudr/runner.hpp"

#include <cmath>
#include <stdexcept>

namespace imudr {

RunResult run_filter(const Sequence& seq, const RunOptions& options) {
    if (seq.size() < 2) throw DataError("run_filter: sequence needs at least two samples");
    const Config& cfg = options.config;

    ExtendedPose pose0;
    pose0.rotation = seq.gt_pose.front().rotation;
    pose0.position = seq.gt_pose.front().position;
    pose0.velocity = seq.gt_velocity.front();

    InitialBeliefs beliefs = options.initial_override.value_or(cfg.initial_beliefs());
    ProcessNoise process = options.process_override.value_or(cfg.process_noise());
    if (options.no_alignment) {
        // zero prior and zero walk keep the alignment states exactly frozen
        beliefs.sigma_car_rotation = 0.0;
        beliefs.sigma_lever_arm = 0.0;
        process.sigma_car_rotation = 0.0;
        process.sigma_lever_arm = 0.0;
    }

    IekfOptions iekf_options;
    iekf_options.gravity = cfg.gravity();
    iekf_options.process = process;
    iekf_options.theta_small = cfg.theta_small;
    Iekf filter(initial_state(pose0), beliefs.covariance(), iekf_options);

    const MeasurementNoise static_noise = cfg.measurement_noise();
    ImuWindow window = ImuWindow::empty();

    const size_t n = seq.size();
    RunResult out;
    out.t.reserve(n);
    out.poses.reserve(n);
    out.velocities.reserve(n);
    auto record = [&out](double t, const FilterState& s) {
        if (!s.pose.position.allFinite() || !s.pose.velocity.allFinite())
            throw std::runtime_error("run_filter: filter diverged to non-finite state at t=" +
                                     std::to_string(t));
        out.t.push_back(t);
        out.poses.push_back({s.pose.rotation, s.pose.position});
        out.velocities.push_back(s.pose.velocity);
    };
    record(seq.samples.front().t, filter.state());

    for (size_t i = 1; i < n; ++i) {
        const ImuSample& u = seq.samples[i - 1];
        const double dt = seq.samples[i].t - u.t;
        if (!(dt > 0.0)) throw DataError("run_filter: nonincreasing timestamps");
        if (dt > cfg.dt_warn) out.time_jumps.push_back((int)i);

        MeasurementNoise noise = static_noise;
        if (options.weights != nullptr) {
            window.push(u);
            noise = forward(*options.weights, window, cfg.beta, cfg.sigma_lat, cfg.sigma_up,
                            options.dropout);
        }
        out.noise_diag.push_back({noise.var_lat, noise.var_up});

        if (options.pure_integration) {
            filter = Iekf(propagate_state(filter.state(), u, dt, cfg.gravity(), cfg.theta_small),
                          filter.cov(), iekf_options);
        } else {
            filter.step(u, dt, noise);
            const ErrorCov& p = filter.cov();
            const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
            if (asym > out.max_cov_asymmetry) out.max_cov_asymmetry = asym;
        }
        record(seq.samples[i].t, filter.state());
    }

    out.final_state = filter.state();
    out.final_cov = filter.cov();
    out.skipped_update_times = filter.skipped_update_times();
    return out;
}

}  // namespace imudr
