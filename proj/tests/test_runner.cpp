#include "imudr/runner.hpp"

#include "imudr/metrics.hpp"
#include "imudr/rng.hpp"

#include <doctest.h>

using namespace imudr;

namespace {

Sequence small_loop(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.initial_speed = 7.0;
    spec.segments = {{5.0, 8.0, 0.0}, {4.0, 6.0, 0.4}, {6.0, 8.0, 0.0}, {4.0, 6.0, -0.4},
                     {6.0, 8.0, 0.0}};
    spec.sigma_gyro_noise = 1.4e-3;
    spec.sigma_accel_noise = 3e-3;
    spec.gyro_bias = {2e-4, -3e-4, 1e-4};
    spec.accel_bias = {5e-3, -5e-3, 8e-3};
    return generate_synthetic(spec, seed);
}

}  // namespace

TEST_CASE("runner aligns output with the sequence and stays finite") {
    const Sequence seq = small_loop(50);
    RunOptions opt;
    const RunResult r = run_filter(seq, opt);
    CHECK(r.poses.size() == seq.size());
    CHECK(r.t.size() == seq.size());
    CHECK(r.noise_diag.size() == seq.size() - 1);
    CHECK(r.t.front() == seq.samples.front().t);
    CHECK((r.poses.front().position - seq.gt_pose.front().position).norm() == 0.0);
    CHECK(r.max_cov_asymmetry < 1e-12);
    CHECK(r.skipped_update_times.empty());
    CHECK(r.time_jumps.empty());
    // static covariance trace: diag(1, 9) at every step
    for (const Vec2& n : r.noise_diag) {
        CHECK(n[0] == 1.0);
        CHECK(n[1] == 9.0);
    }
}

TEST_CASE("zero-output adapter runs bit-identically to the static filter") {
    const Sequence seq = small_loop(51);
    RunOptions static_opt;
    const RunResult a = run_filter(seq, static_opt);

    const AdapterWeights w = init_weights(9);  // affine layer zero: z = 0
    RunOptions adaptive = static_opt;
    adaptive.weights = &w;
    const RunResult b = run_filter(seq, adaptive);

    REQUIRE(a.poses.size() == b.poses.size());
    for (size_t i = 0; i < a.poses.size(); i += 53) {
        CHECK(a.poses[i].position == b.poses[i].position);
        CHECK(a.poses[i].rotation == b.poses[i].rotation);
    }
    CHECK(a.final_state.bias_gyro == b.final_state.bias_gyro);
    CHECK(a.final_cov == b.final_cov);
}

TEST_CASE("no-alignment run keeps the mounting frozen") {
    Sequence seq = small_loop(52);
    RunOptions opt;
    opt.no_alignment = true;
    const RunResult r = run_filter(seq, opt);
    CHECK(r.final_state.car_rotation.isIdentity(0.0));
    CHECK(r.final_state.lever_arm.norm() == 0.0);
}

TEST_CASE("perfect IMU over a 1 km loop stays under 0.1 percent of distance") {
    // no noise, no bias, ideal mounting: the pseudo-measurements hold exactly
    // and the updates must not corrupt the trajectory
    SyntheticSpec spec;
    spec.initial_speed = 10.0;
    spec.segments = {{20.0, 10.0, 0.0},  {5.0, 8.0, 0.4},  {20.0, 10.0, 0.0},
                     {5.0, 8.0, -0.4},   {20.0, 10.0, 0.0}, {5.0, 8.0, 0.4},
                     {25.0, 10.0, 0.0}};
    const Sequence seq = generate_synthetic(spec, 60);
    const double distance = cumulative_distance(seq.gt_pose).back();
    REQUIRE(distance > 900.0);

    RunOptions opt;
    const RunResult r = run_filter(seq, opt);
    const double final_err = (r.poses.back().position - seq.gt_pose.back().position).norm();
    CHECK(final_err < 1e-3 * distance);
}

TEST_CASE("pure integration drifts beyond the filter on biased data") {
    const Sequence seq = small_loop(53);
    RunOptions opt;
    const double filtered = relative_errors(run_filter(seq, opt).poses, seq.gt_pose).t_rel_pct;
    RunOptions pure = opt;
    pure.pure_integration = true;
    const double open_loop =
        relative_errors(run_filter(seq, pure).poses, seq.gt_pose).t_rel_pct;
    CHECK(open_loop > filtered);
}

TEST_CASE("time jumps are flagged but never repaired") {
    Sequence seq = small_loop(54);
    const size_t k = seq.size() / 2;
    for (size_t i = k; i < seq.size(); ++i) seq.samples[i].t += 2.0;  // 2 s gap
    RunOptions opt;
    const RunResult r = run_filter(seq, opt);
    REQUIRE(r.time_jumps.size() == 1);
    CHECK(r.time_jumps[0] == (int)k);
    CHECK(r.poses.size() == seq.size());
}

TEST_CASE("adapter noise trace is recorded per step") {
    const Sequence seq = small_loop(55);
    AdapterWeights w = init_weights(10);
    w.fc_bias = {0.2, -0.1};
    Rng rng(11);
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < kConvChannels; ++i) w.fc_weight(o, i) = rng.uniform(-0.3, 0.3);
    RunOptions opt;
    opt.weights = &w;
    const RunResult r = run_filter(seq, opt);
    bool varied = false;
    for (const Vec2& n : r.noise_diag) {
        CHECK(n[0] > 1e-3);
        CHECK(n[0] < 1e3);
        if (n[0] != r.noise_diag.front()[0]) varied = true;
    }
    CHECK(varied);
}
