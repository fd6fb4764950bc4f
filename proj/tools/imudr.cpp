// Command-line entry point: run the filter over a sequence, train the
// adapter, evaluate trajectories, generate synthetic sequences, and export
// per-step adapted covariances.
#include "imudr/metrics.hpp"
#include "imudr/runner.hpp"
#include "imudr/train.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace imudr;

namespace {

constexpr const char* kVersion = "imudr 0.1.0";

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Vec3 parse_vec3(const std::string& text, const std::string& what) {
    Vec3 v;
    std::stringstream ss(text);
    std::string cell;
    int i = 0;
    while (std::getline(ss, cell, ',') && i < 3) {
        try {
            v[i++] = std::stod(cell);
        } catch (const std::exception&) {
            throw UsageError(what + ": bad component '" + cell + "'");
        }
    }
    if (i != 3) throw UsageError(what + ": expected three comma-separated values");
    return v;
}

Config make_config(const std::string& config_path, const std::vector<std::string>& overrides) {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    for (const std::string& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        if (!cfg.assign(kv.substr(0, eq), kv.substr(eq + 1)))
            throw UsageError("--set: unknown config key '" + kv.substr(0, eq) + "'");
    }
    return cfg;
}

void write_manifest(const fs::path& dir, const std::string& command,
                    const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(dir / "manifest.txt");
    out << kVersion << "\n";
    out << "command = " << command << "\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
}

// ---------------------------------------------------------------- run

struct RunArgs {
    std::string seq_dir, out_dir, weights_path, config_path;
    std::vector<std::string> overrides;
    bool static_cov = false;
    bool no_alignment = false;
    bool pure_imu = false;
};

int cmd_run(const RunArgs& args) {
    const Config cfg = make_config(args.config_path, args.overrides);
    const Sequence seq = load_sequence(args.seq_dir, cfg.dt_warn);

    RunOptions opt;
    opt.config = cfg;
    opt.no_alignment = args.no_alignment;
    opt.pure_integration = args.pure_imu;

    std::optional<LearnableSet> learned;
    if (!args.weights_path.empty() && !args.static_cov) {
        learned = load_checkpoint(args.weights_path, cfg);
        opt.weights = &learned->weights;
        opt.initial_override = learned->initial_beliefs();
        opt.process_override = learned->process_noise();
    }

    const RunResult result = run_filter(seq, opt);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    export_poses(result.poses, (out / "poses.txt").string(), PoseFormat::kKitti);
    export_poses(result.poses, (out / "trajectory.csv").string(), PoseFormat::kCsv, &result.t);
    export_poses(seq.gt_pose, (out / "gt.txt").string(), PoseFormat::kKitti);
    write_manifest(out, "run",
                   {{"sequence", args.seq_dir},
                    {"weights", args.weights_path.empty() ? "(static)" : args.weights_path},
                    {"static_cov", args.static_cov ? "true" : "false"},
                    {"no_alignment", args.no_alignment ? "true" : "false"},
                    {"pure_imu", args.pure_imu ? "true" : "false"},
                    {"config", args.config_path.empty() ? "(defaults)" : args.config_path}});

    if (!seq.time_jumps.empty())
        std::cerr << "warning: " << seq.time_jumps.size()
                  << " time jump(s) flagged in the input; data left unrepaired\n";
    if (!result.skipped_update_times.empty())
        std::cerr << "warning: " << result.skipped_update_times.size()
                  << " update(s) skipped on singular innovation covariance\n";
    std::cout << "wrote " << (out / "poses.txt").string() << " (" << result.poses.size()
              << " poses)\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string data_dir, holdout, out_dir, config_path;
    std::vector<std::string> overrides;
    TrainConfig train;
};

int cmd_train(const TrainArgs& args) {
    const Config cfg = make_config(args.config_path, args.overrides);

    std::vector<Sequence> train_set;
    std::optional<Sequence> validation;
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(args.data_dir))
        if (e.is_directory()) dirs.push_back(e.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
        Sequence seq = load_sequence(dir.string(), cfg.dt_warn);
        seq.name = dir.filename().string();
        if (seq.name == args.holdout)
            validation = std::move(seq);
        else
            train_set.push_back(std::move(seq));
    }
    if (train_set.empty()) throw DataError("train: no training sequences under " + args.data_dir);
    if (!args.holdout.empty() && !validation)
        throw DataError("train: holdout sequence '" + args.holdout + "' not found");

    fs::create_directories(args.out_dir);
    const TrainingResult result = run_training(
        train_set, validation ? &*validation : nullptr, args.train, cfg, args.out_dir);

    write_manifest(args.out_dir, "train",
                   {{"data", args.data_dir},
                    {"holdout", args.holdout.empty() ? "(none)" : args.holdout},
                    {"epochs", std::to_string(args.train.epochs)},
                    {"seed", std::to_string(args.train.seed)},
                    {"learning_rate", std::to_string(args.train.learning_rate)}});

    for (const EpochRecord& r : result.history)
        std::cout << "epoch " << r.epoch << "  train " << r.train_loss << "  val " << r.val_loss
                  << "\n";
    std::cout << "wrote " << (fs::path(args.out_dir) / "best.txt").string() << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    std::vector<std::string> est_paths, gt_paths, names;
    std::string out_dir;
};

int cmd_eval(const EvalArgs& args) {
    if (args.est_paths.size() != args.gt_paths.size())
        throw UsageError("eval: need as many --gt as --est");
    std::vector<ErrorReport> reports;
    for (size_t i = 0; i < args.est_paths.size(); ++i) {
        const std::vector<Pose> est = import_poses_kitti(args.est_paths[i]);
        const std::vector<Pose> gt = import_poses_kitti(args.gt_paths[i]);
        ErrorReport report = relative_errors(est, gt);
        report.sequence = i < args.names.size() ? args.names[i]
                                                : fs::path(args.est_paths[i]).stem().string();
        reports.push_back(std::move(report));
    }
    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    summarize(reports, (out / "report.csv").string(), (out / "report.txt").string());
    std::cout << summarize_table(reports);
    return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    std::string out_dir, preset = "urban", segments;
    std::uint64_t seed = 0;
    double dt = 0.01, initial_speed = 0.0;
    double noise_gyro = 1.4e-3, noise_accel = 3e-3, slip = 0.0;
    std::string gyro_bias = "0,0,0", accel_bias = "0,0,0", mount_deg = "0,0,0",
                lever = "0,0,0";
};

std::vector<SyntheticSegment> preset_segments(const std::string& name) {
    if (name == "urban") {
        // hilly district loop: climbs, banked corners, two ramp spirals, a stop
        return {{4.0, 8.0, 0.0, 0.00, 0.0},      {8.0, 8.0, 0.0, 0.14, 0.0},
                {6.0, 5.0, -0.45, 0.14, -0.06},  {8.0, 8.0, 0.0, 0.15, 0.0},
                {30.0, 4.0, 0.55, 0.14, 0.05},   {6.0, 8.0, 0.0, -0.10, 0.0},
                {5.0, 0.0, 0.0, -0.05, 0.0},     {3.0, 0.0, 0.0, 0.0, 0.0},
                {6.0, 8.0, 0.0, -0.14, 0.0},     {7.0, 5.0, 0.50, -0.12, 0.06},
                {7.0, 8.0, 0.0, 0.13, 0.0},      {30.0, 4.0, -0.55, -0.14, -0.05},
                {8.0, 8.0, 0.0, 0.12, 0.0},      {6.0, 5.0, 0.50, 0.13, 0.06},
                {8.0, 8.0, 0.0, -0.14, 0.0},     {6.0, 5.0, -0.45, -0.10, -0.05},
                {10.0, 8.0, 0.0, 0.13, 0.0},     {6.0, 5.0, 0.45, 0.10, 0.05},
                {10.0, 8.0, 0.0, -0.12, 0.0},    {12.0, 8.0, 0.0, 0.10, 0.0},
                {15.0, 8.0, 0.0, -0.08, 0.0}};
    }
    if (name == "turns") {
        // flat ground, frequent sharp turns
        return {{5.0, 10.0, 0.0},  {6.0, 10.0, 0.0},  {4.0, 6.0, -0.55}, {8.0, 10.0, 0.0},
                {4.0, 6.0, 0.55},  {8.0, 10.0, 0.0},  {4.0, 6.0, -0.55}, {8.0, 10.0, 0.0},
                {4.0, 6.0, -0.55}, {10.0, 10.0, 0.0}, {4.0, 6.0, 0.55},  {12.0, 10.0, 0.0}};
    }
    if (name == "straight") {
        return {{30.0, 10.0, 0.0}};
    }
    throw UsageError("synth: unknown preset '" + name + "' (urban, turns, straight)");
}

std::vector<SyntheticSegment> parse_segments(const std::string& text) {
    // "duration:speed:yaw_rate[:grade[:bank]];..."
    std::vector<SyntheticSegment> segments;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ';')) {
        std::stringstream ps(part);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ps, cell, ':')) {
            try {
                v.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw UsageError("synth: bad segment value '" + cell + "'");
            }
        }
        if (v.size() < 3 || v.size() > 5)
            throw UsageError("synth: segments are duration:speed:yaw[:grade[:bank]]");
        SyntheticSegment seg{v[0], v[1], v[2], 0.0, 0.0};
        if (v.size() > 3) seg.grade = v[3];
        if (v.size() > 4) seg.bank = v[4];
        segments.push_back(seg);
    }
    if (segments.empty()) throw UsageError("synth: no segments given");
    return segments;
}

int cmd_synth(const SynthArgs& args) {
    SyntheticSpec spec;
    spec.segments = args.segments.empty() ? preset_segments(args.preset)
                                          : parse_segments(args.segments);
    spec.dt = args.dt;
    spec.initial_speed = args.initial_speed;
    spec.sigma_gyro_noise = args.noise_gyro;
    spec.sigma_accel_noise = args.noise_accel;
    spec.gyro_bias = parse_vec3(args.gyro_bias, "--gyro-bias");
    spec.accel_bias = parse_vec3(args.accel_bias, "--accel-bias");
    spec.mount_rotvec = parse_vec3(args.mount_deg, "--mount-deg") * (M_PI / 180.0);
    spec.lever_arm = parse_vec3(args.lever, "--lever");
    spec.slip_gain = args.slip;

    Sequence seq = generate_synthetic(spec, args.seed);
    seq.name = fs::path(args.out_dir).filename().string();
    write_sequence(seq, args.out_dir);
    write_manifest(args.out_dir, "synth",
                   {{"preset", args.segments.empty() ? args.preset : "(custom segments)"},
                    {"seed", std::to_string(args.seed)},
                    {"samples", std::to_string(seq.size())},
                    {"gyro_bias", args.gyro_bias},
                    {"accel_bias", args.accel_bias},
                    {"mount_deg", args.mount_deg},
                    {"lever", args.lever}});
    std::cout << "wrote " << args.out_dir << " (" << seq.size() << " samples, "
              << seq.duration() << " s)\n";
    return 0;
}

// ---------------------------------------------------------------- export-cov

struct ExportCovArgs {
    std::string seq_dir, weights_path, out_path, config_path;
    std::vector<std::string> overrides;
};

int cmd_export_cov(const ExportCovArgs& args) {
    const Config cfg = make_config(args.config_path, args.overrides);
    const Sequence seq = load_sequence(args.seq_dir, cfg.dt_warn);
    const LearnableSet learned = load_checkpoint(args.weights_path, cfg);

    RunOptions opt;
    opt.config = cfg;
    opt.weights = &learned.weights;
    opt.initial_override = learned.initial_beliefs();
    opt.process_override = learned.process_noise();
    const RunResult result = run_filter(seq, opt);

    std::ofstream out(args.out_path);
    if (!out) throw DataError("export-cov: cannot write " + args.out_path);
    out << "t,n_lat,n_up\n";
    char buf[96];
    for (size_t i = 0; i < result.noise_diag.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", result.t[i + 1],
                      result.noise_diag[i][0], result.noise_diag[i][1]);
        out << buf;
    }
    std::cout << "wrote " << args.out_path << " (" << result.noise_diag.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IMU-only dead-reckoning: invariant EKF with a learned "
                 "pseudo-measurement covariance adapter"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Filter one sequence");
    run->add_option("--seq", run_args.seq_dir, "sequence directory (KITTI raw or csv)")
        ->required();
    run->add_option("--out", run_args.out_dir, "output directory")->required();
    run->add_option("--weights", run_args.weights_path, "adapter weights or checkpoint file");
    run->add_flag("--static-cov", run_args.static_cov, "force the static covariance");
    run->add_flag("--no-alignment", run_args.no_alignment,
                  "freeze the car mounting at identity/zero");
    run->add_flag("--pure-imu", run_args.pure_imu, "raw integration, no updates");
    run->add_option("--config", run_args.config_path, "key = value config file");
    run->add_option("--set", run_args.overrides, "config override key=value")->take_all();

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train the adapter (leave-one-out)");
    train->add_option("--data", train_args.data_dir, "directory of sequence directories")
        ->required();
    train->add_option("--out", train_args.out_dir, "checkpoint directory")->required();
    train->add_option("--holdout", train_args.holdout, "sequence name held out for validation");
    train->add_option("--epochs", train_args.train.epochs, "training epochs");
    train->add_option("--seed", train_args.train.seed, "random seed");
    train->add_option("--lr", train_args.train.learning_rate, "Adam learning rate");
    train->add_option("--dropout", train_args.train.dropout_p, "dropout probability");
    train->add_option("--probes", train_args.train.spsa_probes,
                      "perturbation probe pairs per step");
    train->add_option("--config", train_args.config_path, "key = value config file");
    train->add_option("--set", train_args.overrides, "config override key=value")->take_all();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Benchmark metrics for trajectories");
    eval->add_option("--est", eval_args.est_paths, "estimated pose file(s)")->required();
    eval->add_option("--gt", eval_args.gt_paths, "ground-truth pose file(s)")->required();
    eval->add_option("--name", eval_args.names, "sequence name(s)");
    eval->add_option("--out", eval_args.out_dir, "report directory")->required();

    SynthArgs synth_args;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic sequence");
    synth->add_option("--out", synth_args.out_dir, "sequence directory to write")->required();
    synth->add_option("--preset", synth_args.preset, "urban, turns or straight");
    synth->add_option("--segments", synth_args.segments,
                      "custom profile duration:speed:yaw[:grade[:bank]];...");
    synth->add_option("--seed", synth_args.seed, "noise seed");
    synth->add_option("--dt", synth_args.dt, "sample period, s");
    synth->add_option("--initial-speed", synth_args.initial_speed, "m/s");
    synth->add_option("--noise-gyro", synth_args.noise_gyro, "per-sample gyro noise, rad/s");
    synth->add_option("--noise-accel", synth_args.noise_accel, "per-sample accel noise, m/s^2");
    synth->add_option("--gyro-bias", synth_args.gyro_bias, "x,y,z rad/s");
    synth->add_option("--accel-bias", synth_args.accel_bias, "x,y,z m/s^2");
    synth->add_option("--mount-deg", synth_args.mount_deg, "IMU/car misalignment rotvec, deg");
    synth->add_option("--lever", synth_args.lever, "car-frame lever arm, m");
    synth->add_option("--slip", synth_args.slip, "lateral slip gain in turns");

    ExportCovArgs cov_args;
    CLI::App* export_cov =
        app.add_subcommand("export-cov", "Per-step adapted covariance as csv");
    export_cov->add_option("--seq", cov_args.seq_dir, "sequence directory")->required();
    export_cov->add_option("--weights", cov_args.weights_path, "adapter weights file")
        ->required();
    export_cov->add_option("--out", cov_args.out_path, "csv file to write")->required();
    export_cov->add_option("--config", cov_args.config_path, "key = value config file");
    export_cov->add_option("--set", cov_args.overrides, "config override key=value")->take_all();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? 0 : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (train->parsed()) return cmd_train(train_args);
        if (eval->parsed()) return cmd_eval(eval_args);
        if (synth->parsed()) return cmd_synth(synth_args);
        if (export_cov->parsed()) return cmd_export_cov(cov_args);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const WeightsError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
