#include "imudr/train.hpp"

#include "imudr/metrics.hpp"
#include "imudr/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace fs = std::filesystem;

namespace imudr {

namespace {

double safe_log(double v) { return std::log(std::max(v, 1e-12)); }

}  // namespace

LearnableSet LearnableSet::from_config(const AdapterWeights& w, const Config& cfg) {
    LearnableSet p;
    p.weights = w;
    p.log_sigmas << safe_log(cfg.sigma0_attitude), safe_log(cfg.sigma0_velocity),
        safe_log(cfg.sigma0_gyro_bias), safe_log(cfg.sigma0_accel_bias),
        safe_log(cfg.sigma0_car_rotation), safe_log(cfg.sigma0_lever_arm),
        safe_log(cfg.sigma_gyro), safe_log(cfg.sigma_accel), safe_log(cfg.sigma_gyro_bias_walk),
        safe_log(cfg.sigma_accel_bias_walk), safe_log(cfg.sigma_car_rotation_walk),
        safe_log(cfg.sigma_lever_arm_walk);
    return p;
}

InitialBeliefs LearnableSet::initial_beliefs() const {
    return {std::exp(log_sigmas[0]), std::exp(log_sigmas[1]), std::exp(log_sigmas[2]),
            std::exp(log_sigmas[3]), std::exp(log_sigmas[4]), std::exp(log_sigmas[5])};
}

ProcessNoise LearnableSet::process_noise() const {
    return {std::exp(log_sigmas[6]), std::exp(log_sigmas[7]), std::exp(log_sigmas[8]),
            std::exp(log_sigmas[9]), std::exp(log_sigmas[10]), std::exp(log_sigmas[11])};
}

Eigen::VectorXd LearnableSet::pack() const {
    Eigen::VectorXd v(param_count(weights) + 12);
    long idx = 0;
    auto put_conv = [&](const ConvLayer& l) {
        for (int o = 0; o < l.taps[0].rows(); ++o)
            for (int i = 0; i < l.taps[0].cols(); ++i)
                for (int k = 0; k < kKernelSize; ++k) v[idx++] = l.taps[k](o, i);
        for (int o = 0; o < l.bias.size(); ++o) v[idx++] = l.bias[o];
    };
    put_conv(weights.conv1);
    put_conv(weights.conv2);
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < kConvChannels; ++i) v[idx++] = weights.fc_weight(o, i);
    v[idx++] = weights.fc_bias[0];
    v[idx++] = weights.fc_bias[1];
    v.segment<12>(idx) = log_sigmas;
    return v;
}

void LearnableSet::unpack(const Eigen::VectorXd& v) {
    if (v.size() != param_count(weights) + 12)
        throw std::invalid_argument("LearnableSet::unpack: wrong vector size");
    long idx = 0;
    auto get_conv = [&](ConvLayer& l) {
        for (int o = 0; o < l.taps[0].rows(); ++o)
            for (int i = 0; i < l.taps[0].cols(); ++i)
                for (int k = 0; k < kKernelSize; ++k) l.taps[k](o, i) = v[idx++];
        for (int o = 0; o < l.bias.size(); ++o) l.bias[o] = v[idx++];
    };
    get_conv(weights.conv1);
    get_conv(weights.conv2);
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < kConvChannels; ++i) weights.fc_weight(o, i) = v[idx++];
    weights.fc_bias[0] = v[idx++];
    weights.fc_bias[1] = v[idx++];
    log_sigmas = v.segment<12>(idx);
}

double relative_translation_loss(const std::vector<Pose>& est, const std::vector<Pose>& gt) {
    const ErrorReport report = relative_errors(est, gt);
    if (!report.flagged) return report.t_rel_pct;
    // shorter than the smallest benchmark length: score the one available
    // increment, the whole trajectory
    const double dist = cumulative_distance(gt).back();
    if (dist < 1.0) return 0.0;
    const Mat3 rt_gt = gt.front().rotation.transpose();
    const Mat3 rt_est = est.front().rotation.transpose();
    const Vec3 inc_gt = rt_gt * (gt.back().position - gt.front().position);
    const Vec3 inc_est = rt_est * (est.back().position - est.front().position);
    return 100.0 * (inc_est - inc_gt).norm() / dist;
}

Eigen::VectorXd clip_gradient(const Eigen::VectorXd& v, double max_norm) {
    const double norm = v.norm();
    if (norm <= max_norm || norm == 0.0) return v;
    return v * (max_norm / norm);
}

namespace {

struct BatchItem {
    Sequence sub;
    DropoutMask mask;
};

Sequence slice_sequence(const Sequence& seq, double start, double span) {
    auto lo = std::lower_bound(seq.samples.begin(), seq.samples.end(), start,
                               [](const ImuSample& s, double t) { return s.t < t; });
    auto hi = std::lower_bound(lo, seq.samples.end(), start + span,
                               [](const ImuSample& s, double t) { return s.t < t; });
    const size_t a = (size_t)(lo - seq.samples.begin());
    size_t b = (size_t)(hi - seq.samples.begin());
    if (b - a < 2) b = std::min(a + 2, seq.samples.size());
    Sequence out;
    out.name = seq.name;
    out.samples.assign(seq.samples.begin() + a, seq.samples.begin() + b);
    out.gt_pose.assign(seq.gt_pose.begin() + a, seq.gt_pose.begin() + b);
    out.gt_velocity.assign(seq.gt_velocity.begin() + a, seq.gt_velocity.begin() + b);
    return out;
}

std::vector<BatchItem> make_batch(const std::vector<Sequence>& train_set,
                                  const TrainConfig& cfg, Rng& rng) {
    std::vector<BatchItem> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
        const Sequence& seq = train_set[rng.below(train_set.size())];
        const double t0 = seq.samples.front().t;
        const double t1 = seq.samples.back().t;
        const double margin = t1 - t0 - cfg.subsequence_seconds;
        const double start = margin > 0.0 ? t0 + rng.uniform() * margin : t0;
        BatchItem item;
        item.sub = slice_sequence(seq, start, cfg.subsequence_seconds);
        for (ImuSample& s : item.sub.samples) {
            for (int k = 0; k < 3; ++k) s.omega[k] += cfg.augmentation_std * rng.gaussian();
            for (int k = 0; k < 3; ++k) s.accel[k] += cfg.augmentation_std * rng.gaussian();
        }
        item.mask = make_dropout_mask(rng, cfg.dropout_p);
        batch.push_back(std::move(item));
    }
    return batch;
}

double batch_loss(const LearnableSet& params, const std::vector<BatchItem>& batch,
                  const Config& base, bool dropout) {
    double sum = 0.0;
    for (const BatchItem& item : batch) {
        RunOptions opt;
        opt.config = base;
        opt.weights = &params.weights;
        opt.dropout = dropout ? &item.mask : nullptr;
        opt.initial_override = params.initial_beliefs();
        opt.process_override = params.process_noise();
        try {
            const RunResult rr = run_filter(item.sub, opt);
            const double loss = relative_translation_loss(rr.poses, item.sub.gt_pose);
            if (!std::isfinite(loss)) return std::numeric_limits<double>::infinity();
            sum += loss;
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return sum / batch.size();
}

}  // namespace

TrainingStepResult training_step(const LearnableSet& params,
                                 const std::vector<Sequence>& train_set,
                                 const TrainConfig& cfg, const Config& base, AdamState& adam,
                                 Rng& rng) {
    if (train_set.empty()) throw std::invalid_argument("training_step: empty dataset");
    const std::vector<BatchItem> batch = make_batch(train_set, cfg, rng);

    const Eigen::VectorXd theta = params.pack();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta.size());
    double loss_sum = 0.0;

    LearnableSet probe = params;
    for (int p = 0; p < cfg.spsa_probes; ++p) {
        Eigen::VectorXd delta(theta.size());
        for (long i = 0; i < delta.size(); ++i) delta[i] = rng.rademacher();

        probe.unpack(theta + cfg.spsa_step * delta);
        const double loss_plus = batch_loss(probe, batch, base, true);
        probe.unpack(theta - cfg.spsa_step * delta);
        const double loss_minus = batch_loss(probe, batch, base, true);
        if (!std::isfinite(loss_plus) || !std::isfinite(loss_minus))
            return {params, std::numeric_limits<double>::quiet_NaN(), false};

        grad += (loss_plus - loss_minus) / (2.0 * cfg.spsa_step) * delta;
        loss_sum += 0.5 * (loss_plus + loss_minus);
    }
    grad /= cfg.spsa_probes;
    grad = clip_gradient(grad, cfg.grad_clip_norm);

    if (adam.m.size() != theta.size()) {
        adam.m = Eigen::VectorXd::Zero(theta.size());
        adam.v = Eigen::VectorXd::Zero(theta.size());
        adam.t = 0;
    }
    ++adam.t;
    adam.m = cfg.adam_beta1 * adam.m + (1.0 - cfg.adam_beta1) * grad;
    adam.v = cfg.adam_beta2 * adam.v + (1.0 - cfg.adam_beta2) * grad.cwiseProduct(grad);
    const double bias1 = 1.0 - std::pow(cfg.adam_beta1, (double)adam.t);
    const double bias2 = 1.0 - std::pow(cfg.adam_beta2, (double)adam.t);
    const Eigen::VectorXd update =
        (adam.m / bias1).cwiseQuotient(((adam.v / bias2).cwiseSqrt().array() + cfg.adam_eps).matrix());

    TrainingStepResult out;
    out.params = params;
    out.params.unpack(theta - cfg.learning_rate * update);
    out.loss = loss_sum / cfg.spsa_probes;
    return out;
}

double evaluate_loss(const LearnableSet& params, const Sequence& seq, const Config& base) {
    RunOptions opt;
    opt.config = base;
    opt.weights = &params.weights;
    opt.initial_override = params.initial_beliefs();
    opt.process_override = params.process_noise();
    const RunResult rr = run_filter(seq, opt);
    return relative_translation_loss(rr.poses, seq.gt_pose);
}

TrainingResult run_training(const std::vector<Sequence>& train_set, const Sequence* validation,
                            const TrainConfig& cfg, const Config& base,
                            const std::string& checkpoint_dir) {
    if (train_set.empty()) throw std::invalid_argument("run_training: empty dataset");

    LearnableSet params = LearnableSet::from_config(init_weights(cfg.seed), base);
    // input standardization statistics over the training set
    Vec6 mean = Vec6::Zero();
    long n = 0;
    for (const Sequence& s : train_set)
        for (const ImuSample& u : s.samples) {
            Vec6 ch;
            ch << u.omega, u.accel;
            mean += ch;
            ++n;
        }
    mean /= (double)n;
    Vec6 var = Vec6::Zero();
    for (const Sequence& s : train_set)
        for (const ImuSample& u : s.samples) {
            Vec6 ch;
            ch << u.omega, u.accel;
            var += (ch - mean).cwiseAbs2();
        }
    var /= (double)n;
    params.weights.norm_mean = mean;
    params.weights.norm_std = var.cwiseSqrt().cwiseMax(1e-9);

    TrainingResult out;
    out.best = params;
    out.last = params;
    double best_val = std::numeric_limits<double>::infinity();
    bool have_best = false;

    if (!checkpoint_dir.empty()) fs::create_directories(checkpoint_dir);

    AdamState adam;
    Rng rng(cfg.seed);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const TrainingStepResult step = training_step(params, train_set, cfg, base, adam, rng);
        if (step.accepted) params = step.params;

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = step.loss;
        rec.val_loss = validation ? evaluate_loss(params, *validation, base)
                                  : std::numeric_limits<double>::quiet_NaN();
        out.history.push_back(rec);

        if (!checkpoint_dir.empty()) {
            char name[32];
            std::snprintf(name, sizeof(name), "epoch_%03d.txt", epoch);
            save_checkpoint(params, (fs::path(checkpoint_dir) / name).string());
        }
        if (validation && rec.val_loss < best_val) {
            best_val = rec.val_loss;
            out.best = params;
            have_best = true;
        }
    }
    out.last = params;
    if (!validation || !have_best) out.best = params;

    if (!checkpoint_dir.empty()) {
        save_checkpoint(out.best, (fs::path(checkpoint_dir) / "best.txt").string());
        std::ofstream hist(fs::path(checkpoint_dir) / "history.csv");
        hist << "epoch,train_loss,val_loss\n";
        char buf[96];
        for (const EpochRecord& r : out.history) {
            std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g\n", r.epoch, r.train_loss, r.val_loss);
            hist << buf;
        }
    }
    return out;
}

void save_checkpoint(const LearnableSet& params, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw WeightsError(WeightsError::Kind::kParseFailure, "checkpoint: cannot write " + path);
    write_weights(out, params.weights, &params.log_sigmas);
}

LearnableSet load_checkpoint(const std::string& path, const Config& base) {
    std::ifstream in(path);
    if (!in)
        throw WeightsError(WeightsError::Kind::kParseFailure, "checkpoint: cannot open " + path);
    std::optional<Vec12> sigmas;
    LearnableSet params = LearnableSet::from_config(AdapterWeights{}, base);
    params.weights = read_weights(in, &sigmas);
    if (sigmas) params.log_sigmas = *sigmas;
    return params;
}

}  // namespace imudr
