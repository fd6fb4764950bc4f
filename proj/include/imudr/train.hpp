// Training of the adapter weights plus the twelve learnable noise standard
// deviations against the relative-translation loss. The gradient is estimated
// by simultaneous perturbation (two filter evaluations per probe) and applied
// through norm clipping and Adam.
#pragma once

#include "imudr/adapter.hpp"
#include "imudr/config.hpp"
#include "imudr/dataset.hpp"
#include "imudr/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace imudr {

using Vec12 = Eigen::Matrix<double, 12, 1>;

struct TrainConfig {
    double learning_rate = 1e-4;
    int epochs = 20;
    int batch_size = 9;                 // subsequences per minibatch
    double subsequence_seconds = 60.0;
    double augmentation_std = 1e-4;     // gaussian noise added to IMU channels
    double grad_clip_norm = 1.0;
    double dropout_p = 0.5;
    std::uint64_t seed = 0;
    // simultaneous-perturbation estimator
    int spsa_probes = 2;
    double spsa_step = 5e-3;
    // Adam
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
};

// Everything the optimizer moves: the adapter and the log standard deviations
// of P0 (6) and Q (6). Log-space storage keeps the sigmas positive.
struct LearnableSet {
    AdapterWeights weights;
    Vec12 log_sigmas = Vec12::Zero();

    static LearnableSet from_config(const AdapterWeights& w, const Config& cfg);
    InitialBeliefs initial_beliefs() const;
    ProcessNoise process_noise() const;

    Eigen::VectorXd pack() const;  // 6222 trainable scalars
    void unpack(const Eigen::VectorXd& v);
};

// Relative translation increment error in percent over the available
// subsequence lengths; falls back to the whole-trajectory increment when the
// path is shorter than 100 m.
double relative_translation_loss(const std::vector<Pose>& est, const std::vector<Pose>& gt);

// Rescales v to at most max_norm, preserving direction.
Eigen::VectorXd clip_gradient(const Eigen::VectorXd& v, double max_norm);

struct AdamState {
    Eigen::VectorXd m, v;
    long t = 0;
};

struct TrainingStepResult {
    LearnableSet params;
    double loss = 0.0;
    bool accepted = true;  // false when the loss went non-finite
};

// One minibatch iteration: sample subsequences, estimate the gradient, clip,
// and apply Adam. The minibatch, augmentation noise and dropout masks are
// shared between the paired perturbation evaluations.
TrainingStepResult training_step(const LearnableSet& params,
                                 const std::vector<Sequence>& train_set,
                                 const TrainConfig& cfg, const Config& base, AdamState& adam,
                                 Rng& rng);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainingResult {
    LearnableSet best;   // lowest validation loss (last params when no validation)
    LearnableSet last;
    std::vector<EpochRecord> history;
};

// Deterministic for a given seed. When checkpoint_dir is nonempty, writes
// per-epoch checkpoints, best.txt and history.csv there.
TrainingResult run_training(const std::vector<Sequence>& train_set,
                            const Sequence* validation, const TrainConfig& cfg,
                            const Config& base, const std::string& checkpoint_dir = "");

// Validation-style loss of a full filter pass (no dropout, no augmentation).
double evaluate_loss(const LearnableSet& params, const Sequence& seq, const Config& base);

void save_checkpoint(const LearnableSet& params, const std::string& path);
LearnableSet load_checkpoint(const std::string& path, const Config& base);

}  // namespace imudr
