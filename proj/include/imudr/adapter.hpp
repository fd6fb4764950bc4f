// Measurement-noise parameter adapter: a two-layer dilated causal 1-D CNN
// over a window of raw IMU samples, followed by an affine layer producing the
// two log-scale factors that reparameterize the pseudo-measurement covariance.
#pragma once

#include "imudr/state.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace imudr {

inline constexpr int kWindowSize = 15;
inline constexpr int kKernelSize = 5;
inline constexpr int kConvChannels = 32;
inline constexpr int kImuChannels = 6;

struct ConvLayer {
    // taps[k] is the (out x in) weight matrix applied k steps of `dilation`
    // before the newest tap; taps[kKernelSize - 1] reads the current input.
    std::array<Eigen::MatrixXd, kKernelSize> taps;
    Eigen::VectorXd bias;
    int dilation = 1;

    static ConvLayer zeros(int out, int in, int dilation);
};

struct AdapterWeights {
    ConvLayer conv1;  // in 6, out 32, dilation 1
    ConvLayer conv2;  // in 32, out 32, dilation 3
    Eigen::Matrix<double, 2, kConvChannels> fc_weight;
    Eigen::Vector2d fc_bias;
    // per-channel input standardization, data statistics rather than trained
    Vec6 norm_mean = Vec6::Zero();
    Vec6 norm_std = Vec6::Ones();
};

// The last kWindowSize IMU samples, newest in the rightmost column, rows
// [omega; accel]. `valid` counts real samples from the right; the remainder
// is zero-padded in normalized space.
struct ImuWindow {
    Eigen::Matrix<double, kImuChannels, kWindowSize> samples =
        Eigen::Matrix<double, kImuChannels, kWindowSize>::Zero();
    int valid = kWindowSize;

    void push(const ImuSample& s) {
        samples.leftCols(kWindowSize - 1) = samples.rightCols(kWindowSize - 1).eval();
        samples.col(kWindowSize - 1) << s.omega, s.accel;
        if (valid < kWindowSize) ++valid;
    }
    static ImuWindow empty() {
        ImuWindow w;
        w.valid = 0;
        return w;
    }
};

// Channel keep-masks for training, entries 0 or 1/(1-p); one mask per
// sequence iteration.
struct DropoutMask {
    Eigen::Array<double, kConvChannels, 1> conv1;
    Eigen::Array<double, kConvChannels, 1> conv2;
};

DropoutMask make_dropout_mask(class Rng& rng, double p);

// CNN forward pass producing N = diag(sigma_lat^2 10^(beta tanh z_lat),
//                                     sigma_up^2 10^(beta tanh z_up)).
// The dropout mask is applied only when supplied (training).
MeasurementNoise forward(const AdapterWeights& w, const ImuWindow& window, double beta,
                         double sigma_lat, double sigma_up,
                         const DropoutMask* dropout = nullptr);

// Raw network output z before the covariance reparameterization.
Eigen::Vector2d forward_raw(const AdapterWeights& w, const ImuWindow& window,
                            const DropoutMask* dropout = nullptr);

long param_count(const ConvLayer& layer);
long param_count(const AdapterWeights& w);

// Convolution kernels uniform in +-1/sqrt(fan_in); the affine layer starts at
// zero so an untrained adapter reproduces the static covariance exactly.
AdapterWeights init_weights(std::uint64_t seed);

struct WeightsError : std::runtime_error {
    enum class Kind { kParseFailure, kShapeMismatch, kVersionMismatch };
    WeightsError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
    Kind kind;
};

// Versioned text serialization; values round-trip bit-exactly. A checkpoint
// may carry the 12 learned log-sigmas of P0 and Q after the weights.
void write_weights(std::ostream& out, const AdapterWeights& w,
                   const Eigen::Matrix<double, 12, 1>* learned_log_sigmas = nullptr);
AdapterWeights read_weights(std::istream& in,
                            std::optional<Eigen::Matrix<double, 12, 1>>* learned_log_sigmas = nullptr);

void save_weights(const AdapterWeights& w, const std::string& path);
AdapterWeights load_weights(const std::string& path);

}  // namespace imudr
