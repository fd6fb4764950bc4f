#include "imudr/adapter.hpp"

#include "imudr/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace imudr {

namespace {

using Channels = Eigen::Matrix<double, kConvChannels, 1>;

void check_shapes(const AdapterWeights& w) {
    auto bad = [](const std::string& what) {
        throw WeightsError(WeightsError::Kind::kShapeMismatch,
                           "adapter: malformed weight shapes: " + what);
    };
    for (const auto& t : w.conv1.taps)
        if (t.rows() != kConvChannels || t.cols() != kImuChannels) bad("conv1 kernel");
    for (const auto& t : w.conv2.taps)
        if (t.rows() != kConvChannels || t.cols() != kConvChannels) bad("conv2 kernel");
    if (w.conv1.bias.size() != kConvChannels) bad("conv1 bias");
    if (w.conv2.bias.size() != kConvChannels) bad("conv2 bias");
    if (w.conv1.dilation < 1 || w.conv2.dilation < 1) bad("dilation");
    if ((w.norm_std.array() <= 0.0).any()) bad("normalization std");
}

// Output column t of a causal dilated convolution over `input`, columns left
// of index 0 reading as zeros.
template <typename Input>
Eigen::VectorXd conv_column(const ConvLayer& layer, const Input& input, int t) {
    Eigen::VectorXd acc = layer.bias;
    for (int k = 0; k < kKernelSize; ++k) {
        const int src = t - layer.dilation * (kKernelSize - 1 - k);
        if (src >= 0) acc.noalias() += layer.taps[k] * input.col(src);
    }
    return acc;
}

}  // namespace

ConvLayer ConvLayer::zeros(int out, int in, int dilation) {
    ConvLayer l;
    for (auto& t : l.taps) t = Eigen::MatrixXd::Zero(out, in);
    l.bias = Eigen::VectorXd::Zero(out);
    l.dilation = dilation;
    return l;
}

DropoutMask make_dropout_mask(Rng& rng, double p) {
    DropoutMask m;
    const double keep_scale = 1.0 / (1.0 - p);
    for (int c = 0; c < kConvChannels; ++c) m.conv1[c] = rng.uniform() < p ? 0.0 : keep_scale;
    for (int c = 0; c < kConvChannels; ++c) m.conv2[c] = rng.uniform() < p ? 0.0 : keep_scale;
    return m;
}

Eigen::Vector2d forward_raw(const AdapterWeights& w, const ImuWindow& window,
                            const DropoutMask* dropout) {
    check_shapes(w);

    // standardized window, sequence-start columns zero-padded in normalized space
    Eigen::Matrix<double, kImuChannels, kWindowSize> xn;
    const int pad = kWindowSize - window.valid;
    xn.leftCols(pad).setZero();
    for (int c = pad; c < kWindowSize; ++c)
        xn.col(c) = (window.samples.col(c) - w.norm_mean).cwiseQuotient(w.norm_std);

    const int last = kWindowSize - 1;
    Eigen::Matrix<double, kConvChannels, kKernelSize> hidden;
    for (int k = 0; k < kKernelSize; ++k) {
        const int t1 = last - w.conv2.dilation * (kKernelSize - 1 - k);
        if (t1 < 0) {
            hidden.col(k).setZero();
            continue;
        }
        Channels h = conv_column(w.conv1, xn, t1).cwiseMax(0.0);
        if (dropout) h.array() *= dropout->conv1;
        hidden.col(k) = h;
    }

    Channels h2 = w.conv2.bias;
    for (int k = 0; k < kKernelSize; ++k) h2.noalias() += w.conv2.taps[k] * hidden.col(k);
    h2 = h2.cwiseMax(0.0);
    if (dropout) h2.array() *= dropout->conv2;

    return w.fc_weight * h2 + w.fc_bias;
}

MeasurementNoise forward(const AdapterWeights& w, const ImuWindow& window, double beta,
                         double sigma_lat, double sigma_up, const DropoutMask* dropout) {
    const Eigen::Vector2d z = forward_raw(w, window, dropout);
    return {sigma_lat * sigma_lat * std::pow(10.0, beta * std::tanh(z[0])),
            sigma_up * sigma_up * std::pow(10.0, beta * std::tanh(z[1]))};
}

long param_count(const ConvLayer& layer) {
    long n = layer.bias.size();
    for (const auto& t : layer.taps) n += t.size();
    return n;
}

long param_count(const AdapterWeights& w) {
    return param_count(w.conv1) + param_count(w.conv2) + w.fc_weight.size() +
           w.fc_bias.size();
}

AdapterWeights init_weights(std::uint64_t seed) {
    Rng rng(seed);
    AdapterWeights w;
    w.conv1 = ConvLayer::zeros(kConvChannels, kImuChannels, 1);
    w.conv2 = ConvLayer::zeros(kConvChannels, kConvChannels, 3);
    auto fill = [&rng](ConvLayer& l) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(l.taps[0].cols() * kKernelSize));
        for (auto& t : l.taps)
            for (int o = 0; o < t.rows(); ++o)
                for (int i = 0; i < t.cols(); ++i) t(o, i) = rng.uniform(-bound, bound);
        for (int o = 0; o < l.bias.size(); ++o) l.bias[o] = rng.uniform(-bound, bound);
    };
    fill(w.conv1);
    fill(w.conv2);
    w.fc_weight.setZero();  // untrained adapter outputs z = 0
    w.fc_bias.setZero();
    return w;
}

namespace {

constexpr const char* kMagic = "imudr_adapter";
constexpr const char* kVersion = "v1";

void write_value(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}

void write_block(std::ostream& out, const char* name, const double* values, long n) {
    out << name;
    for (long i = 0; i < n; ++i) {
        out << (i % 8 == 0 ? "\n" : " ");
        write_value(out, values[i]);
    }
    out << "\n";
}

struct TokenReader {
    std::istream& in;

    std::string token(const char* context) {
        std::string t;
        if (!(in >> t))
            throw WeightsError(WeightsError::Kind::kParseFailure,
                               std::string("adapter: truncated file, expected ") + context);
        return t;
    }
    void expect(const char* literal) {
        const std::string t = token(literal);
        if (t != literal)
            throw WeightsError(WeightsError::Kind::kParseFailure,
                               "adapter: expected '" + std::string(literal) + "', got '" + t + "'");
    }
    long integer(const char* context) {
        const std::string t = token(context);
        try {
            size_t pos = 0;
            const long v = std::stol(t, &pos);
            if (pos != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw WeightsError(WeightsError::Kind::kParseFailure,
                               "adapter: bad integer '" + t + "' for " + context);
        }
    }
    double real(const char* context) {
        const std::string t = token(context);
        try {
            size_t pos = 0;
            const double v = std::stod(t, &pos);
            if (pos != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::exception&) {
            throw WeightsError(WeightsError::Kind::kParseFailure,
                               "adapter: bad value '" + t + "' in " + context);
        }
    }
    void read(const char* name, double* values, long n) {
        expect(name);
        for (long i = 0; i < n; ++i) values[i] = real(name);
    }
};

void expect_dim(long got, long want, const char* what) {
    if (got != want)
        throw WeightsError(WeightsError::Kind::kShapeMismatch,
                           "adapter: " + std::string(what) + " is " + std::to_string(got) +
                               ", expected " + std::to_string(want));
}

// kernels serialize out-major: o, i, k
void conv_to_values(const ConvLayer& l, std::vector<double>& v) {
    for (int o = 0; o < l.taps[0].rows(); ++o)
        for (int i = 0; i < l.taps[0].cols(); ++i)
            for (int k = 0; k < kKernelSize; ++k) v.push_back(l.taps[k](o, i));
}

void conv_from_values(ConvLayer& l, const std::vector<double>& v) {
    long idx = 0;
    for (int o = 0; o < l.taps[0].rows(); ++o)
        for (int i = 0; i < l.taps[0].cols(); ++i)
            for (int k = 0; k < kKernelSize; ++k) l.taps[k](o, i) = v[idx++];
}

void write_conv(std::ostream& out, const char* name, const ConvLayer& l) {
    out << name << " out " << l.taps[0].rows() << " in " << l.taps[0].cols() << " taps "
        << kKernelSize << " dilation " << l.dilation << "\n";
    std::vector<double> v;
    conv_to_values(l, v);
    write_block(out, "kernel", v.data(), static_cast<long>(v.size()));
    write_block(out, "bias", l.bias.data(), l.bias.size());
}

ConvLayer read_conv(TokenReader& r, const char* name, int in, int dilation) {
    r.expect(name);
    r.expect("out");
    expect_dim(r.integer("out"), kConvChannels, "conv out channels");
    r.expect("in");
    expect_dim(r.integer("in"), in, "conv in channels");
    r.expect("taps");
    expect_dim(r.integer("taps"), kKernelSize, "conv kernel size");
    r.expect("dilation");
    expect_dim(r.integer("dilation"), dilation, "conv dilation");

    ConvLayer l = ConvLayer::zeros(kConvChannels, in, dilation);
    std::vector<double> v(static_cast<size_t>(kConvChannels) * in * kKernelSize);
    r.read("kernel", v.data(), static_cast<long>(v.size()));
    conv_from_values(l, v);
    r.read("bias", l.bias.data(), l.bias.size());
    return l;
}

}  // namespace

void write_weights(std::ostream& out, const AdapterWeights& w,
                   const Eigen::Matrix<double, 12, 1>* learned_log_sigmas) {
    check_shapes(w);
    out << kMagic << " " << kVersion << "\n";
    write_conv(out, "conv1", w.conv1);
    write_conv(out, "conv2", w.conv2);
    out << "fc out 2 in " << kConvChannels << "\n";
    std::vector<double> fc;
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < kConvChannels; ++i) fc.push_back(w.fc_weight(o, i));
    write_block(out, "weight", fc.data(), static_cast<long>(fc.size()));
    write_block(out, "bias", w.fc_bias.data(), 2);
    write_block(out, "norm_mean", w.norm_mean.data(), 6);
    write_block(out, "norm_std", w.norm_std.data(), 6);
    if (learned_log_sigmas) write_block(out, "learned_log_sigmas", learned_log_sigmas->data(), 12);
    out << "end\n";
}

AdapterWeights read_weights(std::istream& in,
                            std::optional<Eigen::Matrix<double, 12, 1>>* learned_log_sigmas) {
    TokenReader r{in};
    const std::string magic = r.token("file magic");
    if (magic != kMagic)
        throw WeightsError(WeightsError::Kind::kParseFailure,
                           "adapter: not an adapter weights file");
    const std::string version = r.token("format version");
    if (version != kVersion)
        throw WeightsError(WeightsError::Kind::kVersionMismatch,
                           "adapter: unsupported format version '" + version + "'");

    AdapterWeights w;
    w.conv1 = read_conv(r, "conv1", kImuChannels, 1);
    w.conv2 = read_conv(r, "conv2", kConvChannels, 3);
    r.expect("fc");
    r.expect("out");
    expect_dim(r.integer("out"), 2, "fc out");
    r.expect("in");
    expect_dim(r.integer("in"), kConvChannels, "fc in");
    std::vector<double> fc(2 * kConvChannels);
    r.read("weight", fc.data(), static_cast<long>(fc.size()));
    for (int o = 0; o < 2; ++o)
        for (int i = 0; i < kConvChannels; ++i) w.fc_weight(o, i) = fc[o * kConvChannels + i];
    r.read("bias", w.fc_bias.data(), 2);
    r.read("norm_mean", w.norm_mean.data(), 6);
    r.read("norm_std", w.norm_std.data(), 6);

    if (learned_log_sigmas) learned_log_sigmas->reset();
    std::string tail = r.token("'learned_log_sigmas' or 'end'");
    if (tail == "learned_log_sigmas") {
        Eigen::Matrix<double, 12, 1> s;
        for (int i = 0; i < 12; ++i) s[i] = r.real("learned_log_sigmas");
        if (learned_log_sigmas) *learned_log_sigmas = s;
        tail = r.token("'end'");
    }
    if (tail != "end")
        throw WeightsError(WeightsError::Kind::kParseFailure,
                           "adapter: expected 'end', got '" + tail + "'");
    return w;
}

void save_weights(const AdapterWeights& w, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw WeightsError(WeightsError::Kind::kParseFailure, "adapter: cannot write " + path);
    write_weights(out, w);
}

AdapterWeights load_weights(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw WeightsError(WeightsError::Kind::kParseFailure, "adapter: cannot open " + path);
    return read_weights(in);
}

}  // namespace imudr
