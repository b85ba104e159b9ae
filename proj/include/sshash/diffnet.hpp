#pragma once

// Minimal reverse-mode core for sequential stacks of fully-connected layers.
// A forward pass records a Tape; backward replays it in reverse and returns
// gradients for every weight, bias and the input.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sshash/matrix.hpp"

namespace sshash {

enum class Activation { identity, relu, sigmoid, softmax };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

struct DenseLayer {
    Matrix weight;  // in_dim x out_dim
    std::vector<double> bias;
    Activation activation = Activation::identity;

    std::size_t in_dim() const noexcept { return weight.rows(); }
    std::size_t out_dim() const noexcept { return weight.cols(); }
};

struct LayerSpec {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    Activation activation = Activation::identity;
};

class DenseNet {
public:
    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);

    /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
    static DenseNet glorot(std::span<const LayerSpec> spec, std::mt19937_64& rng);

    std::size_t num_layers() const noexcept { return layers_.size(); }
    std::size_t in_dim() const;
    std::size_t out_dim() const;
    std::size_t parameter_count() const noexcept;

    const DenseLayer& layer(std::size_t i) const { return layers_.at(i); }
    /// Mutable access invalidates outstanding tapes.
    DenseLayer& mutable_layer(std::size_t i);
    std::span<const DenseLayer> layers() const noexcept { return layers_; }

    /// Parameters in layer order, each layer as weight (row-major) then bias.
    std::vector<double> flat_parameters() const;
    void set_flat_parameters(std::span<const double> values);

    std::uint64_t generation() const noexcept { return generation_; }
    void touch() noexcept { ++generation_; }

    friend bool operator==(const DenseNet& a, const DenseNet& b);

private:
    std::vector<DenseLayer> layers_;
    std::uint64_t generation_ = 0;
};

bool operator==(const DenseLayer& a, const DenseLayer& b);

struct Tape {
    const DenseNet* owner = nullptr;
    std::uint64_t generation = 0;
    std::vector<Matrix> inputs;   // input to each layer
    std::vector<Matrix> outputs;  // post-activation output of each layer
};

struct ForwardResult {
    Matrix output;
    Tape tape;
};

ForwardResult forward(const DenseNet& net, const Matrix& input);
/// Forward pass without recording a tape.
Matrix predict(const DenseNet& net, const Matrix& input);

struct LayerGradients {
    Matrix weight;
    std::vector<double> bias;
};

struct NetGradients {
    std::vector<LayerGradients> layers;
    Matrix input;  // empty when not requested

    /// Same ordering as DenseNet::flat_parameters.
    std::vector<double> flat() const;
};

NetGradients backward(const DenseNet& net, const Tape& tape, const Matrix& output_grad,
                      bool want_input_grad = true);

/// Applies the activation's Jacobian to `grad` given the activation output.
Matrix activation_backward(Activation act, const Matrix& output, const Matrix& grad);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    friend bool operator==(const AdamConfig&, const AdamConfig&) = default;
};

class AdamState {
public:
    AdamState() = default;
    AdamState(std::size_t parameter_count, AdamConfig config = {});

    std::size_t size() const noexcept { return first_.size(); }
    std::uint64_t step_count() const noexcept { return t_; }
    const AdamConfig& config() const noexcept { return config_; }
    std::span<const double> first_moment() const noexcept { return first_; }
    std::span<const double> second_moment() const noexcept { return second_; }

    friend void adam_step(std::span<double>, std::span<const double>, AdamState&);
    friend bool operator==(const AdamState&, const AdamState&) = default;

private:
    AdamConfig config_{};
    std::vector<double> first_;
    std::vector<double> second_;
    std::uint64_t t_ = 0;
};

/// Bias-corrected Adam update; increments the step counter once.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);
void adam_step(DenseNet& net, const NetGradients& grads, AdamState& state);

struct LossAndGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
    bool passed = true;
};

/// Compares fn's analytic gradient at `params` against central differences.
/// An entry passes when |analytic - numeric| <= abs_floor or its relative
/// error is within `tolerance`.
GradCheckReport grad_check(const std::function<LossAndGrad(std::span<const double>)>& fn,
                           std::span<const double> params, double step, double tolerance,
                           double abs_floor = 1e-6);

}  // namespace sshash
