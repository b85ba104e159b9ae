#include "sshash/diffnet.hpp"

#include <algorithm>
#include <cmath>

#include "sshash/kernels.hpp"

namespace sshash {

std::string_view to_string(Activation a) noexcept {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softmax") return Activation::softmax;
    throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.activation == b.activation && a.weight == b.weight && a.bias == b.bias;
}

bool operator==(const DenseNet& a, const DenseNet& b) { return a.layers_ == b.layers_; }

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        if (l.bias.size() != l.out_dim())
            throw InvalidInput("layer " + std::to_string(i) + ": bias length " +
                               std::to_string(l.bias.size()) + " != out_dim " +
                               std::to_string(l.out_dim()));
        if (i > 0 && layers_[i - 1].out_dim() != l.in_dim())
            throw InvalidInput("layer " + std::to_string(i) + ": in_dim " +
                               std::to_string(l.in_dim()) + " does not chain with previous out_dim " +
                               std::to_string(layers_[i - 1].out_dim()));
    }
}

DenseNet DenseNet::glorot(std::span<const LayerSpec> spec, std::mt19937_64& rng) {
    std::vector<DenseLayer> layers;
    layers.reserve(spec.size());
    for (const auto& s : spec) {
        const double limit = std::sqrt(6.0 / static_cast<double>(s.in_dim + s.out_dim));
        std::uniform_real_distribution<double> dist(-limit, limit);
        DenseLayer l{Matrix(s.in_dim, s.out_dim), std::vector<double>(s.out_dim, 0.0),
                     s.activation};
        for (double& w : l.weight.values()) w = dist(rng);
        layers.push_back(std::move(l));
    }
    return DenseNet(std::move(layers));
}

std::size_t DenseNet::in_dim() const {
    if (layers_.empty()) throw InvalidState("empty network has no input dimension");
    return layers_.front().in_dim();
}

std::size_t DenseNet::out_dim() const {
    if (layers_.empty()) throw InvalidState("empty network has no output dimension");
    return layers_.back().out_dim();
}

std::size_t DenseNet::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weight.size() + l.bias.size();
    return n;
}

DenseLayer& DenseNet::mutable_layer(std::size_t i) {
    touch();
    return layers_.at(i);
}

std::vector<double> DenseNet::flat_parameters() const {
    std::vector<double> out;
    out.reserve(parameter_count());
    for (const auto& l : layers_) {
        out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

void DenseNet::set_flat_parameters(std::span<const double> values) {
    if (values.size() != parameter_count())
        throw InvalidInput("set_flat_parameters: expected " + std::to_string(parameter_count()) +
                           " values, got " + std::to_string(values.size()));
    auto it = values.begin();
    for (auto& l : layers_) {
        std::copy_n(it, l.weight.size(), l.weight.values().begin());
        it += static_cast<std::ptrdiff_t>(l.weight.size());
        std::copy_n(it, l.bias.size(), l.bias.begin());
        it += static_cast<std::ptrdiff_t>(l.bias.size());
    }
    touch();
}

namespace {

void apply_activation(Activation act, Matrix& m) {
    switch (act) {
        case Activation::identity:
            break;
        case Activation::relu:
            for (double& v : m.values()) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::sigmoid:
            for (double& v : m.values()) v = 1.0 / (1.0 + std::exp(-v));
            break;
        case Activation::softmax:
            for (std::size_t r = 0; r < m.rows(); ++r) {
                auto row = m.row(r);
                const double mx = *std::max_element(row.begin(), row.end());
                double total = 0.0;
                for (double& v : row) {
                    v = std::exp(v - mx);
                    total += v;
                }
                for (double& v : row) v /= total;
            }
            break;
    }
}

Matrix layer_forward(const DenseLayer& l, const Matrix& input) {
    Matrix out = kernels::matmul(input, l.weight);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += l.bias[c];
    }
    apply_activation(l.activation, out);
    return out;
}

void check_input(const DenseNet& net, const Matrix& input) {
    if (net.num_layers() == 0) throw InvalidState("forward on an empty network");
    if (input.cols() != net.in_dim())
        throw InvalidInput("forward: input has " + std::to_string(input.cols()) +
                           " columns, network expects " + std::to_string(net.in_dim()));
    if (!input.all_finite()) throw NumericalError("forward: non-finite input");
}

}  // namespace

ForwardResult forward(const DenseNet& net, const Matrix& input) {
    check_input(net, input);
    ForwardResult res;
    res.tape.owner = &net;
    res.tape.generation = net.generation();
    res.tape.inputs.reserve(net.num_layers());
    res.tape.outputs.reserve(net.num_layers());
    const Matrix* current = &input;
    for (const auto& l : net.layers()) {
        res.tape.inputs.push_back(*current);
        res.tape.outputs.push_back(layer_forward(l, *current));
        current = &res.tape.outputs.back();
    }
    res.output = res.tape.outputs.back();
    if (!res.output.all_finite()) throw NumericalError("forward produced non-finite values");
    return res;
}

Matrix predict(const DenseNet& net, const Matrix& input) {
    check_input(net, input);
    Matrix current = input;
    for (const auto& l : net.layers()) current = layer_forward(l, current);
    if (!current.all_finite()) throw NumericalError("forward produced non-finite values");
    return current;
}

Matrix activation_backward(Activation act, const Matrix& output, const Matrix& grad) {
    Matrix out(grad.rows(), grad.cols());
    const auto y = output.values();
    const auto g = grad.values();
    auto d = out.values();
    switch (act) {
        case Activation::identity:
            std::copy(g.begin(), g.end(), d.begin());
            break;
        case Activation::relu:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = y[i] > 0.0 ? g[i] : 0.0;
            break;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = g[i] * y[i] * (1.0 - y[i]);
            break;
        case Activation::softmax:
            for (std::size_t r = 0; r < out.rows(); ++r) {
                const auto yr = output.row(r);
                const auto gr = grad.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < yr.size(); ++c) dot += gr[c] * yr[c];
                auto dr = out.row(r);
                for (std::size_t c = 0; c < yr.size(); ++c) dr[c] = yr[c] * (gr[c] - dot);
            }
            break;
    }
    return out;
}

NetGradients backward(const DenseNet& net, const Tape& tape, const Matrix& output_grad,
                      bool want_input_grad) {
    if (tape.owner != &net || tape.generation != net.generation() ||
        tape.outputs.size() != net.num_layers() || tape.inputs.size() != net.num_layers())
        throw InvalidState("backward: tape was not produced by this network in its current state");
    const Matrix& out = tape.outputs.back();
    if (output_grad.rows() != out.rows() || output_grad.cols() != out.cols())
        throw InvalidInput("backward: output gradient is " + shape_string(output_grad) +
                           ", expected " + shape_string(out));

    NetGradients grads;
    grads.layers.resize(net.num_layers());
    Matrix upstream = output_grad;
    for (std::size_t li = net.num_layers(); li-- > 0;) {
        const DenseLayer& l = net.layer(li);
        Matrix pre = activation_backward(l.activation, tape.outputs[li], upstream);
        auto& lg = grads.layers[li];
        lg.weight = kernels::matmul_tn(tape.inputs[li], pre);
        lg.bias.assign(l.out_dim(), 0.0);
        for (std::size_t r = 0; r < pre.rows(); ++r) {
            const auto row = pre.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) lg.bias[c] += row[c];
        }
        if (li > 0 || want_input_grad) upstream = kernels::matmul_nt(pre, l.weight);
    }
    if (want_input_grad) grads.input = std::move(upstream);
    return grads;
}

std::vector<double> NetGradients::flat() const {
    std::vector<double> out;
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.values().begin(), l.weight.values().end());
        out.insert(out.end(), l.bias.begin(), l.bias.end());
    }
    return out;
}

AdamState::AdamState(std::size_t parameter_count, AdamConfig config)
    : config_(config), first_(parameter_count, 0.0), second_(parameter_count, 0.0) {}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_.size())
        throw InvalidState("adam_step: " + std::to_string(params.size()) + " parameters, " +
                           std::to_string(grads.size()) + " gradients, state sized " +
                           std::to_string(state.first_.size()));
    const AdamConfig& c = state.config_;
    ++state.t_;
    const double t = static_cast<double>(state.t_);
    const double correct1 = 1.0 - std::pow(c.beta1, t);
    const double correct2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.first_[i] = c.beta1 * state.first_[i] + (1.0 - c.beta1) * g;
        state.second_[i] = c.beta2 * state.second_[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.first_[i] / correct1;
        const double v_hat = state.second_[i] / correct2;
        params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

void adam_step(DenseNet& net, const NetGradients& grads, AdamState& state) {
    if (grads.layers.size() != net.num_layers())
        throw InvalidState("adam_step: gradient layer count does not match network");
    std::vector<double> params = net.flat_parameters();
    const std::vector<double> flat = grads.flat();
    adam_step(params, flat, state);
    net.set_flat_parameters(params);
}

GradCheckReport grad_check(const std::function<LossAndGrad(std::span<const double>)>& fn,
                           std::span<const double> params, double step, double tolerance,
                           double abs_floor) {
    if (!(step > 0.0)) throw InvalidInput("grad_check: step must be positive");
    std::vector<double> p(params.begin(), params.end());
    const LossAndGrad base = fn(p);
    if (!std::isfinite(base.loss)) throw NumericalError("grad_check: loss is not finite");
    if (base.grad.size() != p.size())
        throw InvalidInput("grad_check: analytic gradient has " + std::to_string(base.grad.size()) +
                           " entries for " + std::to_string(p.size()) + " parameters");
    GradCheckReport report;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double saved = p[i];
        p[i] = saved + step;
        const double up = fn(p).loss;
        p[i] = saved - step;
        const double down = fn(p).loss;
        p[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericalError("grad_check: loss is not finite at parameter " + std::to_string(i));
        const double numeric = (up - down) / (2.0 * step);
        const double abs_err = std::abs(numeric - base.grad[i]);
        const double scale = std::max(std::abs(numeric), std::abs(base.grad[i]));
        const double rel_err = abs_err <= abs_floor ? 0.0 : abs_err / scale;
        if (abs_err > report.max_absolute_error) report.max_absolute_error = abs_err;
        if (rel_err > report.max_relative_error) {
            report.max_relative_error = rel_err;
            report.worst_index = i;
        }
        ++report.checked;
    }
    report.passed = report.max_relative_error <= tolerance;
    return report;
}

}  // namespace sshash
