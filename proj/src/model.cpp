#include "sshash/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>

#include "sshash/latent.hpp"

namespace sshash {

void ModelBundle::reset_optimizers(const AdamConfig& config) {
    trunk_opt = AdamState(trunk.parameter_count(), config);
    head_opt = AdamState(code_head.parameter_count(), config);
    predictor_opt = AdamState(predictor.parameter_count(), config);
    decoder_opt = AdamState(decoder.parameter_count(), config);
}

bool same_parameters(const ModelBundle& a, const ModelBundle& b) {
    return a.latent == b.latent && a.reconstruction == b.reconstruction && a.bits == b.bits &&
           a.tau == b.tau && a.multi_label == b.multi_label && a.num_classes == b.num_classes &&
           a.trunk == b.trunk && a.code_head == b.code_head && a.predictor == b.predictor &&
           a.decoder == b.decoder && a.medians == b.medians && a.scale_low == b.scale_low &&
           a.scale_high == b.scale_high && a.config_digest == b.config_digest;
}

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x5eedU};
    return std::mt19937_64(seq);
}

namespace {

std::vector<LayerSpec> stack(std::size_t in, std::span<const std::size_t> hidden, std::size_t out,
                             Activation out_act) {
    std::vector<LayerSpec> spec;
    std::size_t prev = in;
    for (auto h : hidden) {
        spec.push_back({prev, h, Activation::relu});
        prev = h;
    }
    spec.push_back({prev, out, out_act});
    return spec;
}

}  // namespace

ModelBundle init_model(const ModelSpec& spec, std::uint64_t seed, const AdamConfig& adam) {
    if (spec.input_dim == 0) throw InvalidInput("model: input dimension must be positive");
    if (spec.bits == 0) throw InvalidInput("model: code length must be positive");
    if (spec.encoder_hidden.empty())
        throw InvalidInput("model: the encoder needs at least one hidden layer");
    if (!(spec.tau > 0.0)) throw InvalidInput("model: temperature must be positive");
    if (spec.num_classes < 0) throw InvalidInput("model: negative class count");

    ModelBundle m;
    m.latent = spec.latent;
    m.reconstruction = spec.reconstruction;
    m.bits = spec.bits;
    m.tau = spec.tau;
    m.multi_label = spec.multi_label;
    m.num_classes = spec.num_classes;

    const std::span<const std::size_t> enc_hidden(spec.encoder_hidden);
    std::vector<LayerSpec> trunk_spec =
        stack(spec.input_dim, enc_hidden.first(enc_hidden.size() - 1), enc_hidden.back(),
              Activation::relu);
    const std::size_t z_dim = enc_hidden.back();

    auto rng_trunk = stream_rng(seed, 1);
    auto rng_head = stream_rng(seed, 2);
    auto rng_pred = stream_rng(seed, 3);
    auto rng_dec = stream_rng(seed, 4);

    m.trunk = DenseNet::glorot(trunk_spec, rng_trunk);
    const LayerSpec head_spec =
        spec.latent == LatentKind::bernoulli
            ? LayerSpec{z_dim, spec.bits, Activation::sigmoid}
            : LayerSpec{z_dim, 2 * spec.bits, Activation::identity};
    m.code_head = DenseNet::glorot(std::span(&head_spec, 1), rng_head);
    if (spec.num_classes > 0) {
        const LayerSpec pred_spec{z_dim, static_cast<std::size_t>(spec.num_classes),
                                  spec.multi_label ? Activation::sigmoid : Activation::softmax};
        m.predictor = DenseNet::glorot(std::span(&pred_spec, 1), rng_pred);
    }
    const Activation out_act = spec.reconstruction == ReconstructionKind::sigmoid
                                   ? Activation::sigmoid
                                   : Activation::identity;
    m.decoder = DenseNet::glorot(stack(spec.bits, spec.decoder_hidden, spec.input_dim, out_act),
                                 rng_dec);
    m.reset_optimizers(adam);
    return m;
}

Matrix prepare_features(const ModelBundle& model, const Matrix& features) {
    Matrix x = features;
    if (model.scale_low.empty()) return x;
    if (x.cols() != model.scale_low.size())
        throw InvalidInput("features have " + std::to_string(x.cols()) +
                           " columns, model scaling expects " +
                           std::to_string(model.scale_low.size()));
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) {
            const double range = model.scale_high[c] - model.scale_low[c];
            row[c] = range > 0.0 ? std::clamp((row[c] - model.scale_low[c]) / range, 0.0, 1.0) : 0.0;
        }
    }
    return x;
}

Matrix code_statistics(const ModelBundle& model, const Matrix& features) {
    const Matrix z = predict(model.trunk, features);
    Matrix h = predict(model.code_head, z);
    if (model.latent == LatentKind::bernoulli) return h;
    return h.slice_cols(0, model.bits);
}

void fit_thresholds(ModelBundle& model, const Matrix& reference_features) {
    if (model.latent != LatentKind::gaussian) return;
    model.medians =
        column_medians(code_statistics(model, prepare_features(model, reference_features)));
}

std::vector<BitCode> hash_features(const ModelBundle& model, const Matrix& features) {
    const Matrix stats = code_statistics(model, prepare_features(model, features));
    if (model.latent == LatentKind::bernoulli) return binarize_bernoulli(stats);
    if (model.medians.size() != model.bits)
        throw InvalidState("gaussian model has no fitted median thresholds");
    return binarize_gaussian_median(stats, model.medians);
}

std::string digest_hex(std::string_view text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
    return out;
}

// ---- checkpoint ----------------------------------------------------------

namespace {

constexpr std::string_view kMagic = "sshash-checkpoint";
constexpr int kVersion = 1;

void write_values(std::ostream& out, std::string_view tag, std::span<const double> values) {
    std::string line(tag);
    line += ' ';
    line += std::to_string(values.size());
    char buf[32];
    for (double v : values) {
        const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
        line.push_back(' ');
        line.append(buf, p);
    }
    line.push_back('\n');
    out << line;
}

void write_net(std::ostream& out, std::string_view name, const DenseNet& net) {
    out << "net " << name << ' ' << net.num_layers() << '\n';
    for (const auto& l : net.layers()) {
        out << "layer " << l.in_dim() << ' ' << l.out_dim() << ' ' << to_string(l.activation)
            << '\n';
        write_values(out, "weight", l.weight.values());
        write_values(out, "bias", l.bias);
    }
}

class CheckpointReader {
public:
    explicit CheckpointReader(std::istream& in) : in_(in) {}

    std::istringstream line(std::string_view expected_tag) {
        std::string text;
        if (!std::getline(in_, text)) fail("unexpected end of file, expected '" +
                                           std::string(expected_tag) + "'");
        ++line_no_;
        std::istringstream ss(text);
        std::string tag;
        ss >> tag;
        if (tag != expected_tag) fail("expected '" + std::string(expected_tag) + "', found '" + tag + "'");
        return ss;
    }

    template <typename T>
    T scalar(std::string_view tag) {
        auto ss = line(tag);
        std::string tok;
        ss >> tok;
        T v{};
        const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size()) fail("bad value for " + std::string(tag));
        return v;
    }

    std::string word(std::string_view tag) {
        auto ss = line(tag);
        std::string tok;
        ss >> tok;
        return tok;
    }

    std::vector<double> values(std::string_view tag, std::optional<std::size_t> expected = {}) {
        auto ss = line(tag);
        std::size_t n = 0;
        if (!(ss >> n)) fail("missing count for " + std::string(tag));
        if (expected && n != *expected)
            fail(std::string(tag) + " has " + std::to_string(n) + " values, expected " +
                 std::to_string(*expected));
        std::vector<double> out(n);
        std::string tok;
        for (auto& v : out) {
            if (!(ss >> tok)) fail("truncated " + std::string(tag));
            const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || p != tok.data() + tok.size() || !std::isfinite(v))
                fail("bad number in " + std::string(tag));
        }
        return out;
    }

    DenseNet net(std::string_view name) {
        auto ss = line("net");
        std::string got;
        std::size_t count = 0;
        ss >> got >> count;
        if (got != name) fail("expected net '" + std::string(name) + "', found '" + got + "'");
        std::vector<DenseLayer> layers;
        for (std::size_t i = 0; i < count; ++i) {
            auto ls = line("layer");
            std::size_t in = 0, out = 0;
            std::string act;
            if (!(ls >> in >> out >> act)) fail("malformed layer header");
            DenseLayer l;
            l.activation = parse_activation(act);
            l.weight = Matrix(in, out, values("weight", in * out));
            l.bias = values("bias", out);
            layers.push_back(std::move(l));
        }
        try {
            return DenseNet(std::move(layers));
        } catch (const InvalidInput& e) {
            fail(e.what());
        }
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InvalidInput("checkpoint line " + std::to_string(line_no_) + ": " + msg);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

}  // namespace

void save_checkpoint(std::ostream& out, const ModelBundle& m) {
    out << kMagic << ' ' << kVersion << '\n';
    out << "latent " << to_string(m.latent) << '\n';
    out << "reconstruction " << to_string(m.reconstruction) << '\n';
    out << "bits " << m.bits << '\n';
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, m.tau);
    out << "tau " << std::string_view(buf, static_cast<std::size_t>(p - buf)) << '\n';
    out << "multi_label " << (m.multi_label ? 1 : 0) << '\n';
    out << "num_classes " << m.num_classes << '\n';
    out << "config_digest " << (m.config_digest.empty() ? "-" : m.config_digest) << '\n';
    write_values(out, "medians", m.medians);
    write_values(out, "scale_low", m.scale_low);
    write_values(out, "scale_high", m.scale_high);
    write_net(out, "trunk", m.trunk);
    write_net(out, "code_head", m.code_head);
    write_net(out, "predictor", m.predictor);
    write_net(out, "decoder", m.decoder);
    out << "end\n";
}

ModelBundle load_checkpoint(std::istream& in) {
    CheckpointReader r(in);
    const int version = r.scalar<int>(kMagic);
    if (version != kVersion) r.fail("unsupported checkpoint version " + std::to_string(version));
    ModelBundle m;
    m.latent = parse_latent_kind(r.word("latent"));
    m.reconstruction = parse_reconstruction_kind(r.word("reconstruction"));
    m.bits = r.scalar<std::size_t>("bits");
    m.tau = r.scalar<double>("tau");
    m.multi_label = r.scalar<int>("multi_label") != 0;
    m.num_classes = r.scalar<int>("num_classes");
    m.config_digest = r.word("config_digest");
    if (m.config_digest == "-") m.config_digest.clear();
    m.medians = r.values("medians");
    m.scale_low = r.values("scale_low");
    m.scale_high = r.values("scale_high", m.scale_low.size());
    m.trunk = r.net("trunk");
    m.code_head = r.net("code_head");
    m.predictor = r.net("predictor");
    m.decoder = r.net("decoder");
    r.line("end");

    const std::size_t head_out = m.latent == LatentKind::bernoulli ? m.bits : 2 * m.bits;
    if (m.trunk.num_layers() == 0 || m.code_head.num_layers() != 1 || m.decoder.num_layers() == 0 ||
        m.code_head.in_dim() != m.trunk.out_dim() || m.code_head.out_dim() != head_out ||
        m.decoder.in_dim() != m.bits || m.decoder.out_dim() != m.trunk.in_dim() ||
        (m.has_predictor() && (m.predictor.in_dim() != m.trunk.out_dim() ||
                               m.predictor.out_dim() != static_cast<std::size_t>(m.num_classes))))
        throw InvalidInput("checkpoint: network shapes are inconsistent");
    if (!m.medians.empty() && m.medians.size() != m.bits)
        throw InvalidInput("checkpoint: median count does not match code length");
    if (!m.scale_low.empty() && m.scale_low.size() != m.trunk.in_dim())
        throw InvalidInput("checkpoint: scaling vector does not match input dimension");
    m.reset_optimizers({});
    return m;
}

void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write checkpoint '" + path.string() + "'");
    save_checkpoint(out, model);
}

ModelBundle load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open checkpoint '" + path.string() + "'");
    return load_checkpoint(in);
}

}  // namespace sshash
