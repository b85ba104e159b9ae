#include "sshash/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "sshash/latent.hpp"

namespace sshash {

std::string_view to_string(MaskStrategy s) noexcept {
    switch (s) {
        case MaskStrategy::first_s: return "first-s";
        case MaskStrategy::random: return "random";
        case MaskStrategy::stratified: return "stratified";
    }
    return "stratified";
}

MaskStrategy parse_mask_strategy(std::string_view s) {
    if (s == "first-s") return MaskStrategy::first_s;
    if (s == "random") return MaskStrategy::random;
    if (s == "stratified") return MaskStrategy::stratified;
    throw InvalidInput("unknown supervision mask strategy '" + std::string(s) + "'");
}

std::vector<std::uint8_t> supervision_mask(std::size_t n, double rho,
                                           std::span<const LabelSet> labels, std::uint64_t seed,
                                           MaskStrategy strategy) {
    if (!(rho > 0.0) || rho > 1.0)
        throw InvalidInput("supervision ratio must lie in (0, 1], got " + std::to_string(rho));
    const auto budget = static_cast<std::size_t>(std::floor(rho * static_cast<double>(n) + 1e-9));
    std::vector<std::uint8_t> mask(n, 0);
    if (strategy == MaskStrategy::first_s) {
        std::fill_n(mask.begin(), budget, 1);
        return mask;
    }
    auto rng = stream_rng(seed, 0x6d61736bULL);
    if (strategy == MaskStrategy::random) {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i < budget; ++i) mask[order[i]] = 1;
        return mask;
    }

    if (labels.size() != n) throw InvalidInput("stratified supervision mask needs one label per row");
    int classes = 0;
    for (const auto& l : labels) {
        if (l.empty()) throw InvalidInput("stratified supervision mask: unlabelled row");
        classes = std::max(classes, l.front() + 1);
    }
    std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(labels[i].front())].push_back(i);
    for (std::size_t c = 0; c < members.size(); ++c)
        if (members[c].empty())
            throw InvalidInput("stratified supervision mask: class " + std::to_string(c) +
                               " has no rows");

    // Proportional quotas, remainder to the largest fractional parts.
    std::vector<std::size_t> quota(members.size());
    std::vector<std::pair<double, std::size_t>> fractions;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < members.size(); ++c) {
        const double exact = static_cast<double>(budget) * static_cast<double>(members[c].size()) /
                             static_cast<double>(n);
        quota[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        assigned += quota[c];
        fractions.emplace_back(-(exact - static_cast<double>(quota[c])), c);
    }
    std::sort(fractions.begin(), fractions.end());
    for (std::size_t i = 0; assigned < budget; ++i) {
        const std::size_t c = fractions[i % fractions.size()].second;
        if (quota[c] < members[c].size()) {
            ++quota[c];
            ++assigned;
        }
    }
    // Every class gets at least one labelled row when the budget allows it.
    if (budget >= members.size()) {
        for (std::size_t c = 0; c < members.size(); ++c) {
            if (quota[c] > 0) continue;
            const auto donor = static_cast<std::size_t>(
                std::max_element(quota.begin(), quota.end()) - quota.begin());
            --quota[donor];
            ++quota[c];
        }
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
        auto& rows = members[c];
        std::shuffle(rows.begin(), rows.end(), rng);
        for (std::size_t i = 0; i < quota[c]; ++i) mask[rows[i]] = 1;
    }
    return mask;
}

void apply_supervision(LabeledDataset& data, double rho, std::uint64_t seed,
                       MaskStrategy strategy) {
    const auto rows = data.rows_in(Split::train);
    std::vector<LabelSet> train_labels;
    if (data.has_labels()) {
        train_labels.reserve(rows.size());
        for (auto r : rows) train_labels.push_back(data.labels[r]);
    } else if (strategy == MaskStrategy::stratified) {
        throw InvalidInput("stratified supervision needs labels");
    }
    const auto mask = supervision_mask(rows.size(), rho, train_labels, seed, strategy);
    data.supervised.assign(data.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) data.supervised[rows[i]] = mask[i];
}

std::vector<IndexPair> form_pairs(std::size_t batch_size, std::size_t subsample,
                                  std::mt19937_64* rng) {
    std::vector<IndexPair> pairs;
    if (batch_size < 2) return pairs;
    pairs.reserve(batch_size * (batch_size - 1) / 2);
    for (std::size_t i = 0; i < batch_size; ++i)
        for (std::size_t j = i + 1; j < batch_size; ++j)
            pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    if (subsample == 0 || subsample >= pairs.size()) return pairs;
    if (!rng) throw InvalidInput("form_pairs: subsampling needs a random generator");
    // Partial Fisher-Yates: the first `subsample` slots become a uniform subset.
    for (std::size_t i = 0; i < subsample; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pairs.size() - 1);
        std::swap(pairs[i], pairs[pick(*rng)]);
    }
    pairs.resize(subsample);
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

LossWeights TrainConfig::resolved_weights() const {
    LossWeights w = weights;
    if (kl_weight_auto) w.kl = 1.0 / static_cast<double>(bits);
    if (margin_auto) w.margin = static_cast<double>(bits) / 2.0;
    return w;
}

void TrainConfig::validate() const {
    if (batch_size < 2) throw InvalidInput("batch size must be at least 2");
    if (bits < 8 || bits > 64) throw InvalidInput("code length must lie in [8, 64]");
    if (!(tau > 0.0)) throw InvalidInput("temperature must be positive");
    if (encoder_hidden.empty()) throw InvalidInput("encoder needs at least one hidden layer");
    if (latent == LatentKind::gaussian && straight_through)
        throw InvalidInput("straight-through applies to the bernoulli latent only");
    if (!(adam.learning_rate >= 0.0)) throw InvalidInput("learning rate must be nonnegative");
    resolved_weights().validate(bits);
}

std::string TrainConfig::describe() const {
    std::ostringstream out;
    out.precision(17);
    const LossWeights w = resolved_weights();
    const auto list = [](const std::vector<std::size_t>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    };
    out << "epochs=" << epochs << "\nbatch_size=" << batch_size << "\nbits=" << bits
        << "\nlatent=" << to_string(latent) << "\nmode=" << to_string(mode)
        << "\nreconstruction=" << to_string(reconstruction) << "\nkl_weight=" << w.kl
        << "\nbeta=" << w.pointwise << "\nalpha=" << w.pairwise << "\nmargin=" << w.margin
        << "\ntau=" << tau << "\nstraight_through=" << straight_through
        << "\npair_subsample=" << pair_subsample << "\nminmax_scale=" << minmax_scale
        << "\nseed=" << seed << "\nencoder_hidden=" << list(encoder_hidden)
        << "\ndecoder_hidden=" << list(decoder_hidden) << "\nlr=" << adam.learning_rate
        << "\nadam_beta1=" << adam.beta1 << "\nadam_beta2=" << adam.beta2
        << "\nadam_epsilon=" << adam.epsilon << '\n';
    return out.str();
}

ObjectiveSettings objective_settings(const TrainConfig& config, bool multi_label) {
    ObjectiveSettings s;
    s.weights = config.resolved_weights();
    s.mode = config.mode;
    s.latent = config.latent;
    s.reconstruction = config.reconstruction;
    s.multi_label = multi_label;
    return s;
}

ModelSpec model_spec(const TrainConfig& config, const LabeledDataset& data) {
    ModelSpec spec;
    spec.input_dim = data.dim();
    spec.bits = config.bits;
    spec.num_classes = data.has_labels() ? data.num_classes : 0;
    spec.latent = config.latent;
    spec.reconstruction = config.reconstruction;
    spec.multi_label = data.multi_label;
    spec.tau = config.tau;
    spec.encoder_hidden = config.encoder_hidden;
    spec.decoder_hidden = config.decoder_hidden;
    return spec;
}

BatchLoss batch_loss(const ModelBundle& model, const Matrix& features, const Matrix& labels,
                     std::span<const std::uint8_t> labelled, std::span<const IndexPair> pairs,
                     const Matrix& noise, const ObjectiveSettings& settings,
                     bool straight_through) {
    const std::size_t m = features.rows();
    const std::size_t bits = model.bits;
    const bool bernoulli = model.latent == LatentKind::bernoulli;
    const bool supervised = settings.mode != SupervisionMode::unsup;
    if (settings.latent != model.latent) throw InvalidInput("batch_loss: latent kind mismatch");
    if (noise.rows() != m || noise.cols() != bits)
        throw InvalidInput("batch_loss: noise is " + shape_string(noise) + ", expected " +
                           std::to_string(m) + "x" + std::to_string(bits));
    if (supervised && !model.has_predictor())
        throw InvalidState("batch_loss: supervised mode needs a label predictor");

    const ForwardResult trunk = forward(model.trunk, features);
    const ForwardResult head = forward(model.code_head, trunk.output);

    Matrix alpha, mean, log_var, codes;
    if (bernoulli) {
        alpha = head.output;
        codes = sample_binary_concrete(alpha, model.tau, noise);
    } else {
        mean = head.output.slice_cols(0, bits);
        log_var = head.output.slice_cols(bits, bits);
        codes = Matrix(m, bits);
        for (std::size_t i = 0; i < codes.size(); ++i)
            codes.values()[i] =
                mean.values()[i] + std::exp(0.5 * log_var.values()[i]) * noise.values()[i];
    }

    Matrix decoder_input = codes;
    if (straight_through)
        for (double& v : decoder_input.values()) v = v > 0.5 ? 1.0 : 0.0;
    const ForwardResult dec = forward(model.decoder, decoder_input);

    ForwardResult pred;
    if (supervised) pred = forward(model.predictor, trunk.output);

    BatchOutputs outs;
    outs.features = &features;
    outs.reconstruction = &dec.output;
    outs.codes = &codes;
    if (bernoulli) {
        outs.alpha = &alpha;
    } else {
        outs.mean = &mean;
        outs.log_variance = &log_var;
    }
    if (supervised) {
        outs.predictions = &pred.output;
        outs.labels = &labels;
        outs.labelled = labelled;
    }
    outs.pairs = pairs;

    ObjectiveGrads og;
    BatchLoss result;
    result.terms = total_objective(outs, settings, &og);

    // Decoder, then through the sampling step into the code head.
    result.grads.decoder = backward(model.decoder, dec.tape, og.reconstruction, true);
    Matrix code_grad = og.codes;
    for (std::size_t i = 0; i < code_grad.size(); ++i)
        code_grad.values()[i] += result.grads.decoder.input.values()[i];

    Matrix head_grad(m, head.output.cols());
    if (bernoulli) {
        const Matrix via_sample = binary_concrete_backward(alpha, codes, model.tau, code_grad);
        for (std::size_t i = 0; i < head_grad.size(); ++i)
            head_grad.values()[i] = og.alpha.values()[i] + via_sample.values()[i];
    } else {
        for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t b = 0; b < bits; ++b) {
                const double g = code_grad(r, b);
                head_grad(r, b) = og.mean(r, b) + g;
                head_grad(r, bits + b) =
                    og.log_variance(r, b) + g * 0.5 * std::exp(0.5 * log_var(r, b)) * noise(r, b);
            }
        }
    }
    result.grads.code_head = backward(model.code_head, head.tape, head_grad, true);
    Matrix z_grad = result.grads.code_head.input;
    if (supervised) {
        result.grads.predictor = backward(model.predictor, pred.tape, og.predictions, true);
        for (std::size_t i = 0; i < z_grad.size(); ++i)
            z_grad.values()[i] += result.grads.predictor.input.values()[i];
    }
    result.grads.trunk = backward(model.trunk, trunk.tape, z_grad, false);
    return result;
}

TrainResult train(const LabeledDataset& data, const TrainConfig& config) {
    config.validate();
    data.validate();
    const bool supervised = config.mode != SupervisionMode::unsup;
    if (supervised && !data.has_labels())
        throw InvalidInput("supervision mode '" + std::string(to_string(config.mode)) +
                           "' needs a labelled dataset");
    const auto rows = data.rows_in(Split::train);
    if (rows.size() < config.batch_size)
        throw InvalidInput("training split has " + std::to_string(rows.size()) +
                           " rows, fewer than the batch size " + std::to_string(config.batch_size));

    TrainResult result;
    result.model = init_model(model_spec(config, data), config.seed, config.adam);
    ModelBundle& model = result.model;
    const std::string description = config.describe();
    model.config_digest = digest_hex(description);
    result.log.seed = config.seed;
    result.log.config_digest = model.config_digest;

    if (config.minmax_scale) {
        const MinMaxScaler scaler = fit_minmax(data.features, rows);
        model.scale_low = scaler.low;
        model.scale_high = scaler.high;
    }
    const Matrix features = prepare_features(model, data.features);
    if (config.reconstruction == ReconstructionKind::sigmoid)
        for (auto r : rows)
            for (double v : features.row(r))
                if (v < 0.0 || v > 1.0)
                    throw InvalidInput("sigmoid decoder needs features in [0, 1]; row " +
                                       std::to_string(r) + " is out of range");

    const ObjectiveSettings settings = objective_settings(config, data.multi_label);
    auto shuffle_rng = stream_rng(config.seed, 10);
    auto noise_rng = stream_rng(config.seed, 11);
    auto pair_rng = stream_rng(config.seed, 12);
    const bool bernoulli = config.latent == LatentKind::bernoulli;
    const bool needs_pairs =
        config.mode == SupervisionMode::pairwise_gt || config.mode == SupervisionMode::selfsup;

    std::vector<std::size_t> order = rows;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochRecord rec;
        rec.epoch = epoch + 1;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t count = std::min(config.batch_size, order.size() - start);
            const std::span<const std::size_t> batch_rows(order.data() + start, count);
            const Matrix x = features.gather_rows(batch_rows);
            Matrix y;
            std::vector<std::uint8_t> labelled(count, 0);
            if (supervised) {
                y = data.label_matrix(batch_rows);
                for (std::size_t i = 0; i < count; ++i) labelled[i] = data.supervised[batch_rows[i]];
            }
            const std::vector<IndexPair> pairs =
                needs_pairs ? form_pairs(count, config.pair_subsample, &pair_rng)
                            : std::vector<IndexPair>{};
            const Matrix noise = bernoulli ? draw_logistic_noise(count, config.bits, noise_rng)
                                           : draw_gaussian_noise(count, config.bits, noise_rng);

            const BatchLoss bl = batch_loss(model, x, y, labelled, pairs, noise, settings,
                                            config.straight_through);
            if (!std::isfinite(bl.terms.total))
                throw NumericalError("training loss became non-finite in epoch " +
                                     std::to_string(epoch + 1));

            adam_step(model.trunk, bl.grads.trunk, model.trunk_opt);
            adam_step(model.code_head, bl.grads.code_head, model.head_opt);
            adam_step(model.decoder, bl.grads.decoder, model.decoder_opt);
            if (supervised) adam_step(model.predictor, bl.grads.predictor, model.predictor_opt);

            rec.total += bl.terms.total;
            rec.reconstruction += bl.terms.reconstruction;
            rec.kl += bl.terms.kl;
            rec.supervised += bl.terms.supervised;
            rec.pairwise += bl.terms.pairwise;
            ++rec.batches;
            if (supervised && bl.terms.labelled_rows == 0) ++rec.batches_without_labels;
            if (needs_pairs && bl.terms.pairs_used == 0) ++rec.batches_without_pairs;
        }
        const double nb = static_cast<double>(rec.batches);
        rec.total /= nb;
        rec.reconstruction /= nb;
        rec.kl /= nb;
        rec.supervised /= nb;
        rec.pairwise /= nb;
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.log.epochs.push_back(rec);
    }

    if (config.latent == LatentKind::gaussian)
        fit_thresholds(model, data.features.gather_rows(rows));
    return result;
}

}  // namespace sshash
