#include "sshash/objective.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sshash/latent.hpp"

namespace sshash {

std::string_view to_string(ReconstructionKind k) noexcept {
    return k == ReconstructionKind::sigmoid ? "sigmoid" : "gaussian";
}

std::string_view to_string(LatentKind k) noexcept {
    return k == LatentKind::bernoulli ? "bernoulli" : "gaussian";
}

std::string_view to_string(SupervisionMode m) noexcept {
    switch (m) {
        case SupervisionMode::unsup: return "unsup";
        case SupervisionMode::pointwise: return "pointwise";
        case SupervisionMode::pairwise_gt: return "pairwise-gt";
        case SupervisionMode::selfsup: return "selfsup";
    }
    return "unsup";
}

ReconstructionKind parse_reconstruction_kind(std::string_view s) {
    if (s == "sigmoid") return ReconstructionKind::sigmoid;
    if (s == "gaussian") return ReconstructionKind::gaussian;
    throw InvalidInput("unknown reconstruction kind '" + std::string(s) + "'");
}

LatentKind parse_latent_kind(std::string_view s) {
    if (s == "bernoulli") return LatentKind::bernoulli;
    if (s == "gaussian") return LatentKind::gaussian;
    throw InvalidInput("unknown latent kind '" + std::string(s) + "'");
}

SupervisionMode parse_supervision_mode(std::string_view s) {
    if (s == "unsup") return SupervisionMode::unsup;
    if (s == "pointwise") return SupervisionMode::pointwise;
    if (s == "pairwise-gt") return SupervisionMode::pairwise_gt;
    if (s == "selfsup") return SupervisionMode::selfsup;
    throw InvalidInput("unknown supervision mode '" + std::string(s) + "'");
}

void LossWeights::validate(std::size_t bits) const {
    if (!(kl >= 0.0) || !(pointwise >= 0.0) || !(pairwise >= 0.0))
        throw InvalidInput("loss weights must be nonnegative");
    if (!(margin > 0.0) || margin > static_cast<double>(bits))
        throw InvalidInput("margin must lie in (0, " + std::to_string(bits) + "], got " +
                           std::to_string(margin));
}

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
    if (a != b)
        throw InvalidInput(std::string(what) + ": lengths " + std::to_string(a) + " and " +
                           std::to_string(b) + " differ");
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void require_one_hot(std::span<const double> y) {
    std::size_t ones = 0;
    for (double v : y) {
        if (v == 1.0)
            ++ones;
        else if (v != 0.0)
            throw InvalidInput("label vector is not one-hot (entry " + std::to_string(v) + ")");
    }
    if (ones != 1)
        throw InvalidInput("label vector is not one-hot (" + std::to_string(ones) + " ones)");
}

bool same_label(std::span<const double> y, std::span<const double> y2) {
    return std::equal(y.begin(), y.end(), y2.begin(), y2.end());
}

// Pair loss s D+ - (1 - s) D- and its partial derivatives.
struct PairTerm {
    double value;
    double d_positive;    // d/dD+
    double d_similarity;  // d/ds
};

PairTerm pair_term(double similarity, double positive, double margin) {
    const double hinge = margin - positive;
    const double negative = hinge > 0.0 ? -hinge : 0.0;
    PairTerm t;
    t.value = similarity * positive - (1.0 - similarity) * negative;
    t.d_positive = similarity - (hinge > 0.0 ? (1.0 - similarity) : 0.0);
    t.d_similarity = positive + negative;
    return t;
}

// Label similarity y^T y' (optionally of l2-normalized vectors) with gradients.
struct Similarity {
    double value = 0.0;
    std::vector<double> grad_a;
    std::vector<double> grad_b;
};

Similarity similarity(std::span<const double> a, std::span<const double> b, bool normalize,
                      bool want_grad) {
    Similarity s;
    if (!normalize) {
        s.value = dot(a, b);
        if (want_grad) {
            s.grad_a.assign(b.begin(), b.end());
            s.grad_b.assign(a.begin(), a.end());
        }
        return s;
    }
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) {
        if (want_grad) {
            s.grad_a.assign(a.size(), 0.0);
            s.grad_b.assign(b.size(), 0.0);
        }
        return s;
    }
    s.value = dot(a, b) / (na * nb);
    if (want_grad) {
        s.grad_a.resize(a.size());
        s.grad_b.resize(b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            s.grad_a[i] = (b[i] / nb - s.value * a[i] / na) / na;
            s.grad_b[i] = (a[i] / na - s.value * b[i] / nb) / nb;
        }
    }
    return s;
}

void require_shape(const Matrix* m, std::size_t rows, std::size_t cols, const char* what) {
    if (!m) throw InvalidInput(std::string("total_objective: missing ") + what);
    if (m->rows() != rows || (cols != 0 && m->cols() != cols))
        throw InvalidInput(std::string("total_objective: ") + what + " is " + shape_string(*m));
}

}  // namespace

double reconstruction_loss(std::span<const double> x, std::span<const double> xhat,
                           ReconstructionKind kind) {
    require_same_length(x.size(), xhat.size(), "reconstruction_loss");
    double loss = 0.0;
    if (kind == ReconstructionKind::gaussian) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = xhat[i] - x[i];
            loss += d * d;
        }
        return 0.5 * loss;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= 0.0 && x[i] <= 1.0))
            throw InvalidInput("reconstruction_loss: sigmoid kind needs x in [0,1], got " +
                               std::to_string(x[i]));
        const double p = clamp_probability(xhat[i]);
        loss -= x[i] * std::log(p) + (1.0 - x[i]) * std::log1p(-p);
    }
    return loss;
}

void reconstruction_grad(std::span<const double> x, std::span<const double> xhat,
                         ReconstructionKind kind, std::span<double> grad) {
    require_same_length(x.size(), xhat.size(), "reconstruction_grad");
    require_same_length(x.size(), grad.size(), "reconstruction_grad");
    if (kind == ReconstructionKind::gaussian) {
        for (std::size_t i = 0; i < x.size(); ++i) grad[i] = xhat[i] - x[i];
        return;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double p = xhat[i];
        if (p < kProbabilityFloor || p > 1.0 - kProbabilityFloor)
            grad[i] = 0.0;
        else
            grad[i] = (p - x[i]) / (p * (1.0 - p));
    }
}

double pointwise_loss(std::span<const double> y, std::span<const double> yhat, bool strict) {
    require_same_length(y.size(), yhat.size(), "pointwise_loss");
    if (strict) require_one_hot(y);
    double loss = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k)
        if (y[k] != 0.0) loss -= y[k] * std::log(clamp_probability(yhat[k]));
    return loss;
}

double multilabel_pointwise_loss(std::span<const double> y, std::span<const double> yhat) {
    return reconstruction_loss(y, yhat, ReconstructionKind::sigmoid);
}

double surrogate_hamming(std::span<const double> a, std::span<const double> b) {
    require_same_length(a.size(), b.size(), "surrogate_hamming");
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        d += diff * diff;
    }
    return d;
}

PairDistance pair_distance(std::span<const double> a, std::span<const double> b, double margin) {
    PairDistance p;
    p.positive = surrogate_hamming(a, b);
    p.negative = -std::max(margin - p.positive, 0.0);
    return p;
}

double pairwise_loss_indicator(std::span<const double> b, std::span<const double> b2,
                               std::span<const double> y, std::span<const double> y2,
                               double margin) {
    require_same_length(y.size(), y2.size(), "pairwise_loss_indicator");
    const PairDistance d = pair_distance(b, b2, margin);
    return same_label(y, y2) ? d.positive : -d.negative;
}

double pairwise_loss_matrix(std::span<const double> b, std::span<const double> b2,
                            std::span<const double> y, std::span<const double> y2, double margin) {
    require_same_length(y.size(), y2.size(), "pairwise_loss_matrix");
    const PairDistance d = pair_distance(b, b2, margin);
    const double s = dot(y, y2);
    return s * d.positive - (1.0 - s) * d.negative;
}

double selfsup_loss(std::span<const double> b, std::span<const double> b2,
                    std::span<const double> yhat, std::span<const double> yhat2, double margin) {
    return pairwise_loss_matrix(b, b2, yhat, yhat2, margin);
}

double selfsup_loss_reordered(std::span<const double> b, std::span<const double> b2,
                              std::span<const double> yhat, std::span<const double> yhat2,
                              double margin) {
    require_same_length(yhat.size(), yhat2.size(), "selfsup_loss_reordered");
    const PairDistance d = pair_distance(b, b2, margin);
    return (d.positive + d.negative) * dot(yhat, yhat2) - d.negative;
}

ObjectiveTerms total_objective(const BatchOutputs& batch, const ObjectiveSettings& settings,
                               ObjectiveGrads* grads) {
    require_shape(batch.features, batch.features ? batch.features->rows() : 0, 0, "features");
    const std::size_t m = batch.features->rows();
    const std::size_t d = batch.features->cols();
    if (m == 0) throw InvalidInput("total_objective: empty batch");
    require_shape(batch.reconstruction, m, d, "reconstruction");
    require_shape(batch.codes, m, 0, "codes");
    const std::size_t bits = batch.codes->cols();
    const bool bernoulli = settings.latent == LatentKind::bernoulli;
    if (bernoulli) {
        require_shape(batch.alpha, m, bits, "alpha");
    } else {
        require_shape(batch.mean, m, bits, "mean");
        require_shape(batch.log_variance, m, bits, "log_variance");
    }
    const bool uses_sup = settings.mode != SupervisionMode::unsup;
    const bool uses_gt_pairs = settings.mode == SupervisionMode::pairwise_gt;
    const bool uses_self_pairs = settings.mode == SupervisionMode::selfsup;
    if (uses_sup) {
        require_shape(batch.predictions, m, 0, "predictions");
        require_shape(batch.labels, m, batch.predictions->cols(), "labels");
        if (batch.labelled.size() != m)
            throw InvalidInput("total_objective: labelled mask has " +
                               std::to_string(batch.labelled.size()) + " entries for " +
                               std::to_string(m) + " rows");
    }
    const auto& w = settings.weights;
    const double inv_m = 1.0 / static_cast<double>(m);

    if (grads) {
        grads->reconstruction = Matrix(m, d);
        grads->codes = Matrix(m, bits);
        grads->alpha = bernoulli ? Matrix(m, bits) : Matrix();
        grads->mean = bernoulli ? Matrix() : Matrix(m, bits);
        grads->log_variance = bernoulli ? Matrix() : Matrix(m, bits);
        grads->predictions = uses_sup ? Matrix(m, batch.predictions->cols()) : Matrix();
    }

    ObjectiveTerms t;

    // Unsupervised part: reconstruction + lambda * KL, averaged over rows.
    for (std::size_t r = 0; r < m; ++r) {
        const auto x = batch.features->row(r);
        const auto xhat = batch.reconstruction->row(r);
        t.reconstruction += reconstruction_loss(x, xhat, settings.reconstruction);
        if (bernoulli) {
            const auto a = batch.alpha->row(r);
            t.kl += kl_bernoulli_balanced(a);
        } else {
            const auto mu = batch.mean->row(r);
            const auto lv = batch.log_variance->row(r);
            for (std::size_t i = 0; i < bits; ++i)
                t.kl += 0.5 * (std::exp(lv[i]) + mu[i] * mu[i] - 1.0 - lv[i]);
        }
        if (grads) {
            auto g = grads->reconstruction.row(r);
            reconstruction_grad(x, xhat, settings.reconstruction, g);
            for (double& v : g) v *= inv_m;
            if (bernoulli) {
                const auto kg = kl_bernoulli_balanced_grad(batch.alpha->row(r));
                auto ga = grads->alpha.row(r);
                for (std::size_t i = 0; i < bits; ++i) ga[i] = w.kl * inv_m * kg[i];
            } else {
                const auto mu = batch.mean->row(r);
                const auto lv = batch.log_variance->row(r);
                auto gm = grads->mean.row(r);
                auto gl = grads->log_variance.row(r);
                for (std::size_t i = 0; i < bits; ++i) {
                    gm[i] = w.kl * inv_m * mu[i];
                    gl[i] = w.kl * inv_m * 0.5 * (std::exp(lv[i]) - 1.0);
                }
            }
        }
    }
    t.reconstruction *= inv_m;
    t.kl *= inv_m;
    t.total = t.reconstruction + w.kl * t.kl;

    if (!uses_sup) return t;

    // Pointwise cross-entropy over labelled rows only.
    for (std::size_t r = 0; r < m; ++r) t.labelled_rows += batch.labelled[r] ? 1 : 0;
    if (t.labelled_rows > 0) {
        const double inv_l = 1.0 / static_cast<double>(t.labelled_rows);
        for (std::size_t r = 0; r < m; ++r) {
            if (!batch.labelled[r]) continue;
            const auto y = batch.labels->row(r);
            const auto yhat = batch.predictions->row(r);
            if (settings.multi_label)
                t.supervised += multilabel_pointwise_loss(y, yhat);
            else
                t.supervised += pointwise_loss(y, yhat, true);
            if (grads) {
                auto g = grads->predictions.row(r);
                if (settings.multi_label) {
                    std::vector<double> tmp(y.size());
                    reconstruction_grad(y, yhat, ReconstructionKind::sigmoid, tmp);
                    for (std::size_t k = 0; k < y.size(); ++k) g[k] += w.pointwise * inv_l * tmp[k];
                } else {
                    for (std::size_t k = 0; k < y.size(); ++k) {
                        if (y[k] == 0.0) continue;
                        const double p = yhat[k];
                        if (p >= kProbabilityFloor && p <= 1.0 - kProbabilityFloor)
                            g[k] -= w.pointwise * inv_l * y[k] / p;
                    }
                }
            }
        }
        t.supervised *= inv_l;
        t.total += w.pointwise * t.supervised;
    }

    if (!uses_gt_pairs && !uses_self_pairs) return t;

    // Pair term: ground-truth similarity over labelled pairs, or predicted
    // similarity over every pair.
    const Matrix& label_source = uses_gt_pairs ? *batch.labels : *batch.predictions;
    for (const auto& p : batch.pairs) {
        if (p.first >= m || p.second >= m)
            throw InvalidInput("total_objective: pair index out of range");
        if (uses_gt_pairs && !(batch.labelled[p.first] && batch.labelled[p.second])) continue;
        ++t.pairs_used;
    }
    if (t.pairs_used == 0) return t;
    const double inv_p = 1.0 / static_cast<double>(t.pairs_used);
    const double scale = w.pairwise * inv_p;
    for (const auto& p : batch.pairs) {
        if (uses_gt_pairs && !(batch.labelled[p.first] && batch.labelled[p.second])) continue;
        const auto b1 = batch.codes->row(p.first);
        const auto b2 = batch.codes->row(p.second);
        const double positive = surrogate_hamming(b1, b2);
        const bool want_sim_grad = grads != nullptr && uses_self_pairs;
        const Similarity s = similarity(label_source.row(p.first), label_source.row(p.second),
                                        settings.multi_label, want_sim_grad);
        const PairTerm term = pair_term(s.value, positive, w.margin);
        t.pairwise += term.value;
        if (!grads) continue;
        auto g1 = grads->codes.row(p.first);
        auto g2 = grads->codes.row(p.second);
        const double coef = scale * term.d_positive * 2.0;
        for (std::size_t i = 0; i < bits; ++i) {
            const double diff = coef * (b1[i] - b2[i]);
            g1[i] += diff;
            g2[i] -= diff;
        }
        if (want_sim_grad) {
            auto h1 = grads->predictions.row(p.first);
            auto h2 = grads->predictions.row(p.second);
            const double c = scale * term.d_similarity;
            for (std::size_t k = 0; k < h1.size(); ++k) {
                h1[k] += c * s.grad_a[k];
                h2[k] += c * s.grad_b[k];
            }
        }
    }
    t.pairwise *= inv_p;
    t.total += w.pairwise * t.pairwise;
    return t;
}

}  // namespace sshash
