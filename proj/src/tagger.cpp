#include "alner/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alner/errors.hpp"

namespace alner {

namespace {

constexpr double kLogFloor = 1e-12;

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string lowercase(const std::string& s) {
    std::string out = s;
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

// Case/digit pattern with runs compressed: "Parker" -> "Aa", "QX17" -> "A9".
std::string word_shape(const std::string& s) {
    std::string out;
    for (const char c : s) {
        char cls;
        if (c >= 'A' && c <= 'Z')
            cls = 'A';
        else if (c >= 'a' && c <= 'z')
            cls = 'a';
        else if (c >= '0' && c <= '9')
            cls = '9';
        else
            cls = '-';
        if (out.empty() || out.back() != cls) out.push_back(cls);
    }
    return out;
}

void softmax_inplace(std::span<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (double& v : z) v /= sum;
}

}  // namespace

void TaggerConfig::validate() const {
    if (hash_dimension < 2) throw ConfigError("tagger: hash dimension must be >= 2");
    if (hash_dimension > (std::size_t{1} << 30))
        throw ConfigError("tagger: hash dimension too large");
    if (!(dropout_rate >= 0.0) || dropout_rate >= 1.0)
        throw ConfigError("tagger: dropout rate must be in [0, 1)");
    if (epochs < 1) throw ConfigError("tagger: epochs must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("tagger: learning rate must be > 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("tagger: weight decay must be >= 0");
}

SparseFeatures featurize(const Sentence& sentence, std::size_t position,
                         std::size_t hash_dimension) {
    const auto& toks = sentence.tokens;
    const std::string& w = toks[position];
    const std::string lw = lowercase(w);

    SparseFeatures f;
    f.indices.reserve(14);
    auto add = [&](const std::string& s) {
        f.indices.push_back(static_cast<std::uint32_t>(fnv1a(s) % hash_dimension));
    };

    add("bias");
    add("w0=" + w);
    add("lw0=" + lw);
    for (std::size_t n = 1; n <= 3 && n <= lw.size(); ++n) {
        add("pre" + std::to_string(n) + "=" + lw.substr(0, n));
        add("suf" + std::to_string(n) + "=" + lw.substr(lw.size() - n));
    }
    add("shape=" + word_shape(w));

    const auto neighbor = [&](long long offset) -> std::string {
        const long long p = static_cast<long long>(position) + offset;
        if (p < 0) return "<s>";
        if (p >= static_cast<long long>(toks.size())) return "</s>";
        return toks[static_cast<std::size_t>(p)];
    };
    add("w[-2]=" + neighbor(-2));
    add("w[-1]=" + neighbor(-1));
    add("w[+1]=" + neighbor(+1));
    add("w[+2]=" + neighbor(+2));
    return f;
}

double softmax_ce_loss(std::span<const double> weights, std::size_t classes,
                       std::span<const TokenExample> batch, double l2) {
    if (batch.empty()) return 0.0;
    double ce = 0.0;
    std::vector<double> z(classes);
    for (const TokenExample& ex : batch) {
        std::fill(z.begin(), z.end(), 0.0);
        for (const std::uint32_t f : ex.features.indices)
            for (std::size_t c = 0; c < classes; ++c) z[c] += weights[f * classes + c];
        softmax_inplace(z);
        ce -= std::log(std::max(z[static_cast<std::size_t>(ex.label)], kLogFloor));
    }
    double ss = 0.0;
    for (const double w : weights) ss += w * w;
    return ce / static_cast<double>(batch.size()) + 0.5 * l2 * ss;
}

std::vector<double> softmax_ce_grad(std::span<const double> weights, std::size_t classes,
                                    std::span<const TokenExample> batch, double l2) {
    std::vector<double> grad(weights.size(), 0.0);
    if (batch.empty()) return grad;
    std::vector<double> z(classes);
    for (const TokenExample& ex : batch) {
        std::fill(z.begin(), z.end(), 0.0);
        for (const std::uint32_t f : ex.features.indices)
            for (std::size_t c = 0; c < classes; ++c) z[c] += weights[f * classes + c];
        softmax_inplace(z);
        z[static_cast<std::size_t>(ex.label)] -= 1.0;  // dCE/dz
        for (const std::uint32_t f : ex.features.indices)
            for (std::size_t c = 0; c < classes; ++c) grad[f * classes + c] += z[c];
    }
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad[i] * inv_n + l2 * weights[i];
    return grad;
}

TaggerModel::TaggerModel(TagSet tagset, TaggerConfig config)
    : tagset_(std::move(tagset)), config_(config) {
    config_.validate();
    const std::size_t c = tagset_.size();
    const std::size_t h = config_.hidden_units;
    if (h == 0) {
        w_in_.assign(config_.hash_dimension * c, 0.0);
    } else {
        // Glorot-style uniform init; fan-in of the hash layer is the feature
        // template size, not the hash dimension.
        Rng rng(config_.seed);
        const double r1 = std::sqrt(6.0 / static_cast<double>(14 + h));
        const double r2 = std::sqrt(6.0 / static_cast<double>(h + c));
        w_in_.resize(config_.hash_dimension * h);
        for (double& w : w_in_) w = (2.0 * rng.uniform() - 1.0) * r1;
        w_out_.resize(h * c);
        for (double& w : w_out_) w = (2.0 * rng.uniform() - 1.0) * r2;
        b_hidden_.assign(h, 0.0);
        b_out_.assign(c, 0.0);
    }
}

// One forward pass. rng == nullptr means expectation mode; otherwise inverted
// dropout is sampled from it (input features in linear mode, hidden units in
// MLP mode).
ProbMatrix TaggerModel::forward(const Sentence& sentence, double dropout_rate, Rng* rng) const {
    const std::size_t c = tagset_.size();
    const std::size_t h = config_.hidden_units;
    const std::size_t tokens = sentence.tokens.size();
    const double keep_scale = dropout_rate > 0.0 ? 1.0 / (1.0 - dropout_rate) : 1.0;

    ProbMatrix out(tokens, c);
    std::vector<double> hidden(h);
    for (std::size_t t = 0; t < tokens; ++t) {
        const SparseFeatures feats = featurize(sentence, t, config_.hash_dimension);
        std::span<double> z = out.row(t);
        if (h == 0) {
            for (const std::uint32_t f : feats.indices) {
                double val = 1.0;
                if (rng && dropout_rate > 0.0) {
                    if (rng->bernoulli(dropout_rate)) continue;
                    val = keep_scale;
                }
                for (std::size_t k = 0; k < c; ++k) z[k] += val * w_in_[f * c + k];
            }
        } else {
            std::copy(b_hidden_.begin(), b_hidden_.end(), hidden.begin());
            for (const std::uint32_t f : feats.indices)
                for (std::size_t j = 0; j < h; ++j) hidden[j] += w_in_[f * h + j];
            for (std::size_t j = 0; j < h; ++j) {
                hidden[j] = std::max(0.0, hidden[j]);
                if (rng && dropout_rate > 0.0) {
                    if (rng->bernoulli(dropout_rate))
                        hidden[j] = 0.0;
                    else
                        hidden[j] *= keep_scale;
                }
            }
            std::copy(b_out_.begin(), b_out_.end(), z.begin());
            for (std::size_t j = 0; j < h; ++j) {
                const double hv = hidden[j];
                if (hv == 0.0) continue;
                for (std::size_t k = 0; k < c; ++k) z[k] += hv * w_out_[j * c + k];
            }
        }
        softmax_inplace(z);
    }
    return out;
}

ProbMatrix TaggerModel::predict_proba(const Sentence& sentence) const {
    return forward(sentence, 0.0, nullptr);
}

std::vector<ProbMatrix> TaggerModel::predict_proba_mc(const Sentence& sentence,
                                                      std::size_t samples,
                                                      std::uint64_t seed) const {
    if (samples < 2) throw ConfigError("mc prediction: need at least 2 samples");
    std::vector<ProbMatrix> out;
    out.reserve(samples);
    for (std::size_t m = 0; m < samples; ++m) {
        Rng rng(mix_seed(seed, m));
        out.push_back(forward(sentence, config_.dropout_rate, &rng));
    }
    return out;
}

namespace {

// Training state for the sparse input matrix: W = scale * w, so L2 decay per
// batch is one multiply on `scale` instead of a pass over the whole matrix.
// sumsq tracks ||w||^2 incrementally for the objective's L2 term.
struct ScaledMatrix {
    std::vector<double>* w = nullptr;
    double scale = 1.0;
    double sumsq = 0.0;

    void init_sumsq() {
        sumsq = 0.0;
        for (const double v : *w) sumsq += v * v;
    }
    void decay(double factor) {
        scale *= factor;
        if (scale < 1e-8) materialize();
    }
    void update(std::size_t index, double delta) {
        double& v = (*w)[index];
        const double nv = v - delta / scale;
        sumsq += nv * nv - v * v;
        v = nv;
    }
    void materialize() {
        for (double& v : *w) v *= scale;
        sumsq *= scale * scale;
        scale = 1.0;
    }
    double l2() const { return scale * scale * sumsq; }
};

struct Forwarded {
    std::vector<std::pair<std::uint32_t, double>> values;  // post-dropout input
    std::vector<double> probs;
    std::vector<double> hidden;      // post-ReLU, post-dropout (MLP)
    std::vector<std::uint8_t> mask;  // hidden keep mask (MLP)
};

}  // namespace

TaggerModel train(const LabeledCorpus& labeled, const TaggerConfig& config) {
    config.validate();
    if (labeled.empty()) throw DataError("train: empty labeled corpus");

    TaggerModel model(labeled.tagset(), config);
    const std::size_t c = model.classes();
    const std::size_t h = config.hidden_units;
    const double lr = config.learning_rate;
    const double lambda = config.weight_decay;
    const double drop = config.dropout_rate;
    const double keep_scale = drop > 0.0 ? 1.0 / (1.0 - drop) : 1.0;

    // Features are position-deterministic; hash once up front.
    std::vector<SparseFeatures> features;
    std::vector<int> labels;
    features.reserve(labeled.token_count());
    labels.reserve(labeled.token_count());
    for (const auto& item : labeled.items()) {
        for (std::size_t t = 0; t < item.sentence.tokens.size(); ++t) {
            features.push_back(featurize(item.sentence, t, config.hash_dimension));
            labels.push_back(item.tags[t]);
        }
    }
    const std::size_t n = features.size();
    const std::size_t batch_size = config.batch_size == 0 ? n : std::min(config.batch_size, n);

    ScaledMatrix win{&model.w_in_};
    win.init_sumsq();

    auto objective = [&]() {
        // Expectation-mode objective at the current parameters.
        double ce = 0.0;
        std::vector<double> z(c);
        std::vector<double> hidden(h);
        for (std::size_t i = 0; i < n; ++i) {
            if (h == 0) {
                std::fill(z.begin(), z.end(), 0.0);
                for (const std::uint32_t f : features[i].indices)
                    for (std::size_t k = 0; k < c; ++k) z[k] += model.w_in_[f * c + k];
                for (std::size_t k = 0; k < c; ++k) z[k] *= win.scale;
            } else {
                std::fill(hidden.begin(), hidden.end(), 0.0);
                for (const std::uint32_t f : features[i].indices)
                    for (std::size_t j = 0; j < h; ++j) hidden[j] += model.w_in_[f * h + j];
                std::copy(model.b_out_.begin(), model.b_out_.end(), z.begin());
                for (std::size_t j = 0; j < h; ++j) {
                    const double hv = std::max(0.0, model.b_hidden_[j] + hidden[j] * win.scale);
                    if (hv == 0.0) continue;
                    for (std::size_t k = 0; k < c; ++k) z[k] += hv * model.w_out_[j * c + k];
                }
            }
            softmax_inplace(z);
            ce -= std::log(std::max(z[static_cast<std::size_t>(labels[i])], kLogFloor));
        }
        double l2 = win.l2();
        for (const double w : model.w_out_) l2 += w * w;
        return ce / static_cast<double>(n) + 0.5 * lambda * l2;
    };

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    std::vector<Forwarded> batch(batch_size);
    std::vector<double> grad_out;  // MLP: accumulated dW2
    std::vector<double> grad_b_out, grad_b_hidden;
    model.epoch_losses_.clear();
    model.epoch_losses_.reserve(config.epochs + 1);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        model.epoch_losses_.push_back(objective());
        rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t bsz = std::min(batch_size, n - start);

            // Forward the whole batch at the current parameters.
            for (std::size_t b = 0; b < bsz; ++b) {
                const std::size_t i = order[start + b];
                Forwarded& fw = batch[b];
                fw.values.clear();
                for (const std::uint32_t f : features[i].indices) {
                    if (h == 0 && drop > 0.0) {
                        if (rng.bernoulli(drop)) continue;
                        fw.values.emplace_back(f, keep_scale);
                    } else {
                        fw.values.emplace_back(f, 1.0);
                    }
                }
                fw.probs.assign(c, 0.0);
                if (h == 0) {
                    for (const auto& [f, val] : fw.values)
                        for (std::size_t k = 0; k < c; ++k)
                            fw.probs[k] += val * model.w_in_[f * c + k];
                    for (std::size_t k = 0; k < c; ++k) fw.probs[k] *= win.scale;
                } else {
                    fw.hidden.assign(h, 0.0);
                    fw.mask.assign(h, 1);
                    std::copy(model.b_hidden_.begin(), model.b_hidden_.end(), fw.hidden.begin());
                    for (const auto& [f, val] : fw.values)
                        for (std::size_t j = 0; j < h; ++j)
                            fw.hidden[j] += val * model.w_in_[f * h + j] * win.scale;
                    for (std::size_t j = 0; j < h; ++j) {
                        fw.hidden[j] = std::max(0.0, fw.hidden[j]);
                        if (drop > 0.0) {
                            if (rng.bernoulli(drop)) {
                                fw.hidden[j] = 0.0;
                                fw.mask[j] = 0;
                            } else {
                                fw.hidden[j] *= keep_scale;
                            }
                        }
                    }
                    std::copy(model.b_out_.begin(), model.b_out_.end(), fw.probs.begin());
                    for (std::size_t j = 0; j < h; ++j) {
                        const double hv = fw.hidden[j];
                        if (hv == 0.0) continue;
                        for (std::size_t k = 0; k < c; ++k)
                            fw.probs[k] += hv * model.w_out_[j * c + k];
                    }
                }
                softmax_inplace(fw.probs);
            }

            // W_{t+1} = (1 - lr*lambda) W_t - (lr / bsz) * sum dCE.
            win.decay(1.0 - lr * lambda);
            const double step = lr / static_cast<double>(bsz);
            if (h == 0) {
                for (std::size_t b = 0; b < bsz; ++b) {
                    Forwarded& fw = batch[b];
                    fw.probs[static_cast<std::size_t>(labels[order[start + b]])] -= 1.0;
                    for (const auto& [f, val] : fw.values)
                        for (std::size_t k = 0; k < c; ++k)
                            win.update(f * c + k, step * val * fw.probs[k]);
                }
            } else {
                grad_out.assign(h * c, 0.0);
                grad_b_out.assign(c, 0.0);
                grad_b_hidden.assign(h, 0.0);
                std::vector<double> dpre(h);
                for (std::size_t b = 0; b < bsz; ++b) {
                    Forwarded& fw = batch[b];
                    fw.probs[static_cast<std::size_t>(labels[order[start + b]])] -= 1.0;
                    for (std::size_t k = 0; k < c; ++k) grad_b_out[k] += fw.probs[k];
                    for (std::size_t j = 0; j < h; ++j) {
                        for (std::size_t k = 0; k < c; ++k)
                            grad_out[j * c + k] += fw.hidden[j] * fw.probs[k];
                        double dh = 0.0;
                        for (std::size_t k = 0; k < c; ++k)
                            dh += model.w_out_[j * c + k] * fw.probs[k];
                        // Back through dropout and ReLU (hidden > 0 iff active).
                        if (!fw.mask[j] || fw.hidden[j] <= 0.0) dh = 0.0;
                        dpre[j] = dh * (drop > 0.0 ? keep_scale : 1.0);
                        grad_b_hidden[j] += dpre[j];
                    }
                    for (const auto& [f, val] : fw.values)
                        for (std::size_t j = 0; j < h; ++j)
                            if (dpre[j] != 0.0) win.update(f * h + j, step * val * dpre[j]);
                }
                const double w2_decay = 1.0 - lr * lambda;
                for (std::size_t i = 0; i < model.w_out_.size(); ++i)
                    model.w_out_[i] = model.w_out_[i] * w2_decay - step * grad_out[i];
                for (std::size_t k = 0; k < c; ++k) model.b_out_[k] -= step * grad_b_out[k];
                for (std::size_t j = 0; j < h; ++j) model.b_hidden_[j] -= step * grad_b_hidden[j];
            }
        }
    }
    model.epoch_losses_.push_back(objective());
    win.materialize();
    return model;
}

}  // namespace alner
