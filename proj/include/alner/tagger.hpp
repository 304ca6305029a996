#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "alner/corpus.hpp"
#include "alner/prob_matrix.hpp"
#include "alner/rng.hpp"

namespace alner {

struct TaggerConfig {
    std::size_t hash_dimension = std::size_t{1} << 18;  // feature-hash buckets
    std::size_t hidden_units = 0;                       // 0 = linear softmax
    double dropout_rate = 0.1;
    double learning_rate = 0.1;
    double weight_decay = 5e-5;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;  // 0 = full batch
    std::uint64_t seed = 1;

    void validate() const;
};

/// Hashed binary features; repeated indices are allowed (collisions by
/// construction) and simply add.
struct SparseFeatures {
    std::vector<std::uint32_t> indices;
};

/// Deterministic feature template for one token position: surface form,
/// lowercased form, prefixes/suffixes of length 1-3, word shape, neighbor
/// tokens at offsets +-1 and +-2 (sentinels past the boundary), and a bias.
SparseFeatures featurize(const Sentence& sentence, std::size_t position,
                         std::size_t hash_dimension);

struct TokenExample {
    SparseFeatures features;
    int label = 0;
};

/// Canonical objective for the linear model over a dense weight matrix laid
/// out as weights[feature * classes + c]: mean token cross-entropy plus
/// (l2/2)*||W||^2. Training applies exactly this gradient; the functions
/// exist so tests can check it against finite differences.
double softmax_ce_loss(std::span<const double> weights, std::size_t classes,
                       std::span<const TokenExample> batch, double l2);
std::vector<double> softmax_ce_grad(std::span<const double> weights, std::size_t classes,
                                    std::span<const TokenExample> batch, double l2);

/// Probabilistic token classifier: hash features into a linear softmax or a
/// one-hidden-layer ReLU network, trained with mini-batch SGD, L2 weight
/// decay and inverted dropout. Immutable once trained; prediction may run
/// concurrently against a shared model.
class TaggerModel {
public:
    // Untrained model: linear weights are zero (uniform predictions), MLP
    // weights are seed-deterministic uniform init.
    TaggerModel(TagSet tagset, TaggerConfig config);

    const TagSet& tagset() const { return tagset_; }
    const TaggerConfig& config() const { return config_; }
    std::size_t classes() const { return tagset_.size(); }

    /// Expectation mode (dropout disabled); rows sum to 1 within 1e-6.
    ProbMatrix predict_proba(const Sentence& sentence) const;

    /// `samples` stochastic forward passes with independent dropout masks,
    /// seed-deterministic. With dropout_rate == 0 every sample equals
    /// predict_proba exactly.
    std::vector<ProbMatrix> predict_proba_mc(const Sentence& sentence, std::size_t samples,
                                             std::uint64_t seed) const;

    /// Objective value (expectation mode) at the start of each epoch plus
    /// one entry after the final epoch; length epochs + 1 after training.
    const std::vector<double>& epoch_losses() const { return epoch_losses_; }

    // Parameter access for determinism and equivalence tests.
    const std::vector<double>& input_weights() const { return w_in_; }
    const std::vector<double>& output_weights() const { return w_out_; }
    const std::vector<double>& hidden_bias() const { return b_hidden_; }
    const std::vector<double>& output_bias() const { return b_out_; }

private:
    friend TaggerModel train(const LabeledCorpus& labeled, const TaggerConfig& config);

    ProbMatrix forward(const Sentence& sentence, double dropout_rate, Rng* rng) const;

    TagSet tagset_;
    TaggerConfig config_;
    std::vector<double> w_in_;      // linear: dim x C; mlp: dim x H
    std::vector<double> w_out_;     // mlp only: H x C
    std::vector<double> b_hidden_;  // mlp only
    std::vector<double> b_out_;     // mlp only
    std::vector<double> epoch_losses_;
};

/// Trains from fresh initialization (no warm start) on token-level
/// cross-entropy. Deterministic given (data, config, seed).
TaggerModel train(const LabeledCorpus& labeled, const TaggerConfig& config);

}  // namespace alner
