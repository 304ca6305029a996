#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "alner/prob_matrix.hpp"
#include "alner/tagger.hpp"

namespace alner {

enum class AcquisitionKind { Random, LC, SE, MNLP, BALD };

AcquisitionKind acquisition_from_string(const std::string& name);
std::string to_string(AcquisitionKind kind);

bool needs_mc_samples(AcquisitionKind kind);    // BALD
bool length_normalized(AcquisitionKind kind);   // MNLP

/// Per-token scores q(x^t) plus pseudo-labels, oriented so that larger =
/// more informative for every scorer.
struct TokenScores {
    std::vector<double> scores;
    std::vector<int> pseudo_labels;
};

/// Least Confidence: 1 - p(yhat | x^t).
TokenScores score_lc(const ProbMatrix& probs);

/// Sequence Entropy per token: -sum_c p log p (natural log, 0 log 0 := 0).
TokenScores score_se(const ProbMatrix& probs);

/// MNLP token term: -log p(yhat | x^t); the sentence score divides by T
/// (see aggregate), so larger = more uncertain.
TokenScores score_mnlp(const ProbMatrix& probs);

/// The conventional signed value (1/T) sum_t log p(yhat | x^t).
double mnlp_raw(const ProbMatrix& probs);

/// BALD per token: entropy of the mean MC distribution minus the mean
/// entropy. Pseudo-label = argmax of the mean distribution.
TokenScores score_bald(std::span<const ProbMatrix> mc_samples);

/// i.i.d. uniform sentence scores; induces a uniform-random top-B.
std::vector<double> score_random(std::size_t count, std::uint64_t seed);

/// Sentence score: sum_t q(x^t), or sum_t w[yhat^t] q(x^t) when class
/// weights are supplied (empty span = unweighted). length_normalize divides
/// by T (MNLP's convention, kept in the weighted variant as well).
double aggregate(const TokenScores& token_scores, std::span<const double> class_weights = {},
                 bool length_normalize = false);

/// Indices of the B largest scores, ties broken by earliest position;
/// returned in rank order.
std::vector<std::size_t> select_top_b(std::span<const double> scores, std::size_t b);

struct McOptions {
    std::size_t samples = 10;
    std::uint64_t seed = 0;
};

/// Token scores for every pool sentence under the given base acquisition.
/// Takes bare sentences: gold tags are not reachable from this path.
std::vector<TokenScores> score_pool(std::span<const Sentence> sentences, const TaggerModel& model,
                                    AcquisitionKind kind, const McOptions& mc = {});

}  // namespace alner
