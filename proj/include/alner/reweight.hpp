#pragma once

#include <span>
#include <vector>

#include "alner/acquisition.hpp"
#include "alner/corpus.hpp"

namespace alner {

/// Smoothed inverse-frequency class weights computed from the labeled pool:
/// w_k = 1 / (m_k + beta * m), where m_k is the token count of class k and
/// m the total token count. beta = 0 gives exact inverse counts; beta -> inf
/// approaches uniform weights.
struct ClassWeights {
    std::vector<double> weights;
    double beta = 0.0;
    std::vector<long long> source_counts;  // the m_k used
    long long total = 0;                   // the m used
};

ClassWeights compute_weights_from_counts(std::span<const long long> counts, long long total,
                                         double beta);

/// Recomputed from scratch on every call; weights are dynamic across AL
/// iterations by construction.
ClassWeights compute_weights(const LabeledCorpus& labeled, double beta);

/// Weighted-sum query: sentence score = sum_t w[yhat^t] q(x^t) (divided by T
/// for MNLP unless mnlp_sum is set); returns the top-B pool indices in rank
/// order. Random querying with weights is rejected.
std::vector<std::size_t> reweighted_query(std::span<const TokenScores> sentences,
                                          AcquisitionKind kind, const ClassWeights& weights,
                                          std::size_t b, bool mnlp_sum = false);

/// Model-driven form over an unlabeled pool.
std::vector<std::size_t> reweighted_query(const UnlabeledPool& pool, const TaggerModel& model,
                                          AcquisitionKind kind, const ClassWeights& weights,
                                          std::size_t b, const McOptions& mc = {},
                                          bool mnlp_sum = false);

}  // namespace alner
