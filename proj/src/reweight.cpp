#include "alner/reweight.hpp"

#include "alner/errors.hpp"

namespace alner {

ClassWeights compute_weights_from_counts(std::span<const long long> counts, long long total,
                                         double beta) {
    if (!(beta >= 0.0)) throw ConfigError("weights: beta must be >= 0");
    if (total <= 0) throw ConfigError("weights: empty labeled pool");
    ClassWeights cw;
    cw.beta = beta;
    cw.total = total;
    cw.source_counts.assign(counts.begin(), counts.end());
    cw.weights.reserve(counts.size());
    for (const long long m_k : counts) {
        if (m_k < 0) throw ConfigError("weights: negative class count");
        if (beta == 0.0 && m_k == 0)
            throw ConfigError("weights: unsmoothed weights undefined for absent class");
        cw.weights.push_back(1.0 / (static_cast<double>(m_k) + beta * static_cast<double>(total)));
    }
    return cw;
}

ClassWeights compute_weights(const LabeledCorpus& labeled, double beta) {
    const ClassCounts counts = class_counts(labeled);
    return compute_weights_from_counts(counts.per_class, counts.total, beta);
}

std::vector<std::size_t> reweighted_query(std::span<const TokenScores> sentences,
                                          AcquisitionKind kind, const ClassWeights& weights,
                                          std::size_t b, bool mnlp_sum) {
    if (kind == AcquisitionKind::Random)
        throw ConfigError("reweighting random querying is meaningless; rejected");
    const bool normalize = length_normalized(kind) && !mnlp_sum;
    std::vector<double> scores;
    scores.reserve(sentences.size());
    for (const TokenScores& ts : sentences)
        scores.push_back(aggregate(ts, weights.weights, normalize));
    return select_top_b(scores, b);
}

std::vector<std::size_t> reweighted_query(const UnlabeledPool& pool, const TaggerModel& model,
                                          AcquisitionKind kind, const ClassWeights& weights,
                                          std::size_t b, const McOptions& mc, bool mnlp_sum) {
    if (weights.weights.size() != model.classes())
        throw ConfigError("reweighting: weight dimension does not match the tagset");
    const std::vector<TokenScores> scored = score_pool(pool.sentences(), model, kind, mc);
    return reweighted_query(scored, kind, weights, b, mnlp_sum);
}

}  // namespace alner
