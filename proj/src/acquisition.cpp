#include "alner/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "alner/errors.hpp"
#include "alner/rng.hpp"

namespace alner {

namespace {

constexpr double kLogFloor = 1e-12;

double entropy(std::span<const double> p) {
    double h = 0.0;
    for (const double v : p)
        if (v > 0.0) h -= v * std::log(std::max(v, kLogFloor));
    return h;
}

}  // namespace

AcquisitionKind acquisition_from_string(const std::string& name) {
    if (name == "random") return AcquisitionKind::Random;
    if (name == "lc") return AcquisitionKind::LC;
    if (name == "se") return AcquisitionKind::SE;
    if (name == "mnlp") return AcquisitionKind::MNLP;
    if (name == "bald") return AcquisitionKind::BALD;
    throw ConfigError("unknown acquisition '" + name + "' (random|lc|se|mnlp|bald)");
}

std::string to_string(AcquisitionKind kind) {
    switch (kind) {
        case AcquisitionKind::Random: return "random";
        case AcquisitionKind::LC: return "lc";
        case AcquisitionKind::SE: return "se";
        case AcquisitionKind::MNLP: return "mnlp";
        case AcquisitionKind::BALD: return "bald";
    }
    return "?";
}

bool needs_mc_samples(AcquisitionKind kind) { return kind == AcquisitionKind::BALD; }
bool length_normalized(AcquisitionKind kind) { return kind == AcquisitionKind::MNLP; }

TokenScores score_lc(const ProbMatrix& probs) {
    TokenScores ts;
    ts.scores.reserve(probs.tokens());
    ts.pseudo_labels.reserve(probs.tokens());
    for (std::size_t t = 0; t < probs.tokens(); ++t) {
        const int best = argmax_row(probs.row(t));
        ts.pseudo_labels.push_back(best);
        ts.scores.push_back(1.0 - probs.at(t, static_cast<std::size_t>(best)));
    }
    return ts;
}

TokenScores score_se(const ProbMatrix& probs) {
    TokenScores ts;
    ts.scores.reserve(probs.tokens());
    ts.pseudo_labels.reserve(probs.tokens());
    for (std::size_t t = 0; t < probs.tokens(); ++t) {
        ts.pseudo_labels.push_back(argmax_row(probs.row(t)));
        ts.scores.push_back(entropy(probs.row(t)));
    }
    return ts;
}

TokenScores score_mnlp(const ProbMatrix& probs) {
    TokenScores ts;
    ts.scores.reserve(probs.tokens());
    ts.pseudo_labels.reserve(probs.tokens());
    for (std::size_t t = 0; t < probs.tokens(); ++t) {
        const int best = argmax_row(probs.row(t));
        ts.pseudo_labels.push_back(best);
        ts.scores.push_back(
            -std::log(std::max(probs.at(t, static_cast<std::size_t>(best)), kLogFloor)));
    }
    return ts;
}

double mnlp_raw(const ProbMatrix& probs) {
    const TokenScores ts = score_mnlp(probs);
    return -aggregate(ts, {}, true);
}

TokenScores score_bald(std::span<const ProbMatrix> mc_samples) {
    if (mc_samples.size() < 2) throw ConfigError("bald: need at least 2 MC samples");
    const std::size_t tokens = mc_samples[0].tokens();
    const std::size_t classes = mc_samples[0].classes();
    for (const ProbMatrix& m : mc_samples)
        if (m.tokens() != tokens || m.classes() != classes)
            throw ConfigError("bald: MC sample shape mismatch");

    TokenScores ts;
    ts.scores.reserve(tokens);
    ts.pseudo_labels.reserve(tokens);
    std::vector<double> mean(classes);
    const double inv_m = 1.0 / static_cast<double>(mc_samples.size());
    for (std::size_t t = 0; t < tokens; ++t) {
        std::fill(mean.begin(), mean.end(), 0.0);
        double mean_entropy = 0.0;
        for (const ProbMatrix& m : mc_samples) {
            for (std::size_t c = 0; c < classes; ++c) mean[c] += m.at(t, c);
            mean_entropy += entropy(m.row(t));
        }
        for (double& v : mean) v *= inv_m;
        mean_entropy *= inv_m;
        ts.scores.push_back(entropy(mean) - mean_entropy);
        ts.pseudo_labels.push_back(argmax_row(mean));
    }
    return ts;
}

std::vector<double> score_random(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> scores(count);
    for (double& s : scores) s = rng.uniform();
    return scores;
}

double aggregate(const TokenScores& token_scores, std::span<const double> class_weights,
                 bool length_normalize) {
    const std::size_t n = token_scores.scores.size();
    if (n == 0) return 0.0;
    double sum = 0.0;
    if (class_weights.empty()) {
        for (const double s : token_scores.scores) sum += s;
    } else {
        if (token_scores.pseudo_labels.size() != n)
            throw ConfigError("aggregate: weighted scoring requires pseudo-labels");
        for (std::size_t t = 0; t < n; ++t) {
            const int label = token_scores.pseudo_labels[t];
            if (label < 0 || static_cast<std::size_t>(label) >= class_weights.size())
                throw ConfigError("aggregate: pseudo-label outside the weight vector");
            sum += class_weights[static_cast<std::size_t>(label)] * token_scores.scores[t];
        }
    }
    return length_normalize ? sum / static_cast<double>(n) : sum;
}

std::vector<std::size_t> select_top_b(std::span<const double> scores, std::size_t b) {
    if (b > scores.size())
        throw ConfigError("select: B = " + std::to_string(b) + " exceeds pool size " +
                          std::to_string(scores.size()));
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return scores[a] > scores[c]; });
    order.resize(b);
    return order;
}

std::vector<TokenScores> score_pool(std::span<const Sentence> sentences, const TaggerModel& model,
                                    AcquisitionKind kind, const McOptions& mc) {
    if (kind == AcquisitionKind::Random)
        throw ConfigError("score_pool: random querying has no token scores");
    std::vector<TokenScores> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        const Sentence& s = sentences[i];
        switch (kind) {
            case AcquisitionKind::LC: out.push_back(score_lc(model.predict_proba(s))); break;
            case AcquisitionKind::SE: out.push_back(score_se(model.predict_proba(s))); break;
            case AcquisitionKind::MNLP: out.push_back(score_mnlp(model.predict_proba(s))); break;
            case AcquisitionKind::BALD: {
                const auto samples = model.predict_proba_mc(s, mc.samples, mix_seed(mc.seed, i));
                out.push_back(score_bald(samples));
                break;
            }
            case AcquisitionKind::Random: break;
        }
    }
    return out;
}

}  // namespace alner
