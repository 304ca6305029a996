#include "alner/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "alner/errors.hpp"

namespace alner {

std::vector<Span> extract_spans(std::span<const int> tags, const TagSet& tagset) {
    std::vector<Span> spans;
    int open_type = -1;
    std::size_t open_begin = 0;
    auto close = [&](std::size_t end_exclusive) {
        if (open_type >= 0) spans.push_back(Span{open_type, open_begin, end_exclusive - 1});
        open_type = -1;
    };
    for (std::size_t t = 0; t < tags.size(); ++t) {
        const int tag = tags[t];
        if (tagset.is_o(tag)) {
            close(t);
        } else if (tagset.is_b(tag)) {
            close(t);
            open_type = tagset.entity_type_of(tag);
            open_begin = t;
        } else {  // I-T: continues an open T span, otherwise starts one
            const int type = tagset.entity_type_of(tag);
            if (open_type != type) {
                close(t);
                open_type = type;
                open_begin = t;
            }
        }
    }
    close(tags.size());
    return spans;
}

SpanF1Result span_f1(const std::vector<std::vector<int>>& predictions,
                     const std::vector<std::vector<int>>& gold, const TagSet& tagset) {
    if (predictions.size() != gold.size())
        throw DataError("span_f1: sentence count mismatch");

    SpanF1Result r;
    for (std::size_t s = 0; s < predictions.size(); ++s) {
        if (predictions[s].size() != gold[s].size())
            throw DataError("span_f1: sentence " + std::to_string(s) + ": length mismatch");
        const std::vector<Span> pred = extract_spans(predictions[s], tagset);
        const std::vector<Span> gd = extract_spans(gold[s], tagset);
        r.predicted_spans += pred.size();
        r.gold_spans += gd.size();
        std::set<Span> gold_set(gd.begin(), gd.end());
        for (const Span& sp : pred) r.matched += gold_set.count(sp);
    }

    r.precision = r.predicted_spans == 0
                      ? 0.0
                      : static_cast<double>(r.matched) / static_cast<double>(r.predicted_spans);
    r.recall = r.gold_spans == 0
                   ? 0.0
                   : static_cast<double>(r.matched) / static_cast<double>(r.gold_spans);
    r.no_spans = r.predicted_spans == 0 && r.gold_spans == 0;
    const double denom = static_cast<double>(r.predicted_spans + r.gold_spans);
    r.f1 = denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(r.matched) / denom;
    return r;
}

double imbalance_ratio(std::span<const long long> counts) {
    if (counts.empty()) throw ConfigError("imbalance ratio: no classes");
    long long n_min = counts[0];
    for (const long long c : counts) {
        if (c == 0) throw ConfigError("imbalance ratio undefined: class with zero count");
        if (c < 0) throw ConfigError("imbalance ratio: negative count");
        n_min = std::min(n_min, c);
    }
    double sum = 0.0;
    for (const long long c : counts) sum += static_cast<double>(c) / static_cast<double>(n_min);
    return sum / static_cast<double>(counts.size());
}

GammaResult imbalance_ratio_clamped(std::span<const long long> counts) {
    if (counts.empty()) throw ConfigError("imbalance ratio: no classes");
    GammaResult r;
    long long n_min = -1;
    for (const long long c : counts) {
        if (c < 0) throw ConfigError("imbalance ratio: negative count");
        if (c == 0) {
            r.clamped = true;
            continue;
        }
        n_min = n_min < 0 ? c : std::min(n_min, c);
    }
    if (n_min < 1) n_min = 1;  // every class absent
    double sum = 0.0;
    for (const long long c : counts) sum += static_cast<double>(c) / static_cast<double>(n_min);
    r.gamma = sum / static_cast<double>(counts.size());
    return r;
}

double t_quantile_975(std::size_t df) {
    static const double table[] = {
        12.7062047364, 4.3026527297, 3.1824463053, 2.7764451052, 2.5705818356,
        2.4469118511,  2.3646242510, 2.3060041352, 2.2621571628, 2.2281388520,
        2.2009851601,  2.1788128297, 2.1603686565, 2.1447866879, 2.1314495456,
        2.1199052992,  2.1098155778, 2.1009220402, 2.0930240544, 2.0859634473,
        2.0796138447,  2.0738730679, 2.0686576104, 2.0638985616, 2.0595385528,
        2.0555294386,  2.0518305165, 2.0484071418, 2.0452296421, 2.0422724563};
    if (df == 0) throw ConfigError("t quantile: zero degrees of freedom");
    if (df <= 30) return table[df - 1];
    const double z = 1.9599639845400545;
    const double z3 = z * z * z;
    const double z5 = z3 * z * z;
    const double v = static_cast<double>(df);
    return z + (z3 + z) / (4.0 * v) + (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v);
}

MeanCi mean_ci95(std::span<const double> values) {
    MeanCi r;
    const std::size_t n = values.size();
    if (n == 0) return r;
    double sum = 0.0;
    for (const double v : values) sum += v;
    r.mean = sum / static_cast<double>(n);
    if (n < 2) return r;
    double ss = 0.0;
    for (const double v : values) ss += (v - r.mean) * (v - r.mean);
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    r.ci_half_width = t_quantile_975(n - 1) * s / std::sqrt(static_cast<double>(n));
    return r;
}

}  // namespace alner
