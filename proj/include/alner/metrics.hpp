#pragma once

#include <span>
#include <vector>

#include "alner/corpus.hpp"

namespace alner {

struct SpanF1Result {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t gold_spans = 0;
    std::size_t predicted_spans = 0;
    std::size_t matched = 0;
    bool no_spans = false;  // neither gold nor prediction contain any span
};

/// Micro-averaged span F1 with conlleval matching: a predicted span counts
/// only when type and both boundaries equal a gold span. An I-T tag with no
/// open T span starts a new span (conlleval's start-of-chunk rule). Zero
/// denominators yield precision/recall/F1 of 0.
SpanF1Result span_f1(const std::vector<std::vector<int>>& predictions,
                     const std::vector<std::vector<int>>& gold, const TagSet& tagset);

struct Span {
    int type = 0;
    std::size_t begin = 0;
    std::size_t end = 0;  // inclusive
    auto operator<=>(const Span&) const = default;
};

std::vector<Span> extract_spans(std::span<const int> tags, const TagSet& tagset);

/// gamma = (1/C) * sum_c N_c / N_min. Throws when any count is zero.
double imbalance_ratio(std::span<const long long> counts);

struct GammaResult {
    double gamma = 0.0;
    bool clamped = false;  // some class had zero count; N_min clamped to 1
};

/// Variant for early labeled pools that may lack rare classes entirely:
/// zero-count classes contribute 0 to the sum and N_min is clamped to 1,
/// with the clamping recorded so curves stay plottable from iteration 0.
GammaResult imbalance_ratio_clamped(std::span<const long long> counts);

/// Two-sided 95% Student-t quantile, t_{0.975,df}. Tabulated for df <= 30,
/// Cornish-Fisher expansion beyond.
double t_quantile_975(std::size_t df);

struct MeanCi {
    double mean = 0.0;
    double ci_half_width = 0.0;  // t_{0.975,n-1} * s / sqrt(n); 0 when n < 2
};

MeanCi mean_ci95(std::span<const double> values);

}  // namespace alner
