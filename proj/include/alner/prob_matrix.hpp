#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "alner/corpus.hpp"

namespace alner {

/// T x C row-stochastic matrix of per-token class probabilities.
class ProbMatrix {
public:
    ProbMatrix() = default;
    ProbMatrix(std::size_t tokens, std::size_t classes)
        : tokens_(tokens), classes_(classes), data_(tokens * classes, 0.0) {}

    std::size_t tokens() const { return tokens_; }
    std::size_t classes() const { return classes_; }

    double& at(std::size_t t, std::size_t c) { return data_[t * classes_ + c]; }
    double at(std::size_t t, std::size_t c) const { return data_[t * classes_ + c]; }
    std::span<const double> row(std::size_t t) const {
        return {data_.data() + t * classes_, classes_};
    }
    std::span<double> row(std::size_t t) { return {data_.data() + t * classes_, classes_}; }

    bool row_stochastic(double tolerance) const;

    bool operator==(const ProbMatrix&) const = default;

private:
    std::size_t tokens_ = 0;
    std::size_t classes_ = 0;
    std::vector<double> data_;
};

/// Argmax with ties broken by lowest class index.
int argmax_row(std::span<const double> row);

/// Interchange format for externally computed probabilities:
///   #classes: c1,c2,...,cC
///   one line of C space-separated decimals per token, blank line between
///   sentences. Lets transformer outputs drive the same acquisition pipeline.
void export_probs(std::span<const ProbMatrix> matrices, const TagSet& tagset, std::ostream& out);

/// Validates the header against the tagset and each row's stochasticity
/// (tolerance 1e-4). Rows off by more than producer tolerance (1e-6) are
/// renormalized so in-tolerance round-trips stay bit-faithful.
std::vector<ProbMatrix> import_probs(std::istream& in, const TagSet& tagset);

}  // namespace alner
