#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alner/corpus.hpp"

namespace alner {

/// Deterministic imbalanced BIO corpus for desk-scale experiments: entity
/// span frequency is skewed across types (the last type is rare), the rare
/// type carries a distinctive caps+digit surface shape, and ~o_fraction of
/// tokens are O. Sentence-initial O tokens are usually capitalized so shape
/// alone does not give entities away.
struct SynthConfig {
    std::size_t sentences = 2000;
    std::vector<std::string> entity_types = {"PER", "LOC", "RAR"};
    std::vector<double> type_weights = {0.70, 0.22, 0.08};
    double o_fraction = 0.85;
    std::size_t min_length = 6;
    std::size_t max_length = 14;
    std::uint64_t seed = 1;

    void validate() const;
};

LabeledCorpus synth_corpus(const SynthConfig& config);

}  // namespace alner
