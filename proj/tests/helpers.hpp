#pragma once

#include <string>
#include <utility>
#include <vector>

#include "alner/corpus.hpp"
#include "alner/tagger.hpp"

namespace alner::testing {

// Corpus from (tokens, tag names) pairs; tagset taken from `classes`.
inline LabeledCorpus make_corpus(const std::vector<std::string>& classes,
                                 const std::vector<std::pair<std::vector<std::string>,
                                                             std::vector<std::string>>>& data) {
    TagSet ts = TagSet::from_classes(classes);
    std::vector<LabeledSentence> items;
    for (std::size_t i = 0; i < data.size(); ++i) {
        LabeledSentence s;
        s.sentence.tokens = data[i].first;
        s.sentence.id = i;
        for (const auto& tag : data[i].second) s.tags.push_back(ts.index_of(tag));
        items.push_back(std::move(s));
    }
    return LabeledCorpus(std::move(ts), std::move(items));
}

// Small, fast tagger for unit tests.
inline TaggerConfig tiny_tagger() {
    TaggerConfig c;
    c.hash_dimension = 1u << 12;
    c.epochs = 12;
    c.dropout_rate = 0.0;
    c.batch_size = 8;
    c.seed = 3;
    return c;
}

}  // namespace alner::testing
