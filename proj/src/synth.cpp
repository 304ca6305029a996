#include "alner/synth.hpp"

#include <cmath>

#include "alner/errors.hpp"
#include "alner/rng.hpp"

namespace alner {

namespace {

const char* kFunctionWords[] = {"the", "of",  "and", "to",   "in",   "a",    "is",
                                "was", "for", "on",  "with", "as",   "by",   "at",
                                "from", "that", "it", "were", "has",  "had"};
constexpr std::size_t kFunctionWordCount = sizeof(kFunctionWords) / sizeof(kFunctionWords[0]);

// Pronounceable word from an integer, unique per id.
std::string syllable_word(std::uint64_t id) {
    static const char consonants[] = "bcdfglmnprstv";
    static const char vowels[] = "aeiou";
    std::string w;
    std::uint64_t v = id;
    do {
        w.push_back(consonants[v % 13]);
        v /= 13;
        w.push_back(vowels[v % 5]);
        v /= 5;
    } while (v > 0);
    return w;
}

std::string capitalize(std::string w) {
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
    return w;
}

// Zipf-ish rank: frequent heads, long tail.
std::size_t zipf_rank(Rng& rng, std::size_t size) {
    const double u = rng.uniform();
    const double skew = u * u * u;  // cube pushes mass toward low ranks
    return std::min(size - 1, static_cast<std::size_t>(skew * static_cast<double>(size)));
}

}  // namespace

void SynthConfig::validate() const {
    if (sentences < 1) throw ConfigError("synth: need at least 1 sentence");
    if (entity_types.empty()) throw ConfigError("synth: need at least 1 entity type");
    if (entity_types.size() != type_weights.size())
        throw ConfigError("synth: entity types and type weights differ in length");
    double sum = 0.0;
    for (const double w : type_weights) {
        if (!(w > 0.0)) throw ConfigError("synth: type weights must be > 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw ConfigError("synth: type weights must sum to 1");
    if (!(o_fraction > 0.0) || !(o_fraction < 1.0))
        throw ConfigError("synth: O fraction must be in (0, 1)");
    if (min_length < 1 || max_length < min_length) throw ConfigError("synth: bad length range");
}

LabeledCorpus synth_corpus(const SynthConfig& config) {
    config.validate();
    Rng rng(config.seed);

    const std::size_t n_types = config.entity_types.size();
    const std::size_t rare_type = n_types - 1;
    const TagSet tagset = TagSet::for_entity_types(config.entity_types);

    // Per-type vocabularies, disjoint by id range. The rare type gets a
    // caps+digit surface so its shape is recognizable from one example.
    std::vector<std::vector<std::string>> entity_vocab(n_types);
    for (std::size_t ty = 0; ty < n_types; ++ty) {
        const std::size_t size = ty == rare_type ? 48 : (ty == 0 ? 240 : 140);
        entity_vocab[ty].reserve(size);
        for (std::size_t i = 0; i < size; ++i) {
            if (ty == rare_type) {
                const char letter = static_cast<char>('K' + (i % 8));
                entity_vocab[ty].push_back(std::string(1, letter) + std::to_string(10 + i));
            } else {
                entity_vocab[ty].push_back(capitalize(syllable_word(1000 * ty + 7 + i)));
            }
        }
    }
    std::vector<std::string> o_vocab;
    o_vocab.reserve(600);
    for (std::size_t i = 0; i < 600; ++i) o_vocab.push_back(syllable_word(50000 + i));

    // Span-length distribution 1/2/3 with mean 1.85; the span start rate p
    // follows from the requested O fraction.
    const double mean_span = 1.85;
    const double e = 1.0 - config.o_fraction;
    const double p_span = e / (mean_span * (1.0 - e) + e);

    auto draw_span_length = [&](std::size_t room) {
        const double u = rng.uniform();
        const std::size_t len = u < 0.35 ? 1 : (u < 0.80 ? 2 : 3);
        return std::min(len, room);
    };
    auto draw_type = [&]() {
        const double u = rng.uniform();
        double acc = 0.0;
        for (std::size_t ty = 0; ty < n_types; ++ty) {
            acc += config.type_weights[ty];
            if (u < acc) return ty;
        }
        return n_types - 1;
    };
    auto draw_o_token = [&](bool sentence_initial) {
        std::string w = rng.uniform() < 0.4
                            ? std::string(kFunctionWords[rng.bounded(kFunctionWordCount)])
                            : o_vocab[zipf_rank(rng, o_vocab.size())];
        if (sentence_initial && rng.uniform() < 0.9) w = capitalize(std::move(w));
        return w;
    };

    std::vector<LabeledSentence> items;
    items.reserve(config.sentences);
    for (std::size_t s = 0; s < config.sentences; ++s) {
        const std::size_t length =
            config.min_length + rng.bounded(config.max_length - config.min_length + 1);
        LabeledSentence item;
        item.sentence.id = s;
        item.sentence.tokens.reserve(length);
        item.tags.reserve(length);
        std::size_t t = 0;
        while (t < length) {
            if (rng.uniform() < p_span) {
                const std::size_t ty = draw_type();
                const std::size_t len = draw_span_length(length - t);
                for (std::size_t k = 0; k < len; ++k) {
                    const auto& vocab = entity_vocab[ty];
                    item.sentence.tokens.push_back(vocab[zipf_rank(rng, vocab.size())]);
                    item.tags.push_back(k == 0 ? tagset.b_index_of(static_cast<int>(ty))
                                               : tagset.i_index_of(static_cast<int>(ty)));
                }
                t += len;
            } else {
                item.sentence.tokens.push_back(draw_o_token(t == 0));
                item.tags.push_back(tagset.o_index());
                ++t;
            }
        }
        items.push_back(std::move(item));
    }
    return LabeledCorpus(tagset, std::move(items));
}

}  // namespace alner
