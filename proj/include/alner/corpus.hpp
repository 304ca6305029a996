#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace alner {

/// Ordered inventory of BIO classes. Always contains exactly one "O" class
/// and a B-/I- pair per entity type, so size() == 2 * entity_types + 1.
class TagSet {
public:
    // Validates the invariants above; order of `classes` is preserved.
    static TagSet from_classes(std::vector<std::string> classes);

    // Canonical tagset for a list of entity types: O first, then B-T, I-T
    // per type in the given order.
    static TagSet for_entity_types(const std::vector<std::string>& types);

    std::size_t size() const { return classes_.size(); }
    int o_index() const { return o_index_; }
    const std::string& name(int index) const { return classes_[static_cast<std::size_t>(index)]; }
    const std::vector<std::string>& classes() const { return classes_; }
    const std::vector<std::string>& entity_types() const { return entity_types_; }

    // -1 when the name is not a class.
    int index_of(const std::string& name) const;

    bool is_o(int index) const { return index == o_index_; }
    bool is_b(int index) const { return kind_[static_cast<std::size_t>(index)] == 'B'; }
    bool is_i(int index) const { return kind_[static_cast<std::size_t>(index)] == 'I'; }

    // Entity type index of a B-/I- class, -1 for O.
    int entity_type_of(int index) const { return type_of_[static_cast<std::size_t>(index)]; }
    int b_index_of(int entity_type) const { return b_of_type_[static_cast<std::size_t>(entity_type)]; }
    int i_index_of(int entity_type) const { return i_of_type_[static_cast<std::size_t>(entity_type)]; }

    bool operator==(const TagSet& other) const { return classes_ == other.classes_; }

private:
    TagSet() = default;

    std::vector<std::string> classes_;
    std::vector<std::string> entity_types_;
    std::vector<char> kind_;     // 'O', 'B' or 'I' per class
    std::vector<int> type_of_;   // entity type index per class, -1 for O
    std::vector<int> b_of_type_;
    std::vector<int> i_of_type_;
    int o_index_ = -1;
};

struct Sentence {
    std::vector<std::string> tokens;
    std::size_t id = 0;  // ordinal in the source file

    std::size_t length() const { return tokens.size(); }
    bool operator==(const Sentence&) const = default;
};

struct LabeledSentence {
    Sentence sentence;
    std::vector<int> tags;  // class indices, one per token

    bool operator==(const LabeledSentence&) const = default;
};

/// The labeled pool L: sentences with gold tags plus the tagset they index.
class LabeledCorpus {
public:
    LabeledCorpus(TagSet tagset, std::vector<LabeledSentence> items);

    const TagSet& tagset() const { return tagset_; }
    const std::vector<LabeledSentence>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }
    std::size_t token_count() const { return token_count_; }

    void add(LabeledSentence item);
    void add(std::vector<LabeledSentence> items);

private:
    void validate(const LabeledSentence& item) const;

    TagSet tagset_;
    std::vector<LabeledSentence> items_;
    std::size_t token_count_ = 0;
};

/// The unlabeled pool U. Gold tags, when present, are held back for the
/// oracle: the only way to read them is take(), which also removes the
/// sentences from the pool. Scoring code sees Sentence objects only.
class UnlabeledPool {
public:
    explicit UnlabeledPool(std::vector<Sentence> items);
    UnlabeledPool(std::vector<Sentence> items, std::vector<std::vector<int>> hidden_tags);

    const std::vector<Sentence>& sentences() const { return items_; }
    std::size_t size() const { return items_.size(); }
    bool has_oracle() const { return !hidden_tags_.empty(); }

    // Oracle query: reveals gold tags for the given pool indices and removes
    // those sentences. Indices refer to the current pool order.
    std::vector<LabeledSentence> take(std::span<const std::size_t> indices);

private:
    std::vector<Sentence> items_;
    std::vector<std::vector<int>> hidden_tags_;
};

struct ClassCounts {
    std::vector<long long> per_class;  // m_k, token counts
    long long total = 0;               // m
};

/// Token-level class counts over the corpus. total == sum(per_class).
ClassCounts class_counts(const LabeledCorpus& corpus);

struct CorpusStats {
    std::size_t sentence_count = 0;
    std::size_t token_count = 0;
    double average_length = 0.0;
    double b_fraction = 0.0;
    double i_fraction = 0.0;
    double o_fraction = 0.0;
    double imbalance_ratio = 0.0;
    bool imbalance_clamped = false;  // some class absent; N_min clamped to 1
    std::vector<long long> per_class;
};

CorpusStats stats(const LabeledCorpus& corpus);

enum class BioPolicy {
    Repair,  // I-T without an open T span becomes B-T
    Strict,  // reject the file, reporting every violation with line numbers
};

struct ParseOptions {
    int tag_column = -1;  // -1 = last column
    BioPolicy bio = BioPolicy::Repair;
    const TagSet* tagset = nullptr;  // nullptr = infer from data
};

struct ParseDiagnostics {
    std::vector<std::string> repairs;  // one entry per repaired line
};

/// Reads CoNLL-style column data: one token per line, whitespace-separated
/// columns, blank line between sentences, "-DOCSTART-" lines skipped.
/// Inferred tagsets are ordered canonically: O, then B-T, I-T per entity
/// type in lexicographic order.
LabeledCorpus parse_conll(std::istream& in, const ParseOptions& options = {},
                          ParseDiagnostics* diagnostics = nullptr);

LabeledCorpus parse_conll_file(const std::string& path, const ParseOptions& options = {},
                               ParseDiagnostics* diagnostics = nullptr);

/// Two-column "token tag" form; parse_conll(serialize_conll(c)) reproduces
/// token and tag content.
std::string serialize_conll(const LabeledCorpus& corpus);

/// Seed-deterministic uniform split into an initial labeled pool of
/// `init_size` sentences and an unlabeled pool that keeps gold tags hidden
/// for the oracle. Both sides preserve source order.
std::pair<LabeledCorpus, UnlabeledPool> split_pools(const LabeledCorpus& corpus,
                                                    std::size_t init_size, std::uint64_t seed);

}  // namespace alner
