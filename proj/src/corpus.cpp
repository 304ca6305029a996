#include "alner/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "alner/errors.hpp"
#include "alner/metrics.hpp"
#include "alner/rng.hpp"

namespace alner {

namespace {

// Splits a BIO class name into kind ('O'/'B'/'I') and entity type.
// Returns false for anything else ("B-" with empty type, "I" alone, ...).
bool split_bio(const std::string& name, char& kind, std::string& type) {
    if (name == "O") {
        kind = 'O';
        type.clear();
        return true;
    }
    if (name.size() >= 3 && (name[0] == 'B' || name[0] == 'I') && name[1] == '-') {
        kind = name[0];
        type = name.substr(2);
        return true;
    }
    return false;
}

}  // namespace

TagSet TagSet::from_classes(std::vector<std::string> classes) {
    TagSet ts;
    ts.classes_ = std::move(classes);
    ts.kind_.resize(ts.classes_.size());
    ts.type_of_.assign(ts.classes_.size(), -1);

    std::map<std::string, std::pair<int, int>> seen;  // type -> (b index, i index)
    std::vector<std::string> type_order;
    std::set<std::string> unique_names;
    for (std::size_t i = 0; i < ts.classes_.size(); ++i) {
        const std::string& name = ts.classes_[i];
        if (!unique_names.insert(name).second)
            throw ConfigError("tagset: duplicate class '" + name + "'");
        char kind;
        std::string type;
        if (!split_bio(name, kind, type))
            throw ConfigError("tagset: '" + name + "' is not O, B-<type> or I-<type>");
        ts.kind_[i] = kind;
        if (kind == 'O') {
            if (ts.o_index_ >= 0) throw ConfigError("tagset: more than one O class");
            ts.o_index_ = static_cast<int>(i);
            continue;
        }
        auto it = seen.find(type);
        if (it == seen.end()) {
            it = seen.emplace(type, std::make_pair(-1, -1)).first;
            type_order.push_back(type);
        }
        int& slot = (kind == 'B') ? it->second.first : it->second.second;
        slot = static_cast<int>(i);
    }
    if (ts.o_index_ < 0) throw ConfigError("tagset: missing O class");
    for (const auto& type : type_order) {
        const auto& [b, i] = seen.at(type);
        if (b < 0 || i < 0)
            throw ConfigError("tagset: entity type '" + type + "' lacks its B- or I- class");
    }
    ts.entity_types_ = type_order;
    ts.b_of_type_.resize(type_order.size());
    ts.i_of_type_.resize(type_order.size());
    for (std::size_t t = 0; t < type_order.size(); ++t) {
        ts.b_of_type_[t] = seen.at(type_order[t]).first;
        ts.i_of_type_[t] = seen.at(type_order[t]).second;
    }
    for (std::size_t i = 0; i < ts.classes_.size(); ++i) {
        if (ts.kind_[i] == 'O') continue;
        char kind;
        std::string type;
        split_bio(ts.classes_[i], kind, type);
        const auto it = std::find(type_order.begin(), type_order.end(), type);
        ts.type_of_[i] = static_cast<int>(it - type_order.begin());
    }
    return ts;
}

TagSet TagSet::for_entity_types(const std::vector<std::string>& types) {
    std::vector<std::string> classes;
    classes.reserve(2 * types.size() + 1);
    classes.push_back("O");
    for (const auto& t : types) {
        classes.push_back("B-" + t);
        classes.push_back("I-" + t);
    }
    return from_classes(std::move(classes));
}

int TagSet::index_of(const std::string& name) const {
    const auto it = std::find(classes_.begin(), classes_.end(), name);
    return it == classes_.end() ? -1 : static_cast<int>(it - classes_.begin());
}

LabeledCorpus::LabeledCorpus(TagSet tagset, std::vector<LabeledSentence> items)
    : tagset_(std::move(tagset)) {
    items_.reserve(items.size());
    for (auto& item : items) add(std::move(item));
}

void LabeledCorpus::validate(const LabeledSentence& item) const {
    if (item.sentence.tokens.empty()) throw DataError("corpus: empty sentence");
    for (const auto& tok : item.sentence.tokens)
        if (tok.empty()) throw DataError("corpus: empty token string");
    if (item.tags.size() != item.sentence.tokens.size())
        throw DataError("corpus: tag/token length mismatch");
    for (const int tag : item.tags)
        if (tag < 0 || tag >= static_cast<int>(tagset_.size()))
            throw DataError("corpus: tag index out of range");
}

void LabeledCorpus::add(LabeledSentence item) {
    validate(item);
    token_count_ += item.sentence.tokens.size();
    items_.push_back(std::move(item));
}

void LabeledCorpus::add(std::vector<LabeledSentence> items) {
    for (auto& item : items) add(std::move(item));
}

UnlabeledPool::UnlabeledPool(std::vector<Sentence> items) : items_(std::move(items)) {}

UnlabeledPool::UnlabeledPool(std::vector<Sentence> items, std::vector<std::vector<int>> hidden_tags)
    : items_(std::move(items)), hidden_tags_(std::move(hidden_tags)) {
    if (items_.size() != hidden_tags_.size())
        throw DataError("pool: hidden tag count does not match sentence count");
}

std::vector<LabeledSentence> UnlabeledPool::take(std::span<const std::size_t> indices) {
    if (!has_oracle()) throw DataError("pool: no gold tags available for the oracle");
    std::vector<std::size_t> order(indices.begin(), indices.end());
    std::sort(order.begin(), order.end());
    if (std::adjacent_find(order.begin(), order.end()) != order.end())
        throw ConfigError("pool: duplicate index in query");
    if (!order.empty() && order.back() >= items_.size())
        throw ConfigError("pool: query index out of range");

    std::vector<LabeledSentence> out;
    out.reserve(order.size());
    for (const std::size_t i : order)
        out.push_back(LabeledSentence{items_[i], hidden_tags_[i]});
    // Erase from the back so earlier indices stay valid.
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        items_.erase(items_.begin() + static_cast<std::ptrdiff_t>(*it));
        hidden_tags_.erase(hidden_tags_.begin() + static_cast<std::ptrdiff_t>(*it));
    }
    return out;
}

ClassCounts class_counts(const LabeledCorpus& corpus) {
    ClassCounts counts;
    counts.per_class.assign(corpus.tagset().size(), 0);
    for (const auto& item : corpus.items()) {
        for (const int tag : item.tags) ++counts.per_class[static_cast<std::size_t>(tag)];
    }
    counts.total = std::accumulate(counts.per_class.begin(), counts.per_class.end(), 0LL);
    return counts;
}

CorpusStats stats(const LabeledCorpus& corpus) {
    if (corpus.empty()) throw DataError("stats: empty corpus");
    CorpusStats s;
    s.sentence_count = corpus.size();
    s.token_count = corpus.token_count();
    s.average_length = static_cast<double>(s.token_count) / static_cast<double>(s.sentence_count);

    const ClassCounts counts = class_counts(corpus);
    const TagSet& ts = corpus.tagset();
    long long b = 0, i = 0, o = 0;
    for (std::size_t k = 0; k < counts.per_class.size(); ++k) {
        const int idx = static_cast<int>(k);
        if (ts.is_o(idx))
            o += counts.per_class[k];
        else if (ts.is_b(idx))
            b += counts.per_class[k];
        else
            i += counts.per_class[k];
    }
    const double total = static_cast<double>(counts.total);
    s.b_fraction = static_cast<double>(b) / total;
    s.i_fraction = static_cast<double>(i) / total;
    s.o_fraction = static_cast<double>(o) / total;

    const GammaResult gamma = imbalance_ratio_clamped(counts.per_class);
    s.imbalance_ratio = gamma.gamma;
    s.imbalance_clamped = gamma.clamped;
    s.per_class = counts.per_class;
    return s;
}

namespace {

struct RawSentence {
    std::vector<std::string> tokens;
    std::vector<std::string> tags;
    std::vector<std::size_t> lines;  // source line per token
};

std::vector<std::string> split_columns(const std::string& line) {
    std::vector<std::string> cols;
    std::size_t pos = 0;
    while (pos < line.size()) {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
        std::size_t start = pos;
        while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r') ++pos;
        if (pos > start) cols.push_back(line.substr(start, pos - start));
        if (pos < line.size() && line[pos] == '\r') break;
    }
    return cols;
}

bool blank_line(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

LabeledCorpus parse_conll(std::istream& in, const ParseOptions& options,
                          ParseDiagnostics* diagnostics) {
    std::vector<RawSentence> raw;
    RawSentence current;
    std::string line;
    std::size_t line_no = 0;

    auto flush = [&] {
        if (!current.tokens.empty()) {
            raw.push_back(std::move(current));
            current = RawSentence{};
        }
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (blank_line(line)) {
            flush();
            continue;
        }
        std::vector<std::string> cols = split_columns(line);
        if (cols.empty()) {
            flush();
            continue;
        }
        if (cols[0] == "-DOCSTART-") {
            flush();
            continue;
        }
        const int tag_col = options.tag_column < 0 ? static_cast<int>(cols.size()) - 1
                                                   : options.tag_column;
        if (cols.size() < 2 || tag_col >= static_cast<int>(cols.size()) || tag_col < 1)
            throw DataError("parse: line " + std::to_string(line_no) +
                            ": expected at least " + std::to_string(std::max(2, tag_col + 1)) +
                            " columns, got " + std::to_string(cols.size()));
        current.tokens.push_back(cols[0]);
        current.tags.push_back(cols[static_cast<std::size_t>(tag_col)]);
        current.lines.push_back(line_no);
    }
    flush();

    if (raw.empty()) throw DataError("parse: no sentences");

    // Resolve the tagset: supplied, or inferred from data in canonical order.
    TagSet tagset = [&] {
        if (options.tagset) return *options.tagset;
        std::set<std::string> types;
        for (const auto& rs : raw) {
            for (std::size_t t = 0; t < rs.tags.size(); ++t) {
                char kind;
                std::string type;
                if (!split_bio(rs.tags[t], kind, type))
                    throw DataError("parse: line " + std::to_string(rs.lines[t]) +
                                    ": tag '" + rs.tags[t] + "' is not O, B-<type> or I-<type>");
                if (kind != 'O') types.insert(type);
            }
        }
        return TagSet::for_entity_types(std::vector<std::string>(types.begin(), types.end()));
    }();

    std::vector<std::string> violations;
    std::vector<LabeledSentence> items;
    items.reserve(raw.size());
    for (std::size_t s = 0; s < raw.size(); ++s) {
        LabeledSentence item;
        item.sentence.tokens = raw[s].tokens;
        item.sentence.id = s;
        item.tags.reserve(raw[s].tags.size());
        int prev = -1;
        for (std::size_t t = 0; t < raw[s].tags.size(); ++t) {
            int tag = tagset.index_of(raw[s].tags[t]);
            if (tag < 0)
                throw DataError("parse: line " + std::to_string(raw[s].lines[t]) +
                                ": tag '" + raw[s].tags[t] + "' not in tagset");
            if (tagset.is_i(tag)) {
                const int type = tagset.entity_type_of(tag);
                const bool open = prev >= 0 && !tagset.is_o(prev) &&
                                  tagset.entity_type_of(prev) == type;
                if (!open) {
                    const std::string where = "line " + std::to_string(raw[s].lines[t]) + ": " +
                                              tagset.name(tag) + " without a preceding B-" +
                                              tagset.entity_types()[static_cast<std::size_t>(type)] +
                                              " or I-" +
                                              tagset.entity_types()[static_cast<std::size_t>(type)];
                    if (options.bio == BioPolicy::Strict) {
                        violations.push_back(where);
                    } else {
                        tag = tagset.b_index_of(type);
                        if (diagnostics) diagnostics->repairs.push_back(where + " (repaired)");
                    }
                }
            }
            item.tags.push_back(tag);
            prev = tag;
        }
        items.push_back(std::move(item));
    }

    if (!violations.empty()) {
        std::string msg = "parse: " + std::to_string(violations.size()) + " BIO violation(s):";
        for (const auto& v : violations) msg += "\n  " + v;
        throw DataError(msg);
    }
    return LabeledCorpus(std::move(tagset), std::move(items));
}

LabeledCorpus parse_conll_file(const std::string& path, const ParseOptions& options,
                               ParseDiagnostics* diagnostics) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return parse_conll(in, options, diagnostics);
}

std::string serialize_conll(const LabeledCorpus& corpus) {
    std::ostringstream out;
    for (const auto& item : corpus.items()) {
        for (std::size_t t = 0; t < item.sentence.tokens.size(); ++t)
            out << item.sentence.tokens[t] << ' '
                << corpus.tagset().name(item.tags[t]) << '\n';
        out << '\n';
    }
    return out.str();
}

std::pair<LabeledCorpus, UnlabeledPool> split_pools(const LabeledCorpus& corpus,
                                                    std::size_t init_size, std::uint64_t seed) {
    if (init_size > corpus.size())
        throw ConfigError("split: init size " + std::to_string(init_size) +
                          " exceeds corpus size " + std::to_string(corpus.size()));
    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    std::vector<bool> labeled_mask(corpus.size(), false);
    for (std::size_t i = 0; i < init_size; ++i) labeled_mask[order[i]] = true;

    std::vector<LabeledSentence> labeled;
    std::vector<Sentence> pool_sentences;
    std::vector<std::vector<int>> pool_tags;
    labeled.reserve(init_size);
    pool_sentences.reserve(corpus.size() - init_size);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& item = corpus.items()[i];
        if (labeled_mask[i]) {
            labeled.push_back(item);
        } else {
            pool_sentences.push_back(item.sentence);
            pool_tags.push_back(item.tags);
        }
    }
    return {LabeledCorpus(corpus.tagset(), std::move(labeled)),
            UnlabeledPool(std::move(pool_sentences), std::move(pool_tags))};
}

}  // namespace alner
