#include "xmlc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "xmlc/random.hpp"
#include "xmlc/text.hpp"

namespace xmlc {

double SparseDocument::length() const noexcept {
    double total = 0.0;
    for (const auto& f : features) total += f.value;
    return total;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Reads an unsigned integer starting at `pos`; advances `pos`.
template <typename Int>
bool read_uint(std::string_view s, std::size_t& pos, Int& out) {
    std::size_t end = pos;
    while (end < s.size() && is_digit(s[end])) ++end;
    if (end == pos) return false;
    auto v = parse_int<Int>(s.substr(pos, end - pos));
    if (!v) return false;
    out = *v;
    pos = end;
    return true;
}

std::string_view first_token(std::string_view s, std::size_t pos) {
    std::size_t end = pos;
    while (end < s.size() && !is_space(s[end])) ++end;
    return s.substr(pos, end - pos);
}

}  // namespace

SparseDocument parse_document_line(std::string_view line, std::size_t line_number, const std::string& source) {
    auto fail = [&](const std::string& what) -> ParseError { return ParseError(source, line_number, what); };

    SparseDocument doc;
    doc.doc_id = line_number - 1;

    std::size_t pos = 0;
    while (pos < line.size() && is_space(line[pos])) ++pos;

    if (pos < line.size() && line[pos] == '#') {
        ++pos;
        if (!read_uint(line, pos, doc.doc_id)) throw fail("malformed document id");
        if (pos >= line.size() || !is_space(line[pos])) throw fail("expected space after document id");
        while (pos < line.size() && is_space(line[pos])) ++pos;
    }

    if (first_token(line, pos).find(':') == std::string_view::npos) {
        // label list: int (',' ' '? int)*
        for (;;) {
            LabelId label{};
            if (!read_uint(line, pos, label)) throw fail("malformed label list");
            doc.labels.push_back(label);
            if (pos < line.size() && line[pos] == ',') {
                ++pos;
                if (pos < line.size() && line[pos] == ' ') ++pos;
                continue;
            }
            break;
        }
        if (pos >= line.size() || !is_space(line[pos])) throw fail("expected space after labels");
        std::sort(doc.labels.begin(), doc.labels.end());
        doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()), doc.labels.end());
    }

    for (auto token : split_ws(line.substr(pos))) {
        const auto colon = token.find(':');
        if (colon == std::string_view::npos) throw fail("expected feature:count, got '" + std::string(token) + "'");
        auto id = parse_int<FeatureId>(token.substr(0, colon));
        auto value = parse_double(token.substr(colon + 1));
        if (!id) throw fail("malformed feature id in '" + std::string(token) + "'");
        if (!value || !std::isfinite(*value)) throw fail("malformed count in '" + std::string(token) + "'");
        if (*value < 0) throw fail("negative count in '" + std::string(token) + "'");
        if (*value == 0) throw fail("zero count in '" + std::string(token) + "'");
        doc.features.push_back({*id, *value});
    }
    if (doc.features.empty()) throw fail("document has no features");

    std::sort(doc.features.begin(), doc.features.end(),
              [](const FeatureValue& a, const FeatureValue& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < doc.features.size(); ++i) {
        if (doc.features[i].id == doc.features[i - 1].id) {
            throw fail("duplicate feature " + std::to_string(doc.features[i].id));
        }
    }
    return doc;
}

Corpus parse_dataset(std::istream& in, std::string source_name) {
    Corpus corpus;
    corpus.source_name = std::move(source_name);
    std::unordered_set<DocId> seen;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (is_blank(line)) continue;
        auto doc = parse_document_line(line, line_number, corpus.source_name);
        if (!seen.insert(doc.doc_id).second) {
            throw ParseError(corpus.source_name, line_number, "duplicate document id " + std::to_string(doc.doc_id));
        }
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

Corpus parse_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset " + path.string());
    return parse_dataset(in, path.string());
}

std::string serialize_document(const SparseDocument& doc, bool write_id) {
    std::string out;
    if (write_id) {
        out += '#';
        append_int(out, doc.doc_id);
        out += ' ';
    }
    for (std::size_t i = 0; i < doc.labels.size(); ++i) {
        if (i) out += ',';
        append_int(out, doc.labels[i]);
    }
    if (!doc.labels.empty()) out += ' ';
    for (std::size_t i = 0; i < doc.features.size(); ++i) {
        if (i) out += ' ';
        append_int(out, doc.features[i].id);
        out += ':';
        append_exact(out, doc.features[i].value);
    }
    return out;
}

void write_dataset(std::ostream& out, const Corpus& corpus) {
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
        const auto& doc = corpus.documents[i];
        out << serialize_document(doc, doc.doc_id != i) << '\n';
    }
}

void write_dataset(const std::filesystem::path& path, const Corpus& corpus) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset " + path.string());
    write_dataset(out, corpus);
}

namespace {

constexpr std::uint64_t kSegmentTag = 0x5e6d;
constexpr std::uint64_t kSharedDevTag = 0xde5;
constexpr std::uint64_t kSplitTag = 0x5b17;
constexpr std::uint64_t kShuffleTag = 0x5f1e;

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span(perm), rng);
    return perm;
}

Corpus subset(const Corpus& corpus, std::vector<std::size_t> indices, bool keep_order, const std::string& suffix) {
    if (keep_order) std::sort(indices.begin(), indices.end());
    Corpus out;
    out.source_name = corpus.source_name + suffix;
    out.documents.reserve(indices.size());
    for (auto i : indices) out.documents.push_back(corpus.documents[i]);
    return out;
}

int scheme_tag(FoldScheme s) { return static_cast<int>(s); }

}  // namespace

Segmentation segment(const Corpus& corpus, std::size_t base_size, std::size_t ensemble_size, std::uint64_t seed) {
    if (base_size > corpus.size() || ensemble_size > corpus.size() - base_size) {
        throw std::invalid_argument("segment sizes " + std::to_string(base_size) + "+" +
                                    std::to_string(ensemble_size) + " exceed corpus size " +
                                    std::to_string(corpus.size()));
    }
    auto perm = permutation(corpus.size(), derive_seed(seed, {kSegmentTag}));
    std::vector<std::size_t> base(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(base_size));
    std::vector<std::size_t> ens(perm.begin() + static_cast<std::ptrdiff_t>(base_size),
                                 perm.begin() + static_cast<std::ptrdiff_t>(base_size + ensemble_size));
    return {subset(corpus, std::move(base), true, "#base"), subset(corpus, std::move(ens), true, "#ensemble")};
}

FoldScheme scheme_for_fold(int fold_index) {
    if (fold_index < 0 || fold_index > 9) {
        throw std::invalid_argument("fold index must be in 0..9, got " + std::to_string(fold_index));
    }
    if (fold_index <= 2) return FoldScheme::ExclusiveDev;
    if (fold_index <= 5) return FoldScheme::RandomThirds;
    return FoldScheme::OrderedQuarters;
}

void shuffle_corpus(Corpus& corpus, std::uint64_t seed) {
    Rng rng(seed);
    shuffle(std::span(corpus.documents), rng);
}

FoldSplit make_fold(const Corpus& base_train, const FoldSpec& spec) {
    if (scheme_for_fold(spec.fold_index) != spec.scheme) {
        throw std::invalid_argument("fold index " + std::to_string(spec.fold_index) + " does not belong to the requested scheme");
    }
    const std::size_t n = base_train.size();
    if (spec.dev_size >= n) {
        throw std::invalid_argument("dev size " + std::to_string(spec.dev_size) + " must be below corpus size " +
                                    std::to_string(n));
    }

    std::vector<std::size_t> dev;
    std::vector<std::size_t> train;

    if (spec.scheme == FoldScheme::ExclusiveDev) {
        if (3 * spec.dev_size > n) {
            throw std::invalid_argument("three exclusive dev sets of " + std::to_string(spec.dev_size) +
                                        " do not fit in " + std::to_string(n) + " documents");
        }
        // One permutation shared by folds 0-2; each fold takes its own slice.
        auto perm = permutation(n, derive_seed(spec.seed, {kSharedDevTag, 0}));
        const auto begin = static_cast<std::size_t>(spec.fold_index) * spec.dev_size;
        std::vector<bool> in_dev(n, false);
        for (std::size_t i = begin; i < begin + spec.dev_size; ++i) {
            dev.push_back(perm[i]);
            in_dev[perm[i]] = true;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_dev[i]) train.push_back(i);
        }
    } else {
        // Shared dev sample: depends on (scheme, dev_size) only.
        const auto tag = static_cast<std::uint64_t>(scheme_tag(spec.scheme));
        auto perm = permutation(n, derive_seed(kSharedDevTag, {tag, spec.dev_size}));
        std::vector<bool> in_dev(n, false);
        for (std::size_t i = 0; i < spec.dev_size; ++i) {
            dev.push_back(perm[i]);
            in_dev[perm[i]] = true;
        }
        std::vector<std::size_t> rest;
        rest.reserve(n - spec.dev_size);
        for (std::size_t i = 0; i < n; ++i) {
            if (!in_dev[i]) rest.push_back(i);
        }

        std::size_t parts = 4;
        std::size_t part = static_cast<std::size_t>(spec.fold_index - 6);
        if (spec.scheme == FoldScheme::RandomThirds) {
            parts = 3;
            part = static_cast<std::size_t>(spec.fold_index - 3);
            Rng rng(derive_seed(spec.seed, {kSplitTag, tag}));
            shuffle(std::span(rest), rng);
        }
        const std::size_t r = rest.size();
        const std::size_t lo = part * r / parts;
        const std::size_t hi = (part + 1) * r / parts;
        train.assign(rest.begin() + static_cast<std::ptrdiff_t>(lo), rest.begin() + static_cast<std::ptrdiff_t>(hi));
        std::sort(train.begin(), train.end());
    }

    FoldSplit split;
    split.dry_dev = subset(base_train, std::move(dev), true, "#dev" + std::to_string(spec.fold_index));
    split.dry_train = subset(base_train, std::move(train), true, "#train" + std::to_string(spec.fold_index));
    shuffle_corpus(split.dry_train,
                   derive_seed(spec.seed, {kShuffleTag, static_cast<std::uint64_t>(spec.fold_index)}));
    return split;
}

std::uint64_t LabelStats::frequency(LabelId label) const {
    auto it = label_freq.find(label);
    return it == label_freq.end() ? 0 : it->second;
}

std::string labelset_key(std::span<const LabelId> labels) {
    std::string key;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) key += ',';
        append_int(key, labels[i]);
    }
    return key;
}

LabelStats labelset_stats(const Corpus& corpus) {
    LabelStats stats;
    stats.total_docs = corpus.size();
    for (const auto& doc : corpus.documents) {
        if (doc.labels.empty()) continue;
        for (auto l : doc.labels) ++stats.label_freq[l];
        ++stats.labelset_freq[labelset_key(doc.labels)];
    }
    return stats;
}

bool Hierarchy::add_edge(LabelId parent, LabelId child) {
    if (parent == child) throw std::invalid_argument("self-edge on label " + std::to_string(parent));
    if (!edges_.emplace(parent, child).second) return false;
    auto& parents = parents_[child];
    parents.insert(std::lower_bound(parents.begin(), parents.end(), parent), parent);
    return true;
}

std::span<const LabelId> Hierarchy::parents_of(LabelId label) const {
    auto it = parents_.find(label);
    if (it == parents_.end()) return {};
    return it->second;
}

Hierarchy parse_hierarchy(std::istream& in, const std::string& source_name) {
    Hierarchy h;
    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (is_blank(line)) continue;
        auto tokens = split_ws(line);
        if (tokens.size() != 2) throw ParseError(source_name, line_number, "expected 'parent child'");
        auto parent = parse_int<LabelId>(tokens[0]);
        auto child = parse_int<LabelId>(tokens[1]);
        if (!parent || !child) throw ParseError(source_name, line_number, "malformed label id");
        if (*parent == *child) throw ParseError(source_name, line_number, "self-edge");
        h.add_edge(*parent, *child);
    }
    return h;
}

Hierarchy parse_hierarchy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open hierarchy " + path.string());
    return parse_hierarchy(in, path.string());
}

}  // namespace xmlc
