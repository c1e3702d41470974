#include "xmlc/result_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "xmlc/text.hpp"

namespace xmlc {

namespace {

template <typename Id>
std::pair<Id, double> parse_pair(std::string_view token, const std::string& source, std::size_t line) {
    const auto colon = token.find(':');
    auto id = parse_int<Id>(token.substr(0, colon));
    if (!id) throw ParseError(source, line, "malformed id in '" + std::string(token) + "'");
    if (colon == std::string_view::npos) return {*id, 0.0};
    auto score = parse_double(token.substr(colon + 1));
    if (!score || !std::isfinite(*score)) throw ParseError(source, line, "malformed score in '" + std::string(token) + "'");
    return {*id, *score};
}

template <typename Fn>
void for_each_line(std::istream& in, Fn&& fn) {
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (is_blank(line)) continue;
        fn(std::string_view(line), number);
    }
}

}  // namespace

void write_document_results(std::ostream& out, std::span<const DocResult> results) {
    std::string s;
    for (const auto& r : results) {
        s.clear();
        append_int(s, r.doc);
        s += ',';
        for (std::size_t i = 0; i < r.labels.size(); ++i) {
            if (i) s += ' ';
            append_int(s, r.labels[i].label);
            s += ':';
            append_fixed(s, r.labels[i].score, kScoreDigits);
        }
        s += '\n';
        out << s;
    }
}

std::vector<DocResult> read_document_results(std::istream& in, const std::string& source) {
    std::vector<DocResult> out;
    for_each_line(in, [&](std::string_view line, std::size_t number) {
        const auto comma = line.find(',');
        if (comma == std::string_view::npos) throw ParseError(source, number, "expected 'doc_id,'");
        auto doc = parse_int<DocId>(line.substr(0, comma));
        if (!doc) throw ParseError(source, number, "malformed document id");
        DocResult r{*doc, {}};
        for (auto token : split_ws(line.substr(comma + 1))) {
            auto [label, score] = parse_pair<LabelId>(token, source, number);
            r.labels.push_back({label, score});
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<DocResult> read_document_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results " + path.string());
    return read_document_results(in, path.string());
}

void write_submission(std::ostream& out, std::span<const DocId> docs,
                      const std::map<DocId, std::vector<LabelId>>& predictions) {
    std::string s;
    for (auto doc : docs) {
        s.clear();
        append_int(s, doc);
        s += ',';
        if (auto it = predictions.find(doc); it != predictions.end()) {
            auto labels = it->second;
            std::sort(labels.begin(), labels.end());
            for (std::size_t i = 0; i < labels.size(); ++i) {
                if (i) s += ' ';
                append_int(s, labels[i]);
            }
        }
        s += '\n';
        out << s;
    }
}

void write_transposed(std::ostream& out, std::span<const LabelResult> results) {
    std::string s;
    for (const auto& r : results) {
        s.clear();
        append_int(s, r.label);
        for (const auto& inst : r.instances) {
            s += ' ';
            append_int(s, inst.doc);
            s += ':';
            append_fixed(s, inst.score, kScoreDigits);
        }
        s += '\n';
        out << s;
    }
}

std::vector<LabelResult> read_transposed(std::istream& in, const std::string& source) {
    std::vector<LabelResult> out;
    for_each_line(in, [&](std::string_view line, std::size_t number) {
        auto tokens = split_ws(line);
        auto label = parse_int<LabelId>(tokens.front());
        if (!label) throw ParseError(source, number, "malformed label id");
        LabelResult r{*label, {}};
        for (std::size_t i = 1; i < tokens.size(); ++i) {
            if (tokens[i].find(':') == std::string_view::npos) {
                throw ParseError(source, number, "expected doc:score, got '" + std::string(tokens[i]) + "'");
            }
            auto [doc, score] = parse_pair<DocId>(tokens[i], source, number);
            r.instances.push_back({doc, score});
        }
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<LabelResult> read_transposed(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open results " + path.string());
    return read_transposed(in, path.string());
}

std::vector<LabelResult> transpose_to_labels(std::span<const DocResult> results) {
    std::map<LabelId, std::vector<InstanceScore>> lists;
    for (const auto& r : results) {
        for (const auto& [label, score] : r.labels) lists[label].push_back({r.doc, score});
    }
    std::vector<LabelResult> out;
    out.reserve(lists.size());
    for (auto& [label, instances] : lists) {
        std::sort(instances.begin(), instances.end(), [](const InstanceScore& a, const InstanceScore& b) {
            return a.score != b.score ? a.score > b.score : a.doc < b.doc;
        });
        out.push_back({label, std::move(instances)});
    }
    return out;
}

std::vector<DocResult> transpose_to_documents(std::span<const LabelResult> results) {
    std::map<DocId, std::vector<LabelScore>> lists;
    for (const auto& r : results) {
        for (const auto& [doc, score] : r.instances) lists[doc].push_back({r.label, score});
    }
    std::vector<DocResult> out;
    out.reserve(lists.size());
    for (auto& [doc, labels] : lists) {
        std::sort(labels.begin(), labels.end(), [](const LabelScore& a, const LabelScore& b) {
            return a.score != b.score ? a.score > b.score : a.label < b.label;
        });
        out.push_back({doc, std::move(labels)});
    }
    return out;
}

std::vector<LabelResult> to_label_results(const TransposedPrediction& pred) {
    std::vector<LabelResult> out;
    out.reserve(pred.lists.size());
    for (const auto& [label, entries] : pred.lists) {
        LabelResult r{label, {}};
        r.instances.reserve(entries.size());
        for (const auto& e : entries) r.instances.push_back({e.doc, e.score});
        out.push_back(std::move(r));
    }
    return out;
}

std::map<DocId, std::vector<LabelId>> label_sets(std::span<const DocResult> results) {
    auto out = label_rankings(results);
    for (auto& [doc, labels] : out) {
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    }
    return out;
}

std::map<DocId, std::vector<LabelId>> label_rankings(std::span<const DocResult> results) {
    std::map<DocId, std::vector<LabelId>> out;
    for (const auto& r : results) {
        auto& labels = out[r.doc];
        for (const auto& l : r.labels) labels.push_back(l.label);
    }
    return out;
}

std::map<DocId, std::vector<LabelId>> gold_label_sets(const Corpus& corpus) {
    std::map<DocId, std::vector<LabelId>> out;
    for (const auto& doc : corpus.documents) out[doc.doc_id] = doc.labels;
    return out;
}

void transpose_file(std::istream& in, std::ostream& out, TransposeDirection direction, const std::string& source) {
    if (direction == TransposeDirection::DocumentsToLabels) {
        auto labels = transpose_to_labels(read_document_results(in, source));
        write_transposed(out, labels);
    } else {
        auto docs = transpose_to_documents(read_transposed(in, source));
        write_document_results(out, docs);
    }
}

}  // namespace xmlc
