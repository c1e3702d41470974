#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "xmlc/corpus.hpp"

namespace xmlc {

/// Document-collection statistics used by the weighting schemes.
struct CollectionStats {
    std::uint64_t num_docs = 0;
    std::unordered_map<FeatureId, std::uint64_t> doc_freq;
    std::unordered_map<FeatureId, double> collection_count;
    double avg_doc_len = 0.0;

    [[nodiscard]] std::size_t vocab_size() const noexcept { return doc_freq.size(); }
    [[nodiscard]] std::uint64_t df(FeatureId f) const;
    [[nodiscard]] double cc(FeatureId f) const;

    /// ln((N + 1) / (df + 0.5)); always positive since df <= N.
    [[nodiscard]] double idf(FeatureId f) const;
};

CollectionStats collect_stats(const Corpus& corpus);

enum class WeightingScheme {
    /// (c / len^b)^p * idf^a
    Tix,
    /// (k1 + 1) c / (k1 ((1 - b) + b len / avg) + c) * idf
    Bm25c,
    /// (k1 + 1) c / (k1 ((1 - b) + b (len / avg)^e) + c) * idf^a
    Bm18ti,
};

struct WeightingConfig {
    WeightingScheme scheme = WeightingScheme::Tix;
    double k1 = 1.2;
    double b = 0.0;
    double idf_exponent = 0.0;     // a
    double length_exponent = 1.0;  // e
    double tf_exponent = 1.0;      // p

    /// Tix with p=1, a=0, b=0: weights equal raw counts.
    static WeightingConfig identity() { return {}; }

    void validate() const;
};

std::string to_string(WeightingScheme scheme);
WeightingScheme weighting_scheme_from_string(const std::string& name);

/// Weight of one term with count `count` in a document of length `doc_len`.
double term_weight(const WeightingConfig& cfg, double count, double doc_len, double idf, double avg_doc_len);

/// Weighted copy of the document's features, same order. Features unknown to
/// `stats` use df = 0.
std::vector<FeatureValue> apply_weighting(const SparseDocument& doc, const WeightingConfig& cfg,
                                          const CollectionStats& stats);

/// Returns a copy of `doc` with features replaced by their weights.
SparseDocument weighted_document(const SparseDocument& doc, const WeightingConfig& cfg, const CollectionStats& stats);

}  // namespace xmlc
