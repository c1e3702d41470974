#include "xmlc/weighting.hpp"

#include <cmath>
#include <stdexcept>

namespace xmlc {

std::uint64_t CollectionStats::df(FeatureId f) const {
    auto it = doc_freq.find(f);
    return it == doc_freq.end() ? 0 : it->second;
}

double CollectionStats::cc(FeatureId f) const {
    auto it = collection_count.find(f);
    return it == collection_count.end() ? 0.0 : it->second;
}

double CollectionStats::idf(FeatureId f) const {
    return std::log((static_cast<double>(num_docs) + 1.0) / (static_cast<double>(df(f)) + 0.5));
}

CollectionStats collect_stats(const Corpus& corpus) {
    CollectionStats stats;
    stats.num_docs = corpus.size();
    double total_len = 0.0;
    for (const auto& doc : corpus.documents) {
        for (const auto& f : doc.features) {
            ++stats.doc_freq[f.id];
            stats.collection_count[f.id] += f.value;
            total_len += f.value;
        }
    }
    stats.avg_doc_len = stats.num_docs ? total_len / static_cast<double>(stats.num_docs) : 0.0;
    return stats;
}

void WeightingConfig::validate() const {
    if (!(k1 > 0)) throw std::invalid_argument("weighting: k1 must be > 0");
    if (!(b >= 0 && b <= 1)) throw std::invalid_argument("weighting: b must be in [0,1]");
    if (!(idf_exponent >= 0)) throw std::invalid_argument("weighting: idf exponent must be >= 0");
    if (!(length_exponent >= 0)) throw std::invalid_argument("weighting: length exponent must be >= 0");
    if (!(tf_exponent > 0 && tf_exponent <= 1)) throw std::invalid_argument("weighting: tf exponent must be in (0,1]");
}

std::string to_string(WeightingScheme scheme) {
    switch (scheme) {
        case WeightingScheme::Tix: return "tix";
        case WeightingScheme::Bm25c: return "bm25c";
        case WeightingScheme::Bm18ti: return "bm18ti";
    }
    return "?";
}

WeightingScheme weighting_scheme_from_string(const std::string& name) {
    if (name == "tix") return WeightingScheme::Tix;
    if (name == "bm25c") return WeightingScheme::Bm25c;
    if (name == "bm18ti") return WeightingScheme::Bm18ti;
    throw std::invalid_argument("unknown weighting scheme '" + name + "'");
}

double term_weight(const WeightingConfig& cfg, double count, double doc_len, double idf, double avg_doc_len) {
    const double rel_len = avg_doc_len > 0 ? doc_len / avg_doc_len : 1.0;
    switch (cfg.scheme) {
        case WeightingScheme::Tix: {
            const double norm = cfg.b == 0 ? 1.0 : std::pow(doc_len, cfg.b);
            const double tf = cfg.tf_exponent == 1 ? count / norm : std::pow(count / norm, cfg.tf_exponent);
            return cfg.idf_exponent == 0 ? tf : tf * std::pow(idf, cfg.idf_exponent);
        }
        case WeightingScheme::Bm25c: {
            const double denom = cfg.k1 * ((1 - cfg.b) + cfg.b * rel_len) + count;
            return (cfg.k1 + 1) * count / denom * idf;
        }
        case WeightingScheme::Bm18ti: {
            const double lnorm = cfg.length_exponent == 1 ? rel_len : std::pow(rel_len, cfg.length_exponent);
            const double denom = cfg.k1 * ((1 - cfg.b) + cfg.b * lnorm) + count;
            const double sat = (cfg.k1 + 1) * count / denom;
            return cfg.idf_exponent == 0 ? sat : sat * std::pow(idf, cfg.idf_exponent);
        }
    }
    return count;
}

std::vector<FeatureValue> apply_weighting(const SparseDocument& doc, const WeightingConfig& cfg,
                                          const CollectionStats& stats) {
    const double len = doc.length();
    std::vector<FeatureValue> out;
    out.reserve(doc.features.size());
    for (const auto& f : doc.features) {
        out.push_back({f.id, term_weight(cfg, f.value, len, stats.idf(f.id), stats.avg_doc_len)});
    }
    return out;
}

SparseDocument weighted_document(const SparseDocument& doc, const WeightingConfig& cfg, const CollectionStats& stats) {
    SparseDocument out;
    out.doc_id = doc.doc_id;
    out.labels = doc.labels;
    out.features = apply_weighting(doc, cfg, stats);
    return out;
}

}  // namespace xmlc
