#pragma once

// Multi-label evaluation measures. All set-valued maps are doc -> labels;
// evaluation covers exactly the documents present in `gold`, and a gold
// document absent from the predictions counts as an empty prediction.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "xmlc/corpus.hpp"

namespace xmlc {

using LabelSets = std::map<DocId, std::vector<LabelId>>;

struct EvalPair {
    LabelSets predictions;
    LabelSets gold;
};

struct LabelCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    /// 2tp / (2tp + fp + fn), 0 when the denominator is 0.
    [[nodiscard]] double f1() const noexcept;
};

/// Confusion counts for every label predicted or gold on the gold documents.
std::map<LabelId, LabelCounts> label_counts(const EvalPair& pair);

/// Mean F1 over labels occurring in gold. Predicted-only labels are excluded
/// from the mean. Throws std::invalid_argument on an empty gold map.
double macro_fscore(const EvalPair& pair);

/// F1 of the pooled counts. Throws std::invalid_argument on empty gold.
double micro_fscore(const EvalPair& pair);

/// Mean per-document |P & G| / |P | G|, 1 for two empty sets; 0 without documents.
double mean_jaccard(const EvalPair& pair);

/// Mean binary-relevance NDCG@5 over gold documents with non-empty gold.
double ndcg_at_5(const LabelSets& ranked, const LabelSets& gold);

enum class SurrogateVariant { Mafs, Mafs2, Mafs3 };

struct SurrogateConfig {
    SurrogateVariant variant = SurrogateVariant::Mafs;
    double missing_label_penalty = 0.0;

    /// Mafs2 -> 0.5, Mafs3 -> 1.0.
    static SurrogateConfig preset(SurrogateVariant v);
};

/// macro_fscore minus penalty * (false positives on labels absent from gold)
/// / |universe|, clamped to [0, 1].
double surrogate_mafs(const EvalPair& pair, const std::set<LabelId>& universe, const SurrogateConfig& cfg);

enum class Measure { Mafs, Mafs2, Mafs3, Mifs, Mjac, Ndcg5 };

std::string to_string(Measure m);
Measure measure_from_string(const std::string& name);

/// Evaluates `m`. `ranked` is used by Ndcg5 only; `universe` by the surrogates.
double evaluate_measure(Measure m, const EvalPair& pair, const LabelSets& ranked, const std::set<LabelId>& universe);

}  // namespace xmlc
