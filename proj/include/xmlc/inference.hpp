#pragma once

// Inverted-index scoring of documents against an SgmModel.
//
// For a weighted document x and class t the log score decomposes as
//
//   score(t|x) = ps ln prior(t) + sum_w x_w ln(lambda p_bg(w))
//              + sum_{w in x and t} x_w [ln p(w|t) - ln(lambda p_bg(w))]
//
// so only the bracketed lifts need to be stored, keyed by feature. Kernel
// densities decompose the same way per training document, with the class
// score taken as the log of the mean of the top-K kernel likelihoods.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "xmlc/corpus.hpp"
#include "xmlc/model.hpp"

namespace xmlc {

struct ScoredClass {
    ClassId cls;
    double score;
};

/// Ranked by (score desc, class asc).
struct PredictionList {
    DocId doc_id = 0;
    std::vector<ScoredClass> ranked;
};

/// True when `a` ranks before `b`.
inline bool ranks_before(const ScoredClass& a, const ScoredClass& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.cls < b.cls;
}

class InvertedIndex {
public:
    struct Posting {
        std::uint32_t target;  // class index, or kernel index for kernel postings
        double lift;
    };

    /// Throws std::invalid_argument when the decomposition needs a zero
    /// background weight (lambda = 0). The model must outlive the index.
    explicit InvertedIndex(const SgmModel& model);

    [[nodiscard]] const SgmModel& model() const noexcept { return *model_; }
    [[nodiscard]] std::span<const Posting> postings(FeatureId f) const;
    [[nodiscard]] std::span<const Posting> kernel_postings(FeatureId f) const;
    [[nodiscard]] std::size_t num_postings() const noexcept;

    /// Lift sums are accumulated exactly in fixed point (2^-88 resolution):
    /// each product x * lift enters as its exact two-term expansion. A class
    /// score then does not depend on the order of the document's features, and
    /// classes whose terms differ only in grouping (2 L versus L + L) tie
    /// exactly. Single terms must stay below 2^32 in magnitude.
    using FixedSum = __int128;
    static constexpr int kFixedBits = 88;

    /// Reusable per-thread scratch space.
    class Scorer {
    public:
        explicit Scorer(const InvertedIndex& index);

        /// Top `top_k` classes of a document already weighted by the model.
        PredictionList score(const SparseDocument& weighted, std::size_t top_k);

        /// Scores of every class, in model class order.
        std::vector<double> score_all(const SparseDocument& weighted);

    private:
        struct DocTerms {
            double shared = 0;  // sum x_w ln p_bg(w)
            double mass = 0;    // sum x_w over the same features
        };
        DocTerms accumulate(const SparseDocument& weighted);
        void reset();
        double kernel_class_score(std::size_t cls, const DocTerms& terms);
        double label_part(std::size_t cls, const DocTerms& terms) const;

        const InvertedIndex& index_;
        std::vector<FixedSum> class_sum_;
        std::vector<char> class_touched_;
        std::vector<std::uint32_t> touched_classes_;
        std::vector<FixedSum> kernel_sum_;
        std::vector<char> kernel_touched_;
        std::vector<std::uint32_t> touched_kernels_;
        std::vector<std::vector<std::uint32_t>> touched_by_class_;
        std::vector<double> buffer_;
    };

    PredictionList score(const SparseDocument& weighted, std::size_t top_k) const;

private:
    const SgmModel* model_;
    bool kernel_mode_ = false;
    bool bm25_kernels_ = false;
    bool label_lifts_ = false;
    double log_lambda_ = 0;
    std::unordered_map<FeatureId, std::vector<Posting>> postings_;
    std::unordered_map<FeatureId, std::vector<Posting>> kernel_postings_;
    std::vector<double> class_base_;             // ps ln prior
    std::vector<std::uint32_t> base_order_;      // classes by (base desc, id asc)
    std::vector<std::uint32_t> kernel_class_;
    std::vector<double> kernel_floor_;           // ln(mu / (len + mu))
    std::vector<std::vector<std::uint32_t>> kernels_by_length_;
};

/// Top `top_k` classes of a document already weighted by the model.
PredictionList score_document(const InvertedIndex& index, const SparseDocument& weighted, std::size_t top_k);

/// Label ranking of a prediction: identity for label models; under label
/// powerset a label takes the rank and score of the first meta-class that
/// contains it.
std::vector<ScoredClass> label_ranking(const PredictionList& pred, const SgmModel& model);

struct PredictionPolicy {
    /// Labels whose relative probability exp(score - top) reaches this value
    /// are predicted; at least one label is always predicted.
    double relative_threshold = 1.0;
};

/// Predicted label set, sorted ascending.
std::vector<LabelId> predict_per_document(const PredictionList& pred, const SgmModel& model,
                                          const PredictionPolicy& policy);

// ---------------------------------------------------------------------------
// Transposed (per-label) prediction
// ---------------------------------------------------------------------------

struct InstantiateConfig {
    double instantiate_weight = 1.0;     // iw > 0
    double instantiate_threshold = 0.0;  // it >= 0, on the 1/rank score
    std::size_t top_k_labels_per_doc = 20;

    /// max(1, ceil(iw * label_freq))
    [[nodiscard]] std::size_t capacity(std::uint64_t label_freq) const;
    void validate() const;
};

struct TransposedEntry {
    DocId doc;
    double score;     // 1 / rank of the label within the document
    double tiebreak;  // underlying log score

    friend bool operator==(const TransposedEntry&, const TransposedEntry&) = default;
};

/// Orders by (score desc, tiebreak desc, doc asc).
inline bool entry_before(const TransposedEntry& a, const TransposedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tiebreak != b.tiebreak) return a.tiebreak > b.tiebreak;
    return a.doc < b.doc;
}

/// Fixed-capacity list keeping the best entries under entry_before.
class BoundedInstanceList {
public:
    explicit BoundedInstanceList(std::size_t capacity = 1) : capacity_(capacity) {}

    void offer(const TransposedEntry& e);
    [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
    [[nodiscard]] std::size_t size() const noexcept { return heap_.size(); }

    /// Sorted best first.
    [[nodiscard]] std::vector<TransposedEntry> sorted() const;

private:
    std::size_t capacity_;
    std::vector<TransposedEntry> heap_;  // worst entry at the front
};

struct TransposedPrediction {
    std::map<LabelId, std::vector<TransposedEntry>> lists;

    friend bool operator==(const TransposedPrediction&, const TransposedPrediction&) = default;
};

/// Documents are raw; they are weighted by the model internally. The result
/// is identical for every worker count and document order.
TransposedPrediction predict_transposed(const InvertedIndex& index, std::span<const SparseDocument> docs,
                                        const InstantiateConfig& icfg, const LabelStats& stats,
                                        std::size_t workers = 1);

/// Per-document predictions for raw documents, computed with `workers`
/// threads; output order follows `docs`.
std::vector<PredictionList> predict_documents(const InvertedIndex& index, std::span<const SparseDocument> docs,
                                              std::size_t top_k, std::size_t workers = 1);

}  // namespace xmlc
