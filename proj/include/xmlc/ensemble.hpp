#pragma once

// Feature-weighted linear stacking of per-label instance lists.
//
// Each base classifier contributes a transposed output (label -> ranked
// documents). For every label a metafeature vector is computed per
// classifier, a per-classifier ridge regressor maps it to a vote weight, and
// the weighted votes select the documents assigned to the label.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "xmlc/corpus.hpp"
#include "xmlc/metrics.hpp"
#include "xmlc/result_io.hpp"
#include "xmlc/ridge.hpp"

namespace xmlc {

using InstanceList = std::vector<InstanceScore>;

struct ClassifierOutput {
    std::uint32_t id = 0;
    /// Lists ordered by (score desc, doc asc).
    std::map<LabelId, InstanceList> lists;

    [[nodiscard]] const InstanceList& list(LabelId label) const;
};

ClassifierOutput make_classifier_output(std::uint32_t id, std::span<const LabelResult> results);
ClassifierOutput load_classifier_output(std::uint32_t id, const std::filesystem::path& path);

/// Sorted union of labels over all outputs.
std::vector<LabelId> active_labels(std::span<const ClassifierOutput> outputs);

/// Unnormalized metafeatures of one classifier for one label.
struct Metafeatures {
    double label_prob = 0;   // label_freq < 10
    double label_prob2 = 0;  // label_freq > 50
    double uniq_instance_sets = 0;
    double max_votes = 0;
    double min_inst_freq = 0;   // fewest classifiers agreeing on one of our instances
    double max_inst_freq = 0;   // most classifiers agreeing on one of our instances
    double min_inst_count = 0;  // classifiers agreeing on our lowest-ranked instance
    double inst_count = 0;
    double empty_set = 0;
    double set_count = 0;
    double mode_prec = 0;
    double mode_rec = 0;
    double mode_jaccard = 0;
    std::vector<double> max_prec;  // one per other classifier, in id order
};

inline constexpr std::size_t kBaseMetafeatures = 13;

inline constexpr std::size_t metafeature_dim(std::size_t num_classifiers) {
    return kBaseMetafeatures + (num_classifiers == 0 ? 0 : num_classifiers - 1);
}

/// Raw metafeatures for every classifier. `lists[i]` is classifier i's list
/// for the label (possibly empty).
std::vector<Metafeatures> compute_metafeatures(std::span<const InstanceList* const> lists, std::uint64_t label_freq);

/// Counts mapped through log1p and divided by log1p(M) (vote-like counts) or
/// log1p(largest instance count for the label); ratios and indicators kept.
std::vector<std::vector<double>> normalize_metafeatures(std::span<const Metafeatures> raw);

/// F1 of `list` against `gold` plus 1e-3 times average precision.
double oracle_fitness(const InstanceList& list, std::span<const DocId> gold);

/// 1 spread uniformly over the classifiers whose fitness is within 1e-12 of
/// the best; uniform over all when every fitness is 0.
std::vector<double> approximate_oracle_weights(std::span<const InstanceList* const> lists, std::span<const DocId> gold);

struct VoteModel {
    std::vector<RidgeModel> regressors;
    double lambda = kDefaultRidgeLambda;

    [[nodiscard]] std::size_t num_classifiers() const noexcept { return regressors.size(); }
    /// Predicted weights clamped at 0.
    [[nodiscard]] std::vector<double> predict(const std::vector<std::vector<double>>& features) const;
};

struct SelectionConfig {
    double prior_multiplier = 0.95;
    double vote_threshold_frac = 0.5;

    void validate() const;
};

/// max(1, round(prior_multiplier * label_freq * test_size / train_size)).
std::size_t initial_selection_size(const SelectionConfig& cfg, std::uint64_t label_freq, std::uint64_t test_size,
                                   std::uint64_t train_size);

/// Weights divided by their maximum and rounded to a 2^-30 grid, so that any
/// positive rescaling yields bit-identical votes. All-zero weights become
/// uniform.
std::vector<double> canonical_vote_weights(std::span<const double> weights);

/// Weighted vote over the lists followed by prior-sized selection and the
/// relative-threshold extension. Returned in (score desc, doc asc) order.
InstanceList vote_and_select(std::span<const InstanceList* const> lists, std::span<const double> weights,
                             std::size_t n0, const SelectionConfig& cfg);

struct CombineConfig {
    double lambda = kDefaultRidgeLambda;
    SelectionConfig selection;
    std::size_t workers = 1;
};

/// Fits one regressor per classifier from the outputs on the ensemble
/// training documents and their gold label sets.
VoteModel fit_vote_regressors(std::span<const ClassifierOutput> outputs, const LabelSets& gold, const LabelStats& stats,
                              const CombineConfig& cfg, const std::vector<LabelId>* labels = nullptr);

/// Selections for every active label (or for `labels` when given).
std::vector<LabelResult> combine(std::span<const ClassifierOutput> outputs, const VoteModel& model,
                                 const LabelStats& stats, std::uint64_t test_size, const CombineConfig& cfg,
                                 const std::vector<LabelId>* labels = nullptr);

/// Mean macro-F over `folds` label folds: the regressors are fitted on the
/// other folds and the held-out labels are selected on the same documents.
double cross_validate(std::span<const ClassifierOutput> outputs, const LabelSets& gold, const LabelStats& stats,
                      const CombineConfig& cfg, int folds, std::uint64_t seed);

struct SelectionStep {
    std::vector<std::uint32_t> kept;
    double score;
};

/// Greedy removal / re-addition of classifiers by cross-validated macro-F;
/// accepts the best strict improvement each step. `trace` receives every
/// accepted state starting with the full set.
std::vector<std::uint32_t> select_classifiers(std::span<const ClassifierOutput> outputs, const LabelSets& gold,
                                              const LabelStats& stats, const CombineConfig& cfg, int folds,
                                              std::uint64_t seed, std::vector<SelectionStep>* trace = nullptr);

}  // namespace xmlc
