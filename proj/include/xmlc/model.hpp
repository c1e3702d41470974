#pragma once

// Sparse generative models: Multinomial Naive Bayes with Jelinek-Mercer
// smoothing towards a background distribution, optional interpolation with a
// randomly chosen hierarchy parent, Dirichlet-smoothed kernel densities over
// training documents, label powerset encoding, and parameter pruning.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "xmlc/corpus.hpp"
#include "xmlc/weighting.hpp"

namespace xmlc {

/// Target of a model: a label, or a meta-class under label powerset.
using ClassId = std::uint32_t;

enum class BackgroundKind { Uniform, UniformCollection };

struct SmoothingConfig {
    double jm_lambda = 0.99;      // weight of the background in [0,1)
    double dirichlet_mu = 32.0;   // kernel prior mass, > 0
    BackgroundKind background = BackgroundKind::Uniform;
    double collection_mix = 0.5;  // beta, used by UniformCollection
    double hierarchy_mix = 0.0;   // gamma, used with hierarchy smoothing

    void validate() const;
};

struct PruningConfig {
    double min_count = 0.0;              // drop features with raw collection count below
    std::uint64_t min_label_count = 0;   // drop classes with fewer training documents
    double precomputed_prune = 0.0;      // drop final weighted counts below (0: zeros only)
    double online_prune = 0.0;           // periodic floor during accumulation (0: off)
    std::size_t online_prune_interval = 1000;

    void validate() const;
};

struct ModelFlags {
    bool kernel_densities = false;
    bool no_backoff = false;      // kernels back off to the background, not the label model
    bool bm25_kernel = false;     // kernel similarity is a weighted dot product, label score is the max
    bool label_powerset = false;
    bool hierarchy_smoothing = false;
};

struct ModelConfig {
    WeightingConfig weighting;
    SmoothingConfig smoothing;
    PruningConfig pruning;
    ModelFlags flags;
    double prior_scale = 1.0;
    std::size_t kernel_top_k = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Bijection between distinct label sets and dense meta-class ids.
class LabelPowerset {
public:
    /// Id of the set, adding it when new. `labels` must be sorted and unique.
    ClassId encode(std::span<const LabelId> labels);
    [[nodiscard]] std::optional<ClassId> find(std::span<const LabelId> labels) const;

    /// Throws std::out_of_range for unknown ids.
    [[nodiscard]] std::span<const LabelId> decode(ClassId meta_class) const;

    [[nodiscard]] std::size_t size() const noexcept { return sets_.size(); }

private:
    std::vector<std::vector<LabelId>> sets_;
    std::map<std::string, ClassId> index_;
};

struct PowersetEncoding {
    Corpus meta_corpus;
    LabelPowerset powerset;
};

/// Every document must be labeled; throws std::invalid_argument otherwise.
PowersetEncoding encode_label_powerset(const Corpus& corpus);
std::vector<LabelId> decode_label_powerset(const LabelPowerset& powerset, ClassId meta_class);

struct ClassModel {
    ClassId id = 0;
    std::uint64_t doc_count = 0;
    double prior = 0.0;                   // doc_count / N
    std::vector<FeatureValue> weights;    // weighted counts, sorted by feature, all > 0
    double norm = 0.0;                    // sum of weights
    std::optional<LabelId> parent;        // chosen hierarchy parent
    std::vector<std::vector<FeatureValue>> kernels;  // weighted training documents
    std::vector<double> kernel_lengths;
};

class SgmModel {
public:
    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] const CollectionStats& weighting_stats() const noexcept { return stats_; }
    [[nodiscard]] std::span<const ClassModel> classes() const noexcept { return classes_; }
    [[nodiscard]] const LabelPowerset* powerset() const noexcept { return powerset_ ? &*powerset_ : nullptr; }
    [[nodiscard]] std::uint64_t num_train_docs() const noexcept { return num_docs_; }

    /// Index into classes(); throws std::out_of_range for unknown classes.
    [[nodiscard]] std::size_t class_index(ClassId id) const;
    [[nodiscard]] bool has_class(ClassId id) const noexcept { return index_.count(id) != 0; }

    [[nodiscard]] std::size_t vocab_size() const noexcept { return background_count_.size(); }
    [[nodiscard]] bool in_vocabulary(FeatureId f) const noexcept { return background_count_.count(f) != 0; }
    /// Vocabulary in ascending feature order.
    [[nodiscard]] std::vector<FeatureId> vocabulary() const;

    [[nodiscard]] double background_prob(FeatureId f) const;

    /// ML(w|l), mixed with ML(w|parent) under hierarchy smoothing.
    [[nodiscard]] double node_prob(std::size_t class_idx, FeatureId f) const;
    /// Non-zero node probabilities of a class, sorted by feature.
    [[nodiscard]] std::vector<FeatureValue> node_support(std::size_t class_idx) const;

    /// (1 - lambda) p_node + lambda p_bg; throws for unknown classes.
    [[nodiscard]] double label_word_prob(ClassId label, FeatureId f) const;

    /// (c(w, d') + mu p_prior(w)) / (len(d') + mu), where p_prior is the
    /// background under no-backoff and the label model otherwise.
    [[nodiscard]] double kernel_doc_prob(ClassId label, std::size_t kernel, FeatureId f) const;

    /// prior_scale * ln(prior).
    [[nodiscard]] double log_prior_term(std::size_t class_idx) const;

    /// Applies the model's weighting to a raw document.
    [[nodiscard]] SparseDocument weight(const SparseDocument& raw) const;

    /// Copy with every label-conditional weight removed.
    [[nodiscard]] SgmModel without_label_conditionals() const;

    /// Parent node weights aggregated from the children choosing that parent.
    [[nodiscard]] const std::vector<FeatureValue>* parent_weights(LabelId parent) const;

    friend SgmModel train_model(const Corpus&, const ModelConfig&, const Hierarchy*);
    friend void save_model(std::ostream&, const SgmModel&);
    friend SgmModel load_model(std::istream&, const std::string&);

private:
    void rebuild_index();
    void rebuild_parents();

    ModelConfig config_;
    CollectionStats stats_;  // doc_freq restricted to the vocabulary
    std::uint64_t num_docs_ = 0;
    std::unordered_map<FeatureId, double> background_count_;
    double background_total_ = 0.0;
    std::vector<ClassModel> classes_;
    std::unordered_map<ClassId, std::size_t> index_;
    std::optional<LabelPowerset> powerset_;
    std::map<LabelId, std::pair<std::vector<FeatureValue>, double>> parents_;
};

/// Single pass over `train`; see ModelConfig for the knobs. Under label
/// powerset every document needs at least one label.
SgmModel train_model(const Corpus& train, const ModelConfig& config, const Hierarchy* hierarchy = nullptr);

/// Line-oriented text format, exact round trip.
void save_model(std::ostream& out, const SgmModel& model);
void save_model(const std::filesystem::path& path, const SgmModel& model);
SgmModel load_model(std::istream& in, const std::string& source_name);
SgmModel load_model(const std::filesystem::path& path);

/// Binary search in a feature-sorted sparse vector; 0 when absent.
double sparse_lookup(std::span<const FeatureValue> v, FeatureId f);

}  // namespace xmlc
