#include "xmlc/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "xmlc/random.hpp"

namespace xmlc {

void SmoothingConfig::validate() const {
    if (!(jm_lambda >= 0 && jm_lambda < 1)) throw std::invalid_argument("smoothing: jm lambda must be in [0,1)");
    if (!(dirichlet_mu > 0)) throw std::invalid_argument("smoothing: dirichlet mu must be > 0");
    if (!(collection_mix >= 0 && collection_mix <= 1)) throw std::invalid_argument("smoothing: collection mix must be in [0,1]");
    if (!(hierarchy_mix >= 0 && hierarchy_mix <= 1)) throw std::invalid_argument("smoothing: hierarchy mix must be in [0,1]");
}

void PruningConfig::validate() const {
    if (!(min_count >= 0)) throw std::invalid_argument("pruning: min count must be >= 0");
    if (!(precomputed_prune >= 0)) throw std::invalid_argument("pruning: precomputed prune must be >= 0");
    if (!(online_prune >= 0)) throw std::invalid_argument("pruning: online prune must be >= 0");
    if (online_prune_interval == 0) throw std::invalid_argument("pruning: online prune interval must be > 0");
}

void ModelConfig::validate() const {
    weighting.validate();
    smoothing.validate();
    pruning.validate();
    if (!std::isfinite(prior_scale)) throw std::invalid_argument("prior scale must be finite");
    if (kernel_top_k == 0) throw std::invalid_argument("kernel top-k must be >= 1");
    if (flags.bm25_kernel && !(flags.kernel_densities && flags.no_backoff)) {
        throw std::invalid_argument("bm25 kernels require kernel densities without back-off");
    }
    if (flags.no_backoff && !flags.kernel_densities) {
        throw std::invalid_argument("no-backoff requires kernel densities");
    }
}

// ---------------------------------------------------------------------------

ClassId LabelPowerset::encode(std::span<const LabelId> labels) {
    auto key = labelset_key(labels);
    auto [it, inserted] = index_.emplace(std::move(key), static_cast<ClassId>(sets_.size()));
    if (inserted) sets_.emplace_back(labels.begin(), labels.end());
    return it->second;
}

std::optional<ClassId> LabelPowerset::find(std::span<const LabelId> labels) const {
    auto it = index_.find(labelset_key(labels));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::span<const LabelId> LabelPowerset::decode(ClassId meta_class) const {
    if (meta_class >= sets_.size()) throw std::out_of_range("unknown meta-class " + std::to_string(meta_class));
    return sets_[meta_class];
}

PowersetEncoding encode_label_powerset(const Corpus& corpus) {
    PowersetEncoding enc;
    enc.meta_corpus.source_name = corpus.source_name + "#powerset";
    enc.meta_corpus.documents.reserve(corpus.size());
    for (const auto& doc : corpus.documents) {
        if (doc.labels.empty()) {
            throw std::invalid_argument("label powerset: document " + std::to_string(doc.doc_id) + " has no labels");
        }
        SparseDocument meta = doc;
        meta.labels = {enc.powerset.encode(doc.labels)};
        enc.meta_corpus.documents.push_back(std::move(meta));
    }
    return enc;
}

std::vector<LabelId> decode_label_powerset(const LabelPowerset& powerset, ClassId meta_class) {
    auto s = powerset.decode(meta_class);
    return {s.begin(), s.end()};
}

// ---------------------------------------------------------------------------

double sparse_lookup(std::span<const FeatureValue> v, FeatureId f) {
    auto it = std::lower_bound(v.begin(), v.end(), f, [](const FeatureValue& a, FeatureId id) { return a.id < id; });
    return (it != v.end() && it->id == f) ? it->value : 0.0;
}

std::size_t SgmModel::class_index(ClassId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown class " + std::to_string(id));
    return it->second;
}

std::vector<FeatureId> SgmModel::vocabulary() const {
    std::vector<FeatureId> v;
    v.reserve(background_count_.size());
    for (const auto& [f, c] : background_count_) v.push_back(f);
    std::sort(v.begin(), v.end());
    return v;
}

double SgmModel::background_prob(FeatureId f) const {
    const double uniform = background_count_.empty() ? 0.0 : 1.0 / static_cast<double>(background_count_.size());
    if (config_.smoothing.background == BackgroundKind::Uniform) return uniform;
    const double beta = config_.smoothing.collection_mix;
    auto it = background_count_.find(f);
    const double coll = (it == background_count_.end() || background_total_ <= 0) ? 0.0 : it->second / background_total_;
    return (1 - beta) * uniform + beta * coll;
}

const std::vector<FeatureValue>* SgmModel::parent_weights(LabelId parent) const {
    auto it = parents_.find(parent);
    return it == parents_.end() ? nullptr : &it->second.first;
}

double SgmModel::node_prob(std::size_t class_idx, FeatureId f) const {
    const auto& cls = classes_.at(class_idx);
    const double ml = cls.norm > 0 ? sparse_lookup(cls.weights, f) / cls.norm : 0.0;
    if (!config_.flags.hierarchy_smoothing || !cls.parent) return ml;
    const auto& [pw, pnorm] = parents_.at(*cls.parent);
    const double ml_parent = pnorm > 0 ? sparse_lookup(pw, f) / pnorm : 0.0;
    const double gamma = config_.smoothing.hierarchy_mix;
    return (1 - gamma) * ml + gamma * ml_parent;
}

std::vector<FeatureValue> SgmModel::node_support(std::size_t class_idx) const {
    const auto& cls = classes_.at(class_idx);
    std::vector<FeatureValue> out;
    const bool mix = config_.flags.hierarchy_smoothing && cls.parent;
    if (!mix) {
        out.reserve(cls.weights.size());
        for (const auto& w : cls.weights) out.push_back({w.id, w.value / cls.norm});
        return out;
    }
    const auto& [pw, pnorm] = parents_.at(*cls.parent);
    const double gamma = config_.smoothing.hierarchy_mix;
    auto own = [&](double w) { return cls.norm > 0 ? w / cls.norm : 0.0; };
    auto up = [&](double w) { return pnorm > 0 ? w / pnorm : 0.0; };
    std::size_t i = 0, j = 0;
    while (i < cls.weights.size() || j < pw.size()) {
        FeatureId f;
        double ml = 0, ml_parent = 0;
        if (j >= pw.size() || (i < cls.weights.size() && cls.weights[i].id < pw[j].id)) {
            f = cls.weights[i].id;
            ml = own(cls.weights[i++].value);
        } else if (i >= cls.weights.size() || pw[j].id < cls.weights[i].id) {
            f = pw[j].id;
            ml_parent = up(pw[j++].value);
        } else {
            f = cls.weights[i].id;
            ml = own(cls.weights[i++].value);
            ml_parent = up(pw[j++].value);
        }
        const double p = (1 - gamma) * ml + gamma * ml_parent;
        if (p > 0) out.push_back({f, p});
    }
    return out;
}

double SgmModel::label_word_prob(ClassId label, FeatureId f) const {
    const auto idx = class_index(label);
    const double lambda = config_.smoothing.jm_lambda;
    return (1 - lambda) * node_prob(idx, f) + lambda * background_prob(f);
}

double SgmModel::kernel_doc_prob(ClassId label, std::size_t kernel, FeatureId f) const {
    if (!config_.flags.kernel_densities) throw std::logic_error("model has no kernel densities");
    const auto& cls = classes_.at(class_index(label));
    if (kernel >= cls.kernels.size()) throw std::out_of_range("unknown kernel " + std::to_string(kernel));
    const double mu = config_.smoothing.dirichlet_mu;
    const double prior = config_.flags.no_backoff ? background_prob(f) : label_word_prob(label, f);
    return (sparse_lookup(cls.kernels[kernel], f) + mu * prior) / (cls.kernel_lengths[kernel] + mu);
}

double SgmModel::log_prior_term(std::size_t class_idx) const {
    return config_.prior_scale * std::log(classes_.at(class_idx).prior);
}

SparseDocument SgmModel::weight(const SparseDocument& raw) const {
    return weighted_document(raw, config_.weighting, stats_);
}

SgmModel SgmModel::without_label_conditionals() const {
    SgmModel copy = *this;
    for (auto& cls : copy.classes_) {
        cls.weights.clear();
        cls.norm = 0;
    }
    copy.rebuild_parents();
    return copy;
}

void SgmModel::rebuild_index() {
    index_.clear();
    for (std::size_t i = 0; i < classes_.size(); ++i) index_.emplace(classes_[i].id, i);
}

void SgmModel::rebuild_parents() {
    parents_.clear();
    if (!config_.flags.hierarchy_smoothing) return;
    std::map<LabelId, std::unordered_map<FeatureId, double>> acc;
    for (const auto& cls : classes_) {
        if (!cls.parent) continue;
        auto& a = acc[*cls.parent];
        for (const auto& w : cls.weights) a[w.id] += w.value;
    }
    for (auto& [parent, counts] : acc) {
        std::vector<FeatureValue> v;
        v.reserve(counts.size());
        for (const auto& [f, c] : counts) v.push_back({f, c});
        std::sort(v.begin(), v.end(), [](const FeatureValue& a, const FeatureValue& b) { return a.id < b.id; });
        double norm = 0;
        for (const auto& x : v) norm += x.value;
        parents_.emplace(parent, std::make_pair(std::move(v), norm));
    }
}

// ---------------------------------------------------------------------------

namespace {

struct Accumulator {
    std::uint64_t doc_count = 0;
    std::unordered_map<FeatureId, double> counts;
    std::vector<std::vector<FeatureValue>> kernels;
};

void prune_below(std::unordered_map<FeatureId, double>& counts, double floor) {
    for (auto it = counts.begin(); it != counts.end();) {
        if (it->second < floor || it->second <= 0) {
            it = counts.erase(it);
        } else {
            ++it;
        }
    }
}

}  // namespace

SgmModel train_model(const Corpus& train, const ModelConfig& config, const Hierarchy* hierarchy) {
    config.validate();
    if (train.empty()) throw std::invalid_argument("train_model: empty training corpus");

    SgmModel model;
    model.config_ = config;
    model.num_docs_ = train.size();

    // Class targets per document.
    std::vector<std::vector<ClassId>> targets(train.size());
    if (config.flags.label_powerset) {
        LabelPowerset ps;
        for (std::size_t i = 0; i < train.size(); ++i) {
            const auto& doc = train.documents[i];
            if (doc.labels.empty()) {
                throw std::invalid_argument("label powerset: document " + std::to_string(doc.doc_id) + " has no labels");
            }
            targets[i] = {ps.encode(doc.labels)};
        }
        model.powerset_ = std::move(ps);
    } else {
        for (std::size_t i = 0; i < train.size(); ++i) targets[i] = train.documents[i].labels;
    }

    std::map<ClassId, Accumulator> acc;
    for (const auto& t : targets) {
        for (auto c : t) ++acc[c].doc_count;
    }
    for (auto it = acc.begin(); it != acc.end();) {
        it = it->second.doc_count < config.pruning.min_label_count ? acc.erase(it) : std::next(it);
    }

    const auto raw_stats = collect_stats(train);
    model.stats_.num_docs = raw_stats.num_docs;
    model.stats_.avg_doc_len = raw_stats.avg_doc_len;
    for (const auto& [f, cc] : raw_stats.collection_count) {
        if (cc >= config.pruning.min_count) {
            model.stats_.doc_freq.emplace(f, raw_stats.df(f));
        }
    }

    const bool keep_conditionals = !(config.flags.kernel_densities && config.flags.no_backoff);
    const double pci = config.pruning.online_prune;

    for (std::size_t i = 0; i < train.size(); ++i) {
        const auto& doc = train.documents[i];
        auto weighted = apply_weighting(doc, config.weighting, raw_stats);
        std::erase_if(weighted, [&](const FeatureValue& f) { return !model.stats_.doc_freq.count(f.id); });
        for (const auto& f : weighted) model.background_count_[f.id] += f.value;

        for (auto c : targets[i]) {
            auto it = acc.find(c);
            if (it == acc.end()) continue;
            if (keep_conditionals) {
                for (const auto& f : weighted) it->second.counts[f.id] += f.value;
            }
            if (config.flags.kernel_densities) it->second.kernels.push_back(weighted);
        }

        if (pci > 0 && (i + 1) % config.pruning.online_prune_interval == 0) {
            for (auto& [c, a] : acc) prune_below(a.counts, pci);
        }
    }
    // summed in feature order so that a reloaded model reproduces it exactly
    for (auto f : model.vocabulary()) model.background_total_ += model.background_count_.at(f);

    for (auto& [c, a] : acc) {
        prune_below(a.counts, config.pruning.precomputed_prune);
        ClassModel cls;
        cls.id = c;
        cls.doc_count = a.doc_count;
        cls.prior = static_cast<double>(a.doc_count) / static_cast<double>(model.num_docs_);
        cls.weights.reserve(a.counts.size());
        for (const auto& [f, w] : a.counts) cls.weights.push_back({f, w});
        std::sort(cls.weights.begin(), cls.weights.end(),
                  [](const FeatureValue& x, const FeatureValue& y) { return x.id < y.id; });
        for (const auto& w : cls.weights) cls.norm += w.value;
        cls.kernels = std::move(a.kernels);
        for (const auto& k : cls.kernels) {
            double len = 0;
            for (const auto& f : k) len += f.value;
            cls.kernel_lengths.push_back(len);
        }
        const bool usable = keep_conditionals ? cls.norm > 0 : !cls.kernels.empty();
        if (!usable) continue;
        if (config.flags.hierarchy_smoothing && hierarchy && !config.flags.label_powerset) {
            auto parents = hierarchy->parents_of(c);
            if (!parents.empty()) {
                Rng rng(derive_seed(config.seed, {0x9a7e, c}));
                cls.parent = parents[uniform_index(rng, parents.size())];
            }
        }
        model.classes_.push_back(std::move(cls));
    }

    model.rebuild_index();
    model.rebuild_parents();
    return model;
}

}  // namespace xmlc
