#include "xmlc/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "xmlc/parallel.hpp"

namespace xmlc {

namespace {

constexpr double kMaxTerm = 4294967296.0;  // 2^32

InvertedIndex::FixedSum quantize(double v) {
    return static_cast<InvertedIndex::FixedSum>(std::nearbyint(std::ldexp(v, InvertedIndex::kFixedBits)));
}

/// Exact x * lift on the fixed-point grid (up to bits below 2^-88).
InvertedIndex::FixedSum fixed_product(double x, double lift) {
    const double hi = x * lift;
    if (!(std::abs(hi) < kMaxTerm)) throw std::overflow_error("inverted index: score term out of range");
    const double lo = std::fma(x, lift, -hi);
    return quantize(hi) + quantize(lo);
}

double from_fixed(InvertedIndex::FixedSum v) {
    return std::ldexp(static_cast<double>(v), -InvertedIndex::kFixedBits);
}

}  // namespace

InvertedIndex::InvertedIndex(const SgmModel& model) : model_(&model) {
    const auto& cfg = model.config();
    const auto classes = model.classes();
    const double lambda = cfg.smoothing.jm_lambda;
    const double mu = cfg.smoothing.dirichlet_mu;

    kernel_mode_ = cfg.flags.kernel_densities;
    bm25_kernels_ = cfg.flags.bm25_kernel;
    label_lifts_ = !kernel_mode_ || !cfg.flags.no_backoff;
    if (label_lifts_) {
        if (lambda <= 0) {
            throw std::invalid_argument("inverted index needs jm lambda > 0 for a non-zero background floor");
        }
        log_lambda_ = std::log(lambda);
    }

    class_base_.resize(classes.size());
    base_order_.resize(classes.size());
    for (std::uint32_t i = 0; i < classes.size(); ++i) {
        class_base_[i] = model.log_prior_term(i);
        base_order_[i] = i;
    }
    std::sort(base_order_.begin(), base_order_.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (class_base_[a] != class_base_[b]) return class_base_[a] > class_base_[b];
        return classes[a].id < classes[b].id;
    });

    if (label_lifts_) {
        for (std::uint32_t i = 0; i < classes.size(); ++i) {
            for (const auto& [f, p_node] : model.node_support(i)) {
                const double bg = model.background_prob(f);
                const double p = (1 - lambda) * p_node + lambda * bg;
                postings_[f].push_back({i, std::log(p) - std::log(lambda * bg)});
            }
        }
    }

    if (kernel_mode_) {
        kernels_by_length_.resize(classes.size());
        for (std::uint32_t i = 0; i < classes.size(); ++i) {
            const auto& cls = classes[i];
            for (std::size_t k = 0; k < cls.kernels.size(); ++k) {
                const auto g = static_cast<std::uint32_t>(kernel_class_.size());
                kernel_class_.push_back(i);
                kernel_floor_.push_back(std::log(mu / (cls.kernel_lengths[k] + mu)));
                kernels_by_length_[i].push_back(g);
                for (const auto& [f, c] : cls.kernels[k]) {
                    double lift;
                    if (bm25_kernels_) {
                        lift = c;
                    } else {
                        const double bg = model.background_prob(f);
                        const double prior =
                            cfg.flags.no_backoff ? bg : (1 - lambda) * model.node_prob(i, f) + lambda * bg;
                        lift = std::log(c + mu * prior) - std::log(mu * prior);
                    }
                    kernel_postings_[f].push_back({g, lift});
                }
            }
            std::stable_sort(kernels_by_length_[i].begin(), kernels_by_length_[i].end(),
                             [&](std::uint32_t a, std::uint32_t b) { return kernel_floor_[a] > kernel_floor_[b]; });
        }
    }
}

std::span<const InvertedIndex::Posting> InvertedIndex::postings(FeatureId f) const {
    auto it = postings_.find(f);
    if (it == postings_.end()) return {};
    return it->second;
}

std::span<const InvertedIndex::Posting> InvertedIndex::kernel_postings(FeatureId f) const {
    auto it = kernel_postings_.find(f);
    if (it == kernel_postings_.end()) return {};
    return it->second;
}

std::size_t InvertedIndex::num_postings() const noexcept {
    std::size_t n = 0;
    for (const auto& [f, p] : postings_) n += p.size();
    for (const auto& [f, p] : kernel_postings_) n += p.size();
    return n;
}

PredictionList InvertedIndex::score(const SparseDocument& weighted, std::size_t top_k) const {
    Scorer scorer(*this);
    return scorer.score(weighted, top_k);
}

// ---------------------------------------------------------------------------

InvertedIndex::Scorer::Scorer(const InvertedIndex& index) : index_(index) {
    const auto n = index.class_base_.size();
    class_sum_.assign(n, 0);
    class_touched_.assign(n, 0);
    kernel_sum_.assign(index.kernel_class_.size(), 0);
    kernel_touched_.assign(index.kernel_class_.size(), 0);
    touched_by_class_.resize(index.kernel_mode_ ? n : 0);
}

InvertedIndex::Scorer::DocTerms InvertedIndex::Scorer::accumulate(const SparseDocument& weighted) {
    DocTerms terms;
    const auto& model = *index_.model_;
    for (const auto& [f, x] : weighted.features) {
        const double bg = model.background_prob(f);
        if (bg <= 0) continue;
        terms.shared += x * std::log(bg);
        terms.mass += x;
        if (index_.label_lifts_) {
            for (const auto& p : index_.postings(f)) {
                if (!class_touched_[p.target]) {
                    class_touched_[p.target] = 1;
                    touched_classes_.push_back(p.target);
                }
                class_sum_[p.target] += fixed_product(x, p.lift);
            }
        }
        if (index_.kernel_mode_) {
            for (const auto& p : index_.kernel_postings(f)) {
                if (!kernel_touched_[p.target]) {
                    kernel_touched_[p.target] = 1;
                    touched_kernels_.push_back(p.target);
                }
                kernel_sum_[p.target] += fixed_product(x, p.lift);
            }
        }
    }
    if (index_.kernel_mode_) {
        for (auto g : touched_kernels_) touched_by_class_[index_.kernel_class_[g]].push_back(g);
    }
    return terms;
}

void InvertedIndex::Scorer::reset() {
    for (auto t : touched_classes_) {
        class_sum_[t] = 0;
        class_touched_[t] = 0;
    }
    touched_classes_.clear();
    for (auto g : touched_kernels_) {
        kernel_sum_[g] = 0;
        kernel_touched_[g] = 0;
        touched_by_class_[index_.kernel_class_[g]].clear();
    }
    touched_kernels_.clear();
}

double InvertedIndex::Scorer::label_part(std::size_t cls, const DocTerms& terms) const {
    if (!index_.label_lifts_) return terms.shared;
    return terms.shared + terms.mass * index_.log_lambda_ + from_fixed(class_sum_[cls]);
}

double InvertedIndex::Scorer::kernel_class_score(std::size_t cls, const DocTerms& terms) {
    const auto& touched = touched_by_class_[cls];
    const auto& by_length = index_.kernels_by_length_[cls];

    if (index_.bm25_kernels_) {
        double best = touched.size() < by_length.size() ? 0.0 : -std::numeric_limits<double>::infinity();
        for (auto g : touched) best = std::max(best, from_fixed(kernel_sum_[g]));
        return index_.class_base_[cls] + best;
    }

    const std::size_t k = std::min(index_.model_->config().kernel_top_k, by_length.size());
    const double base = label_part(cls, terms);
    buffer_.clear();
    for (auto g : touched) buffer_.push_back(base + terms.mass * index_.kernel_floor_[g] + from_fixed(kernel_sum_[g]));
    std::size_t untouched = 0;
    for (auto g : by_length) {
        if (untouched == k) break;
        if (kernel_touched_[g]) continue;
        buffer_.push_back(base + terms.mass * index_.kernel_floor_[g]);
        ++untouched;
    }
    std::sort(buffer_.begin(), buffer_.end(), std::greater<>());
    const double top = buffer_.front();
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) sum += std::exp(buffer_[i] - top);
    return index_.class_base_[cls] + top + std::log(sum / static_cast<double>(k));
}

PredictionList InvertedIndex::Scorer::score(const SparseDocument& weighted, std::size_t top_k) {
    PredictionList out;
    out.doc_id = weighted.doc_id;
    const auto classes = index_.model_->classes();
    const auto terms = accumulate(weighted);

    std::vector<ScoredClass> candidates;
    if (!index_.kernel_mode_) {
        // Untouched classes share every term except the prior, so only the
        // best top_k of them by prior can enter the result.
        candidates.reserve(touched_classes_.size() + top_k);
        for (auto t : touched_classes_) {
            candidates.push_back({classes[t].id, index_.class_base_[t] + label_part(t, terms)});
        }
        std::size_t added = 0;
        for (auto t : index_.base_order_) {
            if (added == top_k) break;
            if (class_touched_[t]) continue;
            candidates.push_back({classes[t].id, index_.class_base_[t] + label_part(t, terms)});
            ++added;
        }
    } else {
        candidates.reserve(classes.size());
        for (std::size_t t = 0; t < classes.size(); ++t) {
            candidates.push_back({classes[t].id, kernel_class_score(t, terms)});
        }
    }
    reset();

    const auto n = std::min(top_k, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(),
                      ranks_before);
    candidates.resize(n);
    out.ranked = std::move(candidates);
    return out;
}

std::vector<double> InvertedIndex::Scorer::score_all(const SparseDocument& weighted) {
    const auto n = index_.class_base_.size();
    std::vector<double> out(n);
    const auto terms = accumulate(weighted);
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = index_.kernel_mode_ ? kernel_class_score(t, terms) : index_.class_base_[t] + label_part(t, terms);
    }
    reset();
    return out;
}

PredictionList score_document(const InvertedIndex& index, const SparseDocument& weighted, std::size_t top_k) {
    return index.score(weighted, top_k);
}

// ---------------------------------------------------------------------------

std::vector<ScoredClass> label_ranking(const PredictionList& pred, const SgmModel& model) {
    const auto* ps = model.powerset();
    if (!ps) return pred.ranked;
    std::vector<ScoredClass> out;
    std::vector<LabelId> seen;
    for (const auto& [meta, score] : pred.ranked) {
        for (auto label : ps->decode(meta)) {
            if (std::find(seen.begin(), seen.end(), label) != seen.end()) continue;
            seen.push_back(label);
            out.push_back({label, score});
        }
    }
    return out;
}

std::vector<LabelId> predict_per_document(const PredictionList& pred, const SgmModel& model,
                                          const PredictionPolicy& policy) {
    if (pred.ranked.empty()) return {};
    std::vector<LabelId> out;
    if (const auto* ps = model.powerset()) {
        auto s = ps->decode(pred.ranked.front().cls);
        return {s.begin(), s.end()};
    }
    const double top = pred.ranked.front().score;
    out.push_back(pred.ranked.front().cls);
    for (std::size_t i = 1; i < pred.ranked.size(); ++i) {
        if (std::exp(pred.ranked[i].score - top) >= policy.relative_threshold) out.push_back(pred.ranked[i].cls);
    }
    std::sort(out.begin(), out.end());
    return out;
}

// ---------------------------------------------------------------------------

std::size_t InstantiateConfig::capacity(std::uint64_t label_freq) const {
    const double c = std::ceil(instantiate_weight * static_cast<double>(label_freq));
    return c < 1 ? 1 : static_cast<std::size_t>(c);
}

void InstantiateConfig::validate() const {
    if (!(instantiate_weight > 0)) throw std::invalid_argument("instantiate weight must be > 0");
    if (!(instantiate_threshold >= 0)) throw std::invalid_argument("instantiate threshold must be >= 0");
    if (top_k_labels_per_doc == 0) throw std::invalid_argument("top-k labels per document must be >= 1");
}

void BoundedInstanceList::offer(const TransposedEntry& e) {
    // heap ordered so that the front is the worst retained entry
    if (heap_.size() < capacity_) {
        heap_.push_back(e);
        std::push_heap(heap_.begin(), heap_.end(), entry_before);
        return;
    }
    if (!entry_before(e, heap_.front())) return;
    std::pop_heap(heap_.begin(), heap_.end(), entry_before);
    heap_.back() = e;
    std::push_heap(heap_.begin(), heap_.end(), entry_before);
}

std::vector<TransposedEntry> BoundedInstanceList::sorted() const {
    auto out = heap_;
    std::sort(out.begin(), out.end(), entry_before);
    return out;
}

TransposedPrediction predict_transposed(const InvertedIndex& index, std::span<const SparseDocument> docs,
                                        const InstantiateConfig& icfg, const LabelStats& stats,
                                        std::size_t workers) {
    icfg.validate();
    const auto& model = index.model();
    workers = std::max<std::size_t>(1, std::min(workers, docs.size()));
    std::vector<std::map<LabelId, BoundedInstanceList>> partial(workers);

    run_chunks(docs.size(), workers, [&](std::size_t w, std::size_t lo, std::size_t hi) {
        InvertedIndex::Scorer scorer(index);
        auto& lists = partial[w];
        for (std::size_t i = lo; i < hi; ++i) {
            const auto pred = scorer.score(model.weight(docs[i]), icfg.top_k_labels_per_doc);
            const auto ranking = label_ranking(pred, model);
            for (std::size_t r = 0; r < ranking.size(); ++r) {
                const double s = 1.0 / static_cast<double>(r + 1);
                if (s < icfg.instantiate_threshold) break;
                const auto label = ranking[r].cls;
                auto it = lists.find(label);
                if (it == lists.end()) {
                    it = lists.emplace(label, BoundedInstanceList(icfg.capacity(stats.frequency(label)))).first;
                }
                it->second.offer({docs[i].doc_id, s, ranking[r].score});
            }
        }
    });

    TransposedPrediction out;
    for (auto& lists : partial) {
        for (auto& [label, list] : lists) {
            auto sorted = list.sorted();
            auto& dst = out.lists[label];
            dst.insert(dst.end(), sorted.begin(), sorted.end());
        }
    }
    for (auto& [label, entries] : out.lists) {
        std::sort(entries.begin(), entries.end(), entry_before);
        entries.resize(std::min(entries.size(), icfg.capacity(stats.frequency(label))));
    }
    return out;
}

std::vector<PredictionList> predict_documents(const InvertedIndex& index, std::span<const SparseDocument> docs,
                                              std::size_t top_k, std::size_t workers) {
    std::vector<PredictionList> out(docs.size());
    run_chunks(docs.size(), workers, [&](std::size_t, std::size_t lo, std::size_t hi) {
        InvertedIndex::Scorer scorer(index);
        for (std::size_t i = lo; i < hi; ++i) out[i] = scorer.score(index.model().weight(docs[i]), top_k);
    });
    return out;
}

}  // namespace xmlc
