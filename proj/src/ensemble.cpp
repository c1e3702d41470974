#include "xmlc/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "xmlc/parallel.hpp"
#include "xmlc/random.hpp"

namespace xmlc {

namespace {

const InstanceList kEmptyList;

constexpr std::size_t kLabelBlock = 4096;
constexpr double kOracleEps = 1e-3;
constexpr double kWeightGrid = 1073741824.0;  // 2^30

bool instance_before(const InstanceScore& a, const InstanceScore& b) {
    return a.score != b.score ? a.score > b.score : a.doc < b.doc;
}

std::vector<DocId> doc_set(const InstanceList& list) {
    std::vector<DocId> out;
    out.reserve(list.size());
    for (const auto& inst : list) out.push_back(inst.doc);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::size_t intersection_size(const std::vector<DocId>& a, const std::vector<DocId>& b) {
    std::size_t i = 0, j = 0, n = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++n;
            ++i;
            ++j;
        }
    }
    return n;
}

double log_ratio(double count, double denom) {
    return denom <= 0 ? 0.0 : std::log1p(count) / std::log1p(denom);
}

std::map<LabelId, std::vector<DocId>> gold_by_label(const LabelSets& gold) {
    std::map<LabelId, std::vector<DocId>> out;
    for (const auto& [doc, labels] : gold) {
        for (auto l : labels) out[l].push_back(doc);
    }
    for (auto& [l, docs] : out) {
        std::sort(docs.begin(), docs.end());
        docs.erase(std::unique(docs.begin(), docs.end()), docs.end());
    }
    return out;
}

std::vector<const InstanceList*> lists_for(std::span<const ClassifierOutput> outputs, LabelId label) {
    std::vector<const InstanceList*> out;
    out.reserve(outputs.size());
    for (const auto& o : outputs) out.push_back(&o.list(label));
    return out;
}

std::vector<ClassifierOutput> subset(std::span<const ClassifierOutput> outputs, const std::vector<std::uint32_t>& ids) {
    std::vector<ClassifierOutput> out;
    out.reserve(ids.size());
    for (auto id : ids) {
        auto it = std::find_if(outputs.begin(), outputs.end(), [&](const ClassifierOutput& o) { return o.id == id; });
        if (it == outputs.end()) throw std::out_of_range("no classifier " + std::to_string(id));
        out.push_back(*it);
    }
    return out;
}

}  // namespace

const InstanceList& ClassifierOutput::list(LabelId label) const {
    auto it = lists.find(label);
    return it == lists.end() ? kEmptyList : it->second;
}

ClassifierOutput make_classifier_output(std::uint32_t id, std::span<const LabelResult> results) {
    ClassifierOutput out;
    out.id = id;
    for (const auto& r : results) {
        auto& list = out.lists[r.label];
        list.insert(list.end(), r.instances.begin(), r.instances.end());
    }
    for (auto& [label, list] : out.lists) {
        std::sort(list.begin(), list.end(), instance_before);
        // one entry per document, keeping the best
        std::vector<DocId> seen;
        InstanceList dedup;
        for (const auto& inst : list) {
            auto pos = std::lower_bound(seen.begin(), seen.end(), inst.doc);
            if (pos != seen.end() && *pos == inst.doc) continue;
            seen.insert(pos, inst.doc);
            dedup.push_back(inst);
        }
        list = std::move(dedup);
    }
    return out;
}

ClassifierOutput load_classifier_output(std::uint32_t id, const std::filesystem::path& path) {
    return make_classifier_output(id, read_transposed(path));
}

std::vector<LabelId> active_labels(std::span<const ClassifierOutput> outputs) {
    std::vector<LabelId> out;
    for (const auto& o : outputs) {
        for (const auto& [label, list] : o.lists) {
            if (!list.empty()) out.push_back(label);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<Metafeatures> compute_metafeatures(std::span<const InstanceList* const> lists, std::uint64_t label_freq) {
    const std::size_t m = lists.size();
    std::vector<std::vector<DocId>> sets(m);
    for (std::size_t i = 0; i < m; ++i) sets[i] = doc_set(*lists[i]);

    // cross-classifier vote count per document
    std::vector<DocId> all;
    for (const auto& s : sets) all.insert(all.end(), s.begin(), s.end());
    std::sort(all.begin(), all.end());
    auto votes_of = [&](DocId d) {
        auto [lo, hi] = std::equal_range(all.begin(), all.end(), d);
        return static_cast<double>(hi - lo);
    };

    // group identical sets; order classifiers by their set
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sets[a] < sets[b]; });
    std::vector<std::size_t> set_count(m, 0);
    std::size_t uniq = 0, max_votes = 0;
    std::size_t mode = m;  // classifier holding the modal set
    for (std::size_t g = 0; g < m;) {
        std::size_t h = g;
        while (h < m && sets[order[h]] == sets[order[g]]) ++h;
        ++uniq;
        for (std::size_t k = g; k < h; ++k) set_count[order[k]] = h - g;
        // groups are visited in lexicographic order, so strict > keeps the smallest set on ties
        if (h - g > max_votes) {
            max_votes = h - g;
            mode = order[g];
        }
        g = h;
    }

    std::vector<Metafeatures> out(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& f = out[i];
        const auto& s = sets[i];
        f.label_prob = label_freq < 10 ? 1.0 : 0.0;
        f.label_prob2 = label_freq > 50 ? 1.0 : 0.0;
        f.uniq_instance_sets = static_cast<double>(uniq);
        f.max_votes = static_cast<double>(max_votes);
        f.inst_count = static_cast<double>(s.size());
        f.empty_set = s.empty() ? 1.0 : 0.0;
        f.set_count = static_cast<double>(set_count[i]);
        if (!s.empty()) {
            double lo = votes_of(s.front()), hi = lo;
            for (auto d : s) {
                const double v = votes_of(d);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            f.min_inst_freq = lo;
            f.max_inst_freq = hi;
            f.min_inst_count = votes_of(lists[i]->back().doc);
        }
        const auto& ms = sets[mode];
        const auto inter = static_cast<double>(intersection_size(s, ms));
        const auto uni = static_cast<double>(s.size() + ms.size()) - inter;
        f.mode_prec = s.empty() ? 0.0 : inter / static_cast<double>(s.size());
        f.mode_rec = ms.empty() ? 0.0 : inter / static_cast<double>(ms.size());
        f.mode_jaccard = uni == 0 ? 1.0 : inter / uni;
        f.max_prec.reserve(m - 1);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            const auto denom = std::max(s.size(), sets[j].size());
            f.max_prec.push_back(denom == 0 ? 0.0
                                            : static_cast<double>(intersection_size(s, sets[j])) /
                                                  static_cast<double>(denom));
        }
    }
    return out;
}

std::vector<std::vector<double>> normalize_metafeatures(std::span<const Metafeatures> raw) {
    const auto m = static_cast<double>(raw.size());
    double max_inst = 0;
    for (const auto& f : raw) max_inst = std::max(max_inst, f.inst_count);
    std::vector<std::vector<double>> out;
    out.reserve(raw.size());
    for (const auto& f : raw) {
        std::vector<double> v{
            f.label_prob,
            f.label_prob2,
            log_ratio(f.uniq_instance_sets, m),
            log_ratio(f.max_votes, m),
            log_ratio(f.min_inst_freq, m),
            log_ratio(f.max_inst_freq, m),
            log_ratio(f.min_inst_count, m),
            log_ratio(f.inst_count, max_inst),
            f.empty_set,
            log_ratio(f.set_count, m),
            f.mode_prec,
            f.mode_rec,
            f.mode_jaccard,
        };
        v.insert(v.end(), f.max_prec.begin(), f.max_prec.end());
        out.push_back(std::move(v));
    }
    return out;
}

double oracle_fitness(const InstanceList& list, std::span<const DocId> gold) {
    std::size_t tp = 0;
    double ap = 0;
    std::vector<DocId> seen;
    std::size_t rank = 0;
    for (const auto& inst : list) {
        auto pos = std::lower_bound(seen.begin(), seen.end(), inst.doc);
        if (pos != seen.end() && *pos == inst.doc) continue;
        seen.insert(pos, inst.doc);
        ++rank;
        if (std::binary_search(gold.begin(), gold.end(), inst.doc)) {
            ++tp;
            ap += static_cast<double>(tp) / static_cast<double>(rank);
        }
    }
    const auto fp = rank - tp;
    const auto fn = gold.size() - tp;
    const auto denom = 2 * tp + fp + fn;
    const double f1 = denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
    if (!gold.empty()) ap /= static_cast<double>(gold.size());
    return f1 + kOracleEps * ap;
}

std::vector<double> approximate_oracle_weights(std::span<const InstanceList* const> lists, std::span<const DocId> gold) {
    const std::size_t m = lists.size();
    std::vector<double> fit(m);
    double best = 0;
    for (std::size_t i = 0; i < m; ++i) {
        fit[i] = oracle_fitness(*lists[i], gold);
        best = std::max(best, fit[i]);
    }
    std::vector<double> w(m, 0.0);
    if (m == 0) return w;
    if (best <= 0) {
        std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(m));
        return w;
    }
    std::size_t ties = 0;
    for (double f : fit) ties += best - f <= 1e-12 ? 1 : 0;
    for (std::size_t i = 0; i < m; ++i) w[i] = best - fit[i] <= 1e-12 ? 1.0 / static_cast<double>(ties) : 0.0;
    return w;
}

std::vector<double> VoteModel::predict(const std::vector<std::vector<double>>& features) const {
    if (features.size() != regressors.size()) throw std::invalid_argument("vote model: classifier count mismatch");
    std::vector<double> w(features.size());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::max(0.0, regressors[i].predict(features[i]));
    return w;
}

void SelectionConfig::validate() const {
    if (!(prior_multiplier > 0) || !(vote_threshold_frac > 0)) {
        throw std::invalid_argument("selection: multipliers must be positive");
    }
}

std::size_t initial_selection_size(const SelectionConfig& cfg, std::uint64_t label_freq, std::uint64_t test_size,
                                   std::uint64_t train_size) {
    if (train_size == 0) throw std::invalid_argument("selection: empty training set");
    const double n = std::round(cfg.prior_multiplier * static_cast<double>(label_freq) *
                                static_cast<double>(test_size) / static_cast<double>(train_size));
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

std::vector<double> canonical_vote_weights(std::span<const double> weights) {
    double top = 0;
    for (double w : weights) {
        if (!std::isfinite(w)) throw std::invalid_argument("vote weights must be finite");
        top = std::max(top, w);
    }
    std::vector<double> out(weights.size());
    if (top <= 0) {
        std::fill(out.begin(), out.end(), 1.0);
        return out;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = weights[i] <= 0 ? 0.0 : std::round(weights[i] / top * kWeightGrid) / kWeightGrid;
    }
    return out;
}

InstanceList vote_and_select(std::span<const InstanceList* const> lists, std::span<const double> weights,
                             std::size_t n0, const SelectionConfig& cfg) {
    if (lists.size() != weights.size()) throw std::invalid_argument("vote: classifier count mismatch");
    const auto w = canonical_vote_weights(weights);
    std::map<DocId, double> votes;
    for (std::size_t i = 0; i < lists.size(); ++i) {
        for (const auto& inst : *lists[i]) votes[inst.doc] += w[i] * inst.score;
    }
    InstanceList scored;
    scored.reserve(votes.size());
    for (const auto& [doc, s] : votes) scored.push_back({doc, s});
    std::sort(scored.begin(), scored.end(), instance_before);
    if (scored.empty()) return scored;

    const std::size_t k = std::min(n0, scored.size());
    double mean = 0;
    for (std::size_t i = 0; i < k; ++i) mean += scored[i].score;
    mean /= static_cast<double>(k);
    const double threshold = cfg.vote_threshold_frac * mean;
    std::size_t end = k;
    while (end < scored.size() && scored[end].score > threshold) ++end;
    scored.resize(end);
    return scored;
}

VoteModel fit_vote_regressors(std::span<const ClassifierOutput> outputs, const LabelSets& gold, const LabelStats& stats,
                              const CombineConfig& cfg, const std::vector<LabelId>* labels) {
    const std::size_t m = outputs.size();
    if (m == 0) throw std::invalid_argument("fit_vote_regressors: no classifiers");
    const auto dim = metafeature_dim(m);
    const auto by_label = gold_by_label(gold);
    const auto active = labels ? *labels : active_labels(outputs);
    std::vector<RidgeAccumulator> acc(m, RidgeAccumulator(dim));

    struct Row {
        std::vector<std::vector<double>> features;
        std::vector<double> targets;
    };
    for (std::size_t start = 0; start < active.size(); start += kLabelBlock) {
        const std::size_t stop = std::min(active.size(), start + kLabelBlock);
        std::vector<Row> rows(stop - start);
        run_chunks(rows.size(), cfg.workers, [&](std::size_t, std::size_t lo, std::size_t hi) {
            for (std::size_t r = lo; r < hi; ++r) {
                const auto label = active[start + r];
                const auto lists = lists_for(outputs, label);
                auto it = by_label.find(label);
                const std::span<const DocId> g = it == by_label.end() ? std::span<const DocId>{} : it->second;
                rows[r].features = normalize_metafeatures(compute_metafeatures(lists, stats.frequency(label)));
                rows[r].targets = approximate_oracle_weights(lists, g);
            }
        });
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < m; ++i) acc[i].add(row.features[i], row.targets[i]);
        }
    }

    VoteModel model;
    model.lambda = cfg.lambda;
    model.regressors.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        model.regressors.push_back(acc[i].solve(cfg.lambda, "classifier " + std::to_string(outputs[i].id)));
    }
    return model;
}

std::vector<LabelResult> combine(std::span<const ClassifierOutput> outputs, const VoteModel& model,
                                 const LabelStats& stats, std::uint64_t test_size, const CombineConfig& cfg,
                                 const std::vector<LabelId>* labels) {
    cfg.selection.validate();
    if (model.num_classifiers() != outputs.size()) throw std::invalid_argument("combine: classifier count mismatch");
    const auto active = labels ? *labels : active_labels(outputs);
    std::vector<LabelResult> out(active.size());
    run_chunks(active.size(), cfg.workers, [&](std::size_t, std::size_t lo, std::size_t hi) {
        for (std::size_t r = lo; r < hi; ++r) {
            const auto label = active[r];
            const auto lists = lists_for(outputs, label);
            const auto freq = stats.frequency(label);
            const auto weights = model.predict(normalize_metafeatures(compute_metafeatures(lists, freq)));
            const auto n0 = initial_selection_size(cfg.selection, freq, test_size, stats.total_docs);
            out[r] = {label, vote_and_select(lists, weights, n0, cfg.selection)};
        }
    });
    std::erase_if(out, [](const LabelResult& r) { return r.instances.empty(); });
    return out;
}

double cross_validate(std::span<const ClassifierOutput> outputs, const LabelSets& gold, const LabelStats& stats,
                      const CombineConfig& cfg, int folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (gold.empty()) throw std::invalid_argument("cross_validate: empty gold");
    const auto active = active_labels(outputs);
    std::vector<LabelId> universe = active;
    for (const auto& [doc, labels] : gold) universe.insert(universe.end(), labels.begin(), labels.end());
    std::sort(universe.begin(), universe.end());
    universe.erase(std::unique(universe.begin(), universe.end()), universe.end());

    Rng rng(derive_seed(seed, {0xcf01d}));
    auto shuffled = universe;
    shuffle(std::span<LabelId>(shuffled), rng);
    std::map<LabelId, int> fold_of;
    for (std::size_t i = 0; i < shuffled.size(); ++i) fold_of[shuffled[i]] = static_cast<int>(i % folds);

    double sum = 0;
    int used = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<LabelId> train_labels, test_labels;
        for (auto l : active) (fold_of[l] == f ? test_labels : train_labels).push_back(l);
        EvalPair pair;
        bool any_gold = false;
        for (const auto& [doc, labels] : gold) {
            auto& dst = pair.gold[doc];
            for (auto l : labels) {
                if (fold_of[l] == f) dst.push_back(l);
            }
            any_gold = any_gold || !dst.empty();
        }
        if (!any_gold) continue;
        const auto model = fit_vote_regressors(outputs, gold, stats, cfg, &train_labels);
        for (const auto& r : combine(outputs, model, stats, gold.size(), cfg, &test_labels)) {
            for (const auto& inst : r.instances) {
                if (pair.gold.contains(inst.doc)) pair.predictions[inst.doc].push_back(r.label);
            }
        }
        sum += macro_fscore(pair);
        ++used;
    }
    return used == 0 ? 0.0 : sum / used;
}

std::vector<std::uint32_t> select_classifiers(std::span<const ClassifierOutput> outputs, const LabelSets& gold,
                                              const LabelStats& stats, const CombineConfig& cfg, int folds,
                                              std::uint64_t seed, std::vector<SelectionStep>* trace) {
    std::vector<std::uint32_t> all;
    for (const auto& o : outputs) all.push_back(o.id);
    std::sort(all.begin(), all.end());
    auto kept = all;
    if (all.size() < 2) {
        if (trace) trace->push_back({kept, 0.0});
        return kept;
    }
    auto score_of = [&](const std::vector<std::uint32_t>& ids) {
        const auto sub = subset(outputs, ids);
        return cross_validate(sub, gold, stats, cfg, folds, seed);
    };
    double current = score_of(kept);
    if (trace) trace->push_back({kept, current});

    for (;;) {
        std::vector<std::vector<std::uint32_t>> moves;
        if (kept.size() > 1) {
            for (std::size_t i = 0; i < kept.size(); ++i) {
                auto next = kept;
                next.erase(next.begin() + static_cast<std::ptrdiff_t>(i));
                moves.push_back(std::move(next));
            }
        }
        for (auto id : all) {
            if (std::binary_search(kept.begin(), kept.end(), id)) continue;
            auto next = kept;
            next.insert(std::upper_bound(next.begin(), next.end(), id), id);
            moves.push_back(std::move(next));
        }
        double best = current;
        std::size_t best_move = moves.size();
        for (std::size_t k = 0; k < moves.size(); ++k) {
            double s;
            try {
                s = score_of(moves[k]);
            } catch (const std::runtime_error&) {
                continue;  // too few labels to fit this subset
            }
            if (s > best) {
                best = s;
                best_move = k;
            }
        }
        if (best_move == moves.size()) break;
        kept = moves[best_move];
        current = best;
        if (trace) trace->push_back({kept, current});
    }
    return kept;
}

}  // namespace xmlc
