#include "xmlc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace xmlc {

namespace {

const std::vector<LabelId> kEmpty;

const std::vector<LabelId>& predicted_for(const EvalPair& pair, DocId doc) {
    auto it = pair.predictions.find(doc);
    return it == pair.predictions.end() ? kEmpty : it->second;
}

std::vector<LabelId> as_set(std::vector<LabelId> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

}  // namespace

double LabelCounts::f1() const noexcept {
    const auto denom = 2 * tp + fp + fn;
    return denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
}

std::map<LabelId, LabelCounts> label_counts(const EvalPair& pair) {
    std::map<LabelId, LabelCounts> counts;
    for (const auto& [doc, gold_raw] : pair.gold) {
        const auto gold = as_set(gold_raw);
        const auto pred = as_set(predicted_for(pair, doc));
        std::size_t i = 0, j = 0;
        while (i < gold.size() || j < pred.size()) {
            if (j >= pred.size() || (i < gold.size() && gold[i] < pred[j])) {
                ++counts[gold[i++]].fn;
            } else if (i >= gold.size() || pred[j] < gold[i]) {
                ++counts[pred[j++]].fp;
            } else {
                ++counts[gold[i]].tp;
                ++i;
                ++j;
            }
        }
    }
    return counts;
}

double macro_fscore(const EvalPair& pair) {
    if (pair.gold.empty()) throw std::invalid_argument("macro fscore: empty gold");
    const auto counts = label_counts(pair);
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [label, c] : counts) {
        if (c.tp + c.fn == 0) continue;  // not a gold label
        sum += c.f1();
        ++n;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double micro_fscore(const EvalPair& pair) {
    if (pair.gold.empty()) throw std::invalid_argument("micro fscore: empty gold");
    LabelCounts pooled;
    for (const auto& [label, c] : label_counts(pair)) {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
    }
    return pooled.f1();
}

double mean_jaccard(const EvalPair& pair) {
    if (pair.gold.empty()) return 0.0;
    double sum = 0;
    for (const auto& [doc, gold_raw] : pair.gold) {
        const auto gold = as_set(gold_raw);
        const auto pred = as_set(predicted_for(pair, doc));
        std::vector<LabelId> inter;
        std::set_intersection(gold.begin(), gold.end(), pred.begin(), pred.end(), std::back_inserter(inter));
        const auto uni = gold.size() + pred.size() - inter.size();
        sum += uni == 0 ? 1.0 : static_cast<double>(inter.size()) / static_cast<double>(uni);
    }
    return sum / static_cast<double>(pair.gold.size());
}

double ndcg_at_5(const LabelSets& ranked, const LabelSets& gold) {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& [doc, gold_raw] : gold) {
        const auto relevant = as_set(gold_raw);
        if (relevant.empty()) continue;
        ++n;
        double ideal = 0;
        for (std::size_t r = 1; r <= std::min<std::size_t>(5, relevant.size()); ++r) ideal += 1.0 / std::log2(r + 1.0);
        auto it = ranked.find(doc);
        if (it == ranked.end()) continue;
        double dcg = 0;
        std::vector<LabelId> seen;
        std::size_t rank = 0;
        for (auto label : it->second) {
            if (std::find(seen.begin(), seen.end(), label) != seen.end()) continue;
            seen.push_back(label);
            if (++rank > 5) break;
            if (std::binary_search(relevant.begin(), relevant.end(), label)) dcg += 1.0 / std::log2(rank + 1.0);
        }
        sum += dcg / ideal;
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

SurrogateConfig SurrogateConfig::preset(SurrogateVariant v) {
    switch (v) {
        case SurrogateVariant::Mafs: return {v, 0.0};
        case SurrogateVariant::Mafs2: return {v, 0.5};
        case SurrogateVariant::Mafs3: return {v, 1.0};
    }
    return {};
}

double surrogate_mafs(const EvalPair& pair, const std::set<LabelId>& universe, const SurrogateConfig& cfg) {
    const double maf = macro_fscore(pair);
    if (cfg.variant == SurrogateVariant::Mafs || cfg.missing_label_penalty == 0 || universe.empty()) return maf;
    std::uint64_t missing_fp = 0;
    for (const auto& [label, c] : label_counts(pair)) {
        if (c.tp + c.fn == 0) missing_fp += c.fp;
    }
    const double penalty =
        cfg.missing_label_penalty * static_cast<double>(missing_fp) / static_cast<double>(universe.size());
    return std::clamp(maf - penalty, 0.0, 1.0);
}

std::string to_string(Measure m) {
    switch (m) {
        case Measure::Mafs: return "mafs";
        case Measure::Mafs2: return "mafs2";
        case Measure::Mafs3: return "mafs3";
        case Measure::Mifs: return "mifs";
        case Measure::Mjac: return "mjac";
        case Measure::Ndcg5: return "ndcg5";
    }
    return "?";
}

Measure measure_from_string(const std::string& name) {
    for (auto m : {Measure::Mafs, Measure::Mafs2, Measure::Mafs3, Measure::Mifs, Measure::Mjac, Measure::Ndcg5}) {
        if (to_string(m) == name) return m;
    }
    throw std::invalid_argument("unknown measure '" + name + "'");
}

double evaluate_measure(Measure m, const EvalPair& pair, const LabelSets& ranked, const std::set<LabelId>& universe) {
    switch (m) {
        case Measure::Mafs: return macro_fscore(pair);
        case Measure::Mafs2: return surrogate_mafs(pair, universe, SurrogateConfig::preset(SurrogateVariant::Mafs2));
        case Measure::Mafs3: return surrogate_mafs(pair, universe, SurrogateConfig::preset(SurrogateVariant::Mafs3));
        case Measure::Mifs: return micro_fscore(pair);
        case Measure::Mjac: return mean_jaccard(pair);
        case Measure::Ndcg5: return ndcg_at_5(ranked, pair.gold);
    }
    return 0.0;
}

}  // namespace xmlc
