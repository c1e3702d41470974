#include "xmlc/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace xmlc {

namespace {

void write_spec_file(const std::filesystem::path& path, const ParamSpec& spec) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_param_spec(out, spec);
}

}  // namespace

LabelStats model_label_stats(const SgmModel& model) {
    LabelStats stats;
    stats.total_docs = model.num_train_docs();
    const auto* ps = model.powerset();
    for (const auto& cls : model.classes()) {
        if (ps) {
            const auto labels = ps->decode(cls.id);
            for (auto l : labels) stats.label_freq[l] += cls.doc_count;
            stats.labelset_freq[labelset_key(labels)] += cls.doc_count;
        } else {
            stats.label_freq[cls.id] += cls.doc_count;
        }
    }
    return stats;
}

std::vector<DocResult> classify_documents(const SgmModel& model, const Corpus& docs, const ClassifyOptions& opts) {
    const InvertedIndex index(model);
    const auto preds = predict_documents(index, docs.documents, opts.top_k, opts.workers);
    std::vector<DocResult> out;
    out.reserve(preds.size());
    for (const auto& pred : preds) {
        const auto chosen = predict_per_document(pred, model, opts.policy);
        DocResult r{pred.doc_id, {}};
        for (const auto& sc : label_ranking(pred, model)) {
            if (std::binary_search(chosen.begin(), chosen.end(), sc.cls)) r.labels.push_back({sc.cls, sc.score});
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<LabelResult> classify_transposed(const SgmModel& model, const Corpus& docs, const InstantiateConfig& icfg,
                                             const LabelStats& stats, std::size_t workers) {
    const InvertedIndex index(model);
    return to_label_results(predict_transposed(index, docs.documents, icfg, stats, workers));
}

double evaluate_results(Measure measure, std::span<const DocResult> results, const Corpus& gold,
                        const std::set<LabelId>& extra_universe) {
    EvalPair pair;
    pair.gold = gold_label_sets(gold);
    pair.predictions = label_sets(results);
    const auto ranked = label_rankings(results);
    std::set<LabelId> universe = extra_universe;
    for (const auto* side : {&pair.gold, &pair.predictions}) {
        for (const auto& [doc, labels] : *side) universe.insert(labels.begin(), labels.end());
    }
    return evaluate_measure(measure, pair, ranked, universe);
}

const std::vector<std::string>& known_parameters() {
    static const std::vector<std::string> names = {
        "jm_lambda",       "dirichlet_mu",  "collection_mix",    "hierarchy_mix",     "prior_scale",
        "k1",              "b",             "idf_exponent",      "length_exponent",   "tf_exponent",
        "min_count",       "precomputed_prune", "online_prune",  "instantiate_weight", "relative_threshold",
    };
    return names;
}

void apply_parameter(RunSettings& s, const std::string& name, double v) {
    auto& m = s.resolved.model;
    if (name == "jm_lambda") m.smoothing.jm_lambda = v;
    else if (name == "dirichlet_mu") m.smoothing.dirichlet_mu = v;
    else if (name == "collection_mix") m.smoothing.collection_mix = v;
    else if (name == "hierarchy_mix") m.smoothing.hierarchy_mix = v;
    else if (name == "prior_scale") m.prior_scale = v;
    else if (name == "k1") m.weighting.k1 = v;
    else if (name == "b") m.weighting.b = v;
    else if (name == "idf_exponent") m.weighting.idf_exponent = v;
    else if (name == "length_exponent") m.weighting.length_exponent = v;
    else if (name == "tf_exponent") m.weighting.tf_exponent = v;
    else if (name == "min_count") m.pruning.min_count = v;
    else if (name == "precomputed_prune") m.pruning.precomputed_prune = v;
    else if (name == "online_prune") m.pruning.online_prune = v;
    else if (name == "instantiate_weight") s.resolved.instantiate.instantiate_weight = v;
    else if (name == "relative_threshold") s.policy.relative_threshold = v;
    else throw std::invalid_argument("unknown parameter '" + name + "'");
}

void apply_parameters(RunSettings& settings, const ParamSpec& spec, const ParamVector& values) {
    if (values.size() != spec.params.size()) throw std::invalid_argument("parameter count mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) apply_parameter(settings, spec.params[i].name, values[i]);
}

ParamSpec default_param_spec(const TemplateConfig& tmpl, const RunSettings& settings) {
    const auto& m = settings.resolved.model;
    auto param = [](std::string name, double lo, double hi, Transform t, double init, double sigma, bool frozen) {
        return ParamDef{std::move(name), lo, hi, t, std::clamp(init, lo, hi), sigma, frozen};
    };
    ParamSpec spec;
    spec.params.push_back(param("jm_lambda", 0.001, 0.9999, Transform::Logit, m.smoothing.jm_lambda, 0.5, false));
    spec.params.push_back(param("prior_scale", 0.0, 3.0, Transform::Linear, m.prior_scale, 0.2, !tmpl.prior_search));
    spec.params.push_back(param("dirichlet_mu", 0.5, 1048576.0, Transform::Log, m.smoothing.dirichlet_mu, 0.5,
                                !m.flags.kernel_densities));
    spec.params.push_back(param("collection_mix", 0.0, 1.0, Transform::Logit, m.smoothing.collection_mix, 0.5,
                                m.smoothing.background != BackgroundKind::UniformCollection));
    spec.params.push_back(param("instantiate_weight", 0.0625, 64.0, Transform::Log,
                                settings.resolved.instantiate.instantiate_weight, 0.3, !settings.resolved.transposed));
    spec.validate();
    return spec;
}

double dev_score(const Corpus& train, const Corpus& dev, const RunSettings& settings, const DevRunOptions& opts) {
    const auto model = train_model(train, settings.resolved.model, opts.hierarchy);
    std::vector<DocResult> results;
    if (settings.resolved.transposed) {
        const auto labels = classify_transposed(model, dev, settings.resolved.instantiate, model_label_stats(model),
                                                opts.workers);
        results = transpose_to_documents(labels);
    } else {
        results = classify_documents(model, dev, {opts.top_k, settings.policy, opts.workers});
    }
    return evaluate_results(opts.measure, results, dev);
}

OptimizeResult optimize_parameters(const Corpus& train, const Corpus& dev, const RunSettings& settings,
                                   const ParamSpec& spec, const OptimizeOptions& opts) {
    const Objective objective = [&](const ParamVector& values) {
        RunSettings s = settings;
        apply_parameters(s, spec, values);
        return dev_score(train, dev, s, opts.dev);
    };
    if (opts.log_prefix) write_spec_file(opts.log_prefix->string() + "_params.txt", spec);

    auto search = opts.search;
    auto user_hook = search.on_round;
    search.on_round = [&](int round, const SearchState& state) {
        spdlog::info("round {}/{} best {:.6f}", round + 1, search.outer_iterations, state.best_score);
        if (user_hook) user_hook(round, state);
    };
    OptimizeResult result{run_search(objective, spec, search), spec};
    result.best = with_values(spec, result.state.best_params);
    if (opts.log_prefix) {
        const int last = std::max(0, search.outer_iterations - 1);
        write_spec_file(opts.log_prefix->string() + "_params.txt_" + std::to_string(last) + "_0", result.best);
    }
    return result;
}

LabelSets corpus_label_sets(const Corpus& corpus) {
    return gold_label_sets(corpus);
}

std::vector<ClassifierOutput> keep_classifiers(std::vector<ClassifierOutput> outputs,
                                               const std::vector<std::uint32_t>& removed) {
    std::vector<ClassifierOutput> out;
    for (auto& o : outputs) {
        if (std::find(removed.begin(), removed.end(), o.id) != removed.end()) continue;
        out.push_back(std::move(o));
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<std::uint32_t>(i);
    return out;
}

}  // namespace xmlc
