#pragma once

// Stage functions behind the command-line tool. Each one is deterministic
// for fixed inputs and seeds, independent of the worker count.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xmlc/corpus.hpp"
#include "xmlc/ensemble.hpp"
#include "xmlc/inference.hpp"
#include "xmlc/metaopt.hpp"
#include "xmlc/metrics.hpp"
#include "xmlc/model.hpp"
#include "xmlc/result_io.hpp"
#include "xmlc/template.hpp"

namespace xmlc {

/// Label frequencies as seen by the model: class document counts, summed
/// over meta-classes under label powerset.
LabelStats model_label_stats(const SgmModel& model);

struct ClassifyOptions {
    std::size_t top_k = 20;
    PredictionPolicy policy;
    std::size_t workers = 1;
};

/// Predicted labels with their log scores, in rank order.
std::vector<DocResult> classify_documents(const SgmModel& model, const Corpus& docs, const ClassifyOptions& opts);

/// Per-label instance lists with 1/rank scores.
std::vector<LabelResult> classify_transposed(const SgmModel& model, const Corpus& docs, const InstantiateConfig& icfg,
                                             const LabelStats& stats, std::size_t workers);

/// Scores `results` against the labels of `gold`. The label universe of the
/// surrogate measures is the union of gold, predicted and `extra_universe`.
double evaluate_results(Measure measure, std::span<const DocResult> results, const Corpus& gold,
                        const std::set<LabelId>& extra_universe = {});

/// Tunable parameters understood by apply_parameter.
const std::vector<std::string>& known_parameters();

struct RunSettings {
    ResolvedTemplate resolved;
    PredictionPolicy policy;
};

/// Sets the named field; throws std::invalid_argument for unknown names.
void apply_parameter(RunSettings& settings, const std::string& name, double value);
void apply_parameters(RunSettings& settings, const ParamSpec& spec, const ParamVector& values);

/// Search space derived from a template: the background weight is always
/// free; the prior scale is free under psX, kernel mass under kd, collection
/// mix under ucN, capacity weight under iwN.
ParamSpec default_param_spec(const TemplateConfig& tmpl, const RunSettings& settings);

struct DevRunOptions {
    Measure measure = Measure::Mafs;
    std::size_t top_k = 20;
    std::size_t workers = 1;
    const Hierarchy* hierarchy = nullptr;
};

/// Trains on `train` and scores the predictions on `dev`.
double dev_score(const Corpus& train, const Corpus& dev, const RunSettings& settings, const DevRunOptions& opts);

struct OptimizeOptions {
    DevRunOptions dev;
    SearchOptions search;
    /// When set, the initial and final parameter files are written as
    /// <prefix>_params.txt and <prefix>_params.txt_<rounds-1>_0.
    std::optional<std::filesystem::path> log_prefix;
};

struct OptimizeResult {
    SearchState state;
    ParamSpec best;
};

OptimizeResult optimize_parameters(const Corpus& train, const Corpus& dev, const RunSettings& settings,
                                   const ParamSpec& spec, const OptimizeOptions& opts);

/// Gold label sets of a labeled corpus as used by the ensemble.
LabelSets corpus_label_sets(const Corpus& corpus);

/// Drops classifiers listed in `removed` and renumbers the rest 0..M-1 in
/// input order.
std::vector<ClassifierOutput> keep_classifiers(std::vector<ClassifierOutput> outputs,
                                               const std::vector<std::uint32_t>& removed);

}  // namespace xmlc
