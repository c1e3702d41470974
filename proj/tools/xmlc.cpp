// Command-line front end: xmlc <subcommand> [options]
//
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <CLI11.hpp>
#include <fmt/core.h>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "xmlc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace xmlc;

namespace {

// Owns option storage whose address CLI11 binds to.
class OptionStore {
public:
    template <typename T, typename... Args>
    T& emplace(Args&&... args) {
        auto item = std::make_shared<T>(std::forward<Args>(args)...);
        items_.push_back(item);
        return *item;
    }

private:
    std::vector<std::shared_ptr<void>> items_;
};

struct Common {
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string config;
};

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<ClassifierOutput> load_outputs(const std::vector<std::string>& paths) {
    std::vector<ClassifierOutput> out;
    for (std::size_t i = 0; i < paths.size(); ++i) {
        out.push_back(load_classifier_output(static_cast<std::uint32_t>(i), paths[i]));
    }
    return out;
}

std::string template_name_of(const std::string& arg) {
    return fs::path(arg).filename().string();
}

RunSettings settings_for(const TemplateConfig& tmpl, const Common& common, const std::string& param_file) {
    ModelConfig base;
    base.seed = common.seed;
    RunSettings settings{resolve_template(tmpl, base), {}};
    if (!param_file.empty()) {
        const auto spec = read_param_spec(fs::path(param_file));
        apply_parameters(settings, spec, spec.initial());
    }
    settings.resolved.model.validate();
    return settings;
}

void report_template(const TemplateConfig& tmpl) {
    for (const auto& t : tmpl.unknown) spdlog::warn("template: unknown token '{}'", t);
    for (const auto& t : tmpl.inert_tokens()) spdlog::info("template: token '{}' has no effect", t);
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_logger_st("xmlc");
    logger->set_pattern("%v");
    spdlog::set_default_logger(logger);

    CLI::App app{"Extreme multi-label text classification toolkit"};
    app.require_subcommand(1);
    Common common;
    OptionStore store;
    app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
    app.add_option("--workers", common.workers, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--config", common.config, "Parameter file (name lo hi transform init sigma frozen)");
    app.add_flag_callback("--quiet", [] { spdlog::set_level(spdlog::level::warn); }, "Only log warnings");
    std::function<void()> action;

    // segment
    {
        auto* sub = app.add_subcommand("segment", "Split a corpus into base-classifier and ensemble portions");
        auto* input = &store.emplace<std::string>();
        auto* out_base = &store.emplace<std::string>();
        auto* out_ens = &store.emplace<std::string>();
        auto* base_size = &store.emplace<std::size_t>(kDefaultBaseSize);
        auto* ens_size = &store.emplace<std::size_t>(kDefaultEnsembleSize);
        sub->add_option("--input", *input)->required();
        sub->add_option("--base-size", *base_size)->capture_default_str();
        sub->add_option("--ensemble-size", *ens_size)->capture_default_str();
        sub->add_option("--out-base", *out_base)->required();
        sub->add_option("--out-ensemble", *out_ens)->required();
        sub->callback([&, input, out_base, out_ens, base_size, ens_size] {
            action = [&, input, out_base, out_ens, base_size, ens_size] {
                const auto corpus = parse_dataset(fs::path(*input));
                const auto seg = segment(corpus, *base_size, *ens_size, common.seed);
                write_dataset(fs::path(*out_base), seg.base_train);
                write_dataset(fs::path(*out_ens), seg.ensemble_train);
                spdlog::info("segment: {} base, {} ensemble of {}", seg.base_train.size(), seg.ensemble_train.size(),
                             corpus.size());
            };
        });
    }

    // fold
    {
        auto* sub = app.add_subcommand("fold", "Make a development fold from the base-classifier portion");
        auto* input = &store.emplace<std::string>();
        auto* out_train = &store.emplace<std::string>();
        auto* out_dev = &store.emplace<std::string>();
        auto* fold = &store.emplace<int>(0);
        auto* dev_size = &store.emplace<std::size_t>(1000);
        sub->add_option("--input", *input)->required();
        sub->add_option("--fold", *fold)->check(CLI::Range(0, 9))->required();
        sub->add_option("--dev-size", *dev_size)->capture_default_str();
        sub->add_option("--out-train", *out_train)->required();
        sub->add_option("--out-dev", *out_dev)->required();
        sub->callback([&, input, out_train, out_dev, fold, dev_size] {
            action = [&, input, out_train, out_dev, fold, dev_size] {
                const auto corpus = parse_dataset(fs::path(*input));
                const auto split = make_fold(corpus, FoldSpec::for_index(*fold, *dev_size, common.seed));
                write_dataset(fs::path(*out_train), split.dry_train);
                write_dataset(fs::path(*out_dev), split.dry_dev);
                spdlog::info("fold {}: {} train, {} dev", *fold, split.dry_train.size(), split.dry_dev.size());
            };
        });
    }

    // train
    {
        auto* sub = app.add_subcommand("train", "Train a base classifier described by a template name");
        auto* input = &store.emplace<std::string>();
        auto* tmpl_name = &store.emplace<std::string>();
        auto* hierarchy = &store.emplace<std::string>();
        auto* out = &store.emplace<std::string>();
        sub->add_option("--input", *input, "Training dataset")->required();
        sub->add_option("--template", *tmpl_name, "Template name or file")->required();
        sub->add_option("--hierarchy", *hierarchy, "Label hierarchy file");
        sub->add_option("--out", *out, "Model file")->required();
        sub->callback([&, input, tmpl_name, hierarchy, out] {
            action = [&, input, tmpl_name, hierarchy, out] {
                const auto tmpl = parse_template_name(template_name_of(*tmpl_name));
                report_template(tmpl);
                const auto settings = settings_for(tmpl, common, common.config);
                const auto corpus = parse_dataset(fs::path(*input));
                std::optional<Hierarchy> h;
                if (!hierarchy->empty()) h = parse_hierarchy(fs::path(*hierarchy));
                const auto model = train_model(corpus, settings.resolved.model, h ? &*h : nullptr);
                save_model(fs::path(*out), model);
                spdlog::info("train: {} classes, vocabulary {}", model.classes().size(), model.vocab_size());
            };
        });
    }

    // classify
    {
        auto* sub = app.add_subcommand("classify", "Classify documents with a trained model");
        auto* model_path = &store.emplace<std::string>();
        auto* input = &store.emplace<std::string>();
        auto* out = &store.emplace<std::string>();
        auto* transposed = &store.emplace<bool>(false);
        auto* top_k = &store.emplace<std::size_t>(20);
        auto* threshold = &store.emplace<double>(1.0);
        auto* iw = &store.emplace<double>(1.0);
        auto* it = &store.emplace<double>(0.0);
        sub->add_option("--model", *model_path)->required();
        sub->add_option("--input", *input)->required();
        sub->add_option("--out", *out)->required();
        sub->add_flag("--transposed", *transposed, "Write per-label instance lists");
        sub->add_option("--top-k", *top_k, "Labels ranked per document")->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--threshold", *threshold, "Relative probability threshold")->capture_default_str();
        sub->add_option("--iw", *iw, "Instance capacity weight")->capture_default_str();
        sub->add_option("--it", *it, "Minimum 1/rank score for instances")->capture_default_str();
        sub->callback([&, model_path, input, out, transposed, top_k, threshold, iw, it] {
            action = [&, model_path, input, out, transposed, top_k, threshold, iw, it] {
                const auto model = load_model(fs::path(*model_path));
                const auto docs = parse_dataset(fs::path(*input));
                auto file = open_out(*out);
                if (*transposed) {
                    const InstantiateConfig icfg{*iw, *it, *top_k};
                    const auto labels = classify_transposed(model, docs, icfg, model_label_stats(model), common.workers);
                    write_transposed(file, labels);
                    spdlog::info("classify: {} documents, {} labels instantiated", docs.size(), labels.size());
                } else {
                    const auto results = classify_documents(model, docs, {*top_k, {*threshold}, common.workers});
                    write_document_results(file, results);
                    spdlog::info("classify: {} documents", docs.size());
                }
            };
        });
    }

    // optimize
    {
        auto* sub = app.add_subcommand("optimize", "Random search of model parameters on a development fold");
        auto* input = &store.emplace<std::string>();
        auto* tmpl_name = &store.emplace<std::string>();
        auto* hierarchy = &store.emplace<std::string>();
        auto* log_prefix = &store.emplace<std::string>();
        auto* dev_size = &store.emplace<std::size_t>(1000);
        auto* rounds = &store.emplace<int>(40);
        auto* batch = &store.emplace<int>(8);
        auto* fold = &store.emplace<int>(-1);
        sub->add_option("--input", *input, "Base-classifier training portion")->required();
        sub->add_option("--template", *tmpl_name)->required();
        sub->add_option("--hierarchy", *hierarchy);
        sub->add_option("--fold", *fold, "Fold index; defaults to the template's sN")->check(CLI::Range(0, 9));
        sub->add_option("--dev-size", *dev_size)->capture_default_str();
        sub->add_option("--rounds", *rounds)->check(CLI::NonNegativeNumber)->capture_default_str();
        sub->add_option("--batch", *batch)->check(CLI::PositiveNumber)->capture_default_str();
        sub->add_option("--log-prefix", *log_prefix, "Write <prefix>_params.txt and the final parameter file");
        sub->callback([&, input, tmpl_name, hierarchy, log_prefix, dev_size, rounds, batch, fold] {
            action = [&, input, tmpl_name, hierarchy, log_prefix, dev_size, rounds, batch, fold] {
                const auto tmpl = parse_template_name(template_name_of(*tmpl_name));
                report_template(tmpl);
                auto settings = settings_for(tmpl, common, {});
                if (tmpl.level("thr") && common.workers == 1) common.workers = settings.resolved.workers;
                ParamSpec spec = common.config.empty() ? default_param_spec(tmpl, settings)
                                                       : read_param_spec(fs::path(common.config));
                const int fold_index = *fold >= 0 ? *fold : tmpl.fold().value_or(0);
                const auto corpus = parse_dataset(fs::path(*input));
                const auto split = make_fold(corpus, FoldSpec::for_index(fold_index, *dev_size, common.seed));
                std::optional<Hierarchy> h;
                if (!hierarchy->empty()) h = parse_hierarchy(fs::path(*hierarchy));

                OptimizeOptions opts;
                opts.dev = {tmpl.measure, 20, common.workers, h ? &*h : nullptr};
                opts.search.seed = common.seed;
                opts.search.outer_iterations = *rounds;
                opts.search.batch_size = *batch;
                if (!log_prefix->empty()) opts.log_prefix = fs::path(*log_prefix);
                const auto result = optimize_parameters(split.dry_train, split.dry_dev, settings, spec, opts);
                std::ostringstream params;
                write_param_spec(params, result.best);
                std::cout << params.str();
                spdlog::info("{} {}", to_string(tmpl.measure), result.state.best_score);
            };
        });
    }

    // transpose
    {
        auto* sub = app.add_subcommand("transpose", "Convert between per-document and per-label result files");
        auto* input = &store.emplace<std::string>();
        auto* out = &store.emplace<std::string>();
        auto* to_docs = &store.emplace<bool>(false);
        sub->add_option("--input", *input)->required();
        sub->add_option("--out", *out)->required();
        sub->add_flag("--to-documents", *to_docs, "Input is per-label; default input is per-document");
        sub->callback([&, input, out, to_docs] {
            action = [&, input, out, to_docs] {
                std::ifstream in(*input);
                if (!in) throw std::runtime_error("cannot open " + *input);
                auto file = open_out(*out);
                transpose_file(in, file,
                               *to_docs ? TransposeDirection::LabelsToDocuments : TransposeDirection::DocumentsToLabels,
                               *input);
                spdlog::info("transpose: wrote {}", *out);
            };
        });
    }

    // combine
    {
        auto* sub = app.add_subcommand("combine", "Combine base-classifier outputs by feature-weighted stacking");
        auto* train_outputs = &store.emplace<std::string>();
        auto* test_outputs = &store.emplace<std::string>();
        auto* gold = &store.emplace<std::string>();
        auto* base_train = &store.emplace<std::string>();
        auto* test_docs = &store.emplace<std::string>();
        auto* remove = &store.emplace<std::vector<std::uint32_t>>();
        auto* out_transposed = &store.emplace<std::string>();
        auto* out_submission = &store.emplace<std::string>();
        auto* lambda = &store.emplace<double>(kDefaultRidgeLambda);
        auto* dev_folds = &store.emplace<int>(0);
        sub->add_option("--train-outputs", *train_outputs, "Comma-separated per-label files on the ensemble split")
            ->required();
        sub->add_option("--test-outputs", *test_outputs, "Comma-separated per-label files on the test documents");
        sub->add_option("--gold", *gold, "Labeled ensemble split")->required();
        sub->add_option("--train", *base_train, "Labeled base-classifier training data")->required();
        sub->add_option("--test-docs", *test_docs, "Test documents");
        sub->add_option("--remove", *remove, "Classifier ids to leave out");
        sub->add_option("--lambda", *lambda, "Ridge strength")->capture_default_str();
        sub->add_option("--dev-folds", *dev_folds, "Cross-validate on the ensemble split instead");
        sub->add_option("--out-transposed", *out_transposed);
        sub->add_option("--out", *out_submission, "Submission file");
        sub->callback([&, train_outputs, test_outputs, gold, base_train, test_docs, remove, out_transposed,
                       out_submission, lambda, dev_folds] {
            action = [&, train_outputs, test_outputs, gold, base_train, test_docs, remove, out_transposed,
                      out_submission, lambda, dev_folds] {
                CombineConfig cfg;
                cfg.lambda = *lambda;
                cfg.workers = common.workers;
                const auto stats = labelset_stats(parse_dataset(fs::path(*base_train)));
                const auto gold_sets = corpus_label_sets(parse_dataset(fs::path(*gold)));
                const auto train = keep_classifiers(load_outputs(split_list(*train_outputs)), *remove);
                if (*dev_folds > 0) {
                    const double score = cross_validate(train, gold_sets, stats, cfg, *dev_folds, common.seed);
                    spdlog::info("combine: {} classifiers, {} folds", train.size(), *dev_folds);
                    fmt::print("mafs {}\n", score);
                    return;
                }
                if (test_outputs->empty() || test_docs->empty() || out_submission->empty()) {
                    throw CLI::ValidationError("combine", "--test-outputs, --test-docs and --out are required");
                }
                const auto test = keep_classifiers(load_outputs(split_list(*test_outputs)), *remove);
                if (test.size() != train.size()) throw std::runtime_error("combine: classifier lists differ in length");
                const auto docs = parse_dataset(fs::path(*test_docs));
                const auto model = fit_vote_regressors(train, gold_sets, stats, cfg);
                const auto selected = combine(test, model, stats, docs.size(), cfg);
                if (!out_transposed->empty()) {
                    auto file = open_out(*out_transposed);
                    write_transposed(file, selected);
                }
                std::vector<DocId> ids;
                for (const auto& d : docs.documents) ids.push_back(d.doc_id);
                const auto per_doc = transpose_to_documents(selected);
                auto file = open_out(*out_submission);
                write_submission(file, ids, label_sets(per_doc));
                spdlog::info("combine: {} classifiers, {} labels selected", train.size(), selected.size());
            };
        });
    }

    // select-classifiers
    {
        auto* sub = app.add_subcommand("select-classifiers", "Hill-climb the set of combined classifiers");
        auto* train_outputs = &store.emplace<std::string>();
        auto* gold = &store.emplace<std::string>();
        auto* base_train = &store.emplace<std::string>();
        auto* folds = &store.emplace<int>(5);
        auto* lambda = &store.emplace<double>(kDefaultRidgeLambda);
        sub->add_option("--train-outputs", *train_outputs)->required();
        sub->add_option("--gold", *gold)->required();
        sub->add_option("--train", *base_train)->required();
        sub->add_option("--folds", *folds)->check(CLI::Range(2, 1000))->capture_default_str();
        sub->add_option("--lambda", *lambda)->capture_default_str();
        sub->callback([&, train_outputs, gold, base_train, folds, lambda] {
            action = [&, train_outputs, gold, base_train, folds, lambda] {
                CombineConfig cfg;
                cfg.lambda = *lambda;
                cfg.workers = common.workers;
                const auto stats = labelset_stats(parse_dataset(fs::path(*base_train)));
                const auto gold_sets = corpus_label_sets(parse_dataset(fs::path(*gold)));
                const auto outputs = load_outputs(split_list(*train_outputs));
                std::vector<SelectionStep> trace;
                const auto kept = select_classifiers(outputs, gold_sets, stats, cfg, *folds, common.seed, &trace);
                for (const auto& step : trace) spdlog::info("select: {} classifiers, mafs {}", step.kept.size(), step.score);
                std::vector<std::uint32_t> removed;
                for (const auto& o : outputs) {
                    if (std::find(kept.begin(), kept.end(), o.id) == kept.end()) removed.push_back(o.id);
                }
                fmt::print("kept");
                for (auto id : kept) fmt::print(" {}", id);
                fmt::print("\nremoved");
                for (auto id : removed) fmt::print(" {}", id);
                fmt::print("\n");
                spdlog::info("mafs {}", trace.back().score);
            };
        });
    }

    // evaluate
    {
        auto* sub = app.add_subcommand("evaluate", "Score a per-document result file against gold labels");
        auto* pred = &store.emplace<std::string>();
        auto* gold = &store.emplace<std::string>();
        auto* metrics = &store.emplace<std::vector<std::string>>();
        sub->add_option("--pred", *pred)->required();
        sub->add_option("--gold", *gold, "Labeled dataset")->required();
        sub->add_option("--metric", *metrics, "mafs mafs2 mafs3 mifs mjac ndcg5 (repeatable; default all)")
            ->check(CLI::IsMember({"mafs", "mafs2", "mafs3", "mifs", "mjac", "ndcg5"}));
        sub->callback([&, pred, gold, metrics] {
            action = [&, pred, gold, metrics] {
                const auto results = read_document_results(fs::path(*pred));
                const auto gold_corpus = parse_dataset(fs::path(*gold));
                std::vector<std::string> names = *metrics;
                if (names.empty()) names = {"mafs", "mafs2", "mafs3", "mifs", "mjac", "ndcg5"};
                for (const auto& name : names) {
                    fmt::print("{} {}\n", name, evaluate_results(measure_from_string(name), results, gold_corpus));
                }
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    try {
        action();
    } catch (const CLI::ValidationError& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("error: {}", e.what());
        return 2;
    }
    return 0;
}
