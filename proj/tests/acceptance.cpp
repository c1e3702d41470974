// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/ensemble_synth.hpp"
#include "support/metric_oracle.hpp"
#include "support/oracle.hpp"
#include "support/ridge_oracle.hpp"
#include "support/synth.hpp"
#include "support/template_names.hpp"
#include "xmlc/pipeline.hpp"

using namespace xmlc;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

// ---------------------------------------------------------------------------

ModelConfig random_model_config(Rng& rng) {
    ModelConfig cfg;
    cfg.smoothing.jm_lambda = 0.5 + 0.499 * uniform01(rng);
    cfg.prior_scale = 2 * uniform01(rng);
    switch (uniform_index(rng, 3)) {
        case 0: cfg.weighting = WeightingConfig::identity(); break;
        case 1: cfg.weighting = {WeightingScheme::Bm18ti, 1.2, 0.75, 1.0, 1.0, 1.0}; break;
        default: cfg.weighting = {WeightingScheme::Tix, 1.2, 0.5, 1.0, 1.0, 0.5}; break;
    }
    if (uniform01(rng) < 0.4) {
        cfg.smoothing.background = BackgroundKind::UniformCollection;
        cfg.smoothing.collection_mix = uniform01(rng);
    }
    switch (uniform_index(rng, 6)) {
        case 0:
            cfg.flags.kernel_densities = true;
            cfg.smoothing.dirichlet_mu = std::ldexp(1.0, static_cast<int>(uniform_index(rng, 8)));
            cfg.kernel_top_k = 1 + uniform_index(rng, 5);
            break;
        case 1:
            cfg.flags.kernel_densities = true;
            cfg.flags.no_backoff = true;
            cfg.smoothing.dirichlet_mu = std::ldexp(1.0, static_cast<int>(uniform_index(rng, 8)));
            cfg.kernel_top_k = 1 + uniform_index(rng, 5);
            break;
        case 2:
            cfg.flags.kernel_densities = true;
            cfg.flags.no_backoff = true;
            cfg.flags.bm25_kernel = true;
            cfg.weighting = {WeightingScheme::Bm25c, 2.0, 0.75, 1.0, 1.0, 1.0};
            break;
        case 3: cfg.flags.label_powerset = true; break;
        case 4:
            cfg.flags.hierarchy_smoothing = true;
            cfg.smoothing.hierarchy_mix = uniform01(rng);
            break;
        default:
            cfg.pruning.precomputed_prune = 0.5 * uniform01(rng);
            cfg.pruning.min_count = static_cast<double>(uniform_index(rng, 3));
            break;
    }
    cfg.seed = rng();
    return cfg;
}

Outcome sparse_dense_equivalence() {
    const auto t0 = Clock::now();
    Rng rng(1001);
    constexpr int kModels = 120;
    double worst = 0;
    std::size_t ranking_mismatches = 0, docs_checked = 0;
    for (int i = 0; i < kModels; ++i) {
        const std::size_t vocab = 20 + uniform_index(rng, 81);   // <= 100
        const std::size_t labels = 2 + uniform_index(rng, 49);   // <= 50
        auto cfg = random_model_config(rng);
        const auto corpus = synth::topic_corpus(rng(), {.num_docs = 40 + uniform_index(rng, 160), .vocab = vocab,
                                                        .labels = labels});
        Hierarchy h;
        for (LabelId l = 0; l < labels; ++l) h.add_edge(static_cast<LabelId>(labels + l % 4), l);
        const auto model = train_model(corpus, cfg, &h);
        // test documents reach beyond the training vocabulary
        const auto test = synth::topic_corpus(rng(), {.num_docs = 15, .vocab = vocab + 10, .labels = labels});
        const InvertedIndex index(model);
        InvertedIndex::Scorer scorer(index);
        const auto num_classes = model.classes().size();
        for (const auto& d : test.documents) {
            const auto x = model.weight(d);
            const auto dense = oracle::dense_scores(model, x);
            const auto sparse = scorer.score_all(x);
            for (std::size_t c = 0; c < dense.size(); ++c) worst = std::max(worst, std::abs(dense[c] - sparse[c]));
            const auto want = oracle::dense_ranking(model, x);
            for (std::size_t k : {num_classes, std::min<std::size_t>(5, num_classes)}) {
                const auto got = scorer.score(x, k);
                bool same = got.ranked.size() == k;
                for (std::size_t r = 0; same && r < k; ++r) same = got.ranked[r].cls == want[r].cls;
                ranking_mismatches += same ? 0 : 1;
            }
            ++docs_checked;
        }
    }
    const double elapsed = seconds_since(t0);
    return {worst <= 1e-9 && ranking_mismatches == 0 && elapsed < 30,
            std::to_string(kModels) + " models, " + std::to_string(docs_checked) + " docs, max |diff| " +
                fmt_double(worst) + ", ranking mismatches " + std::to_string(ranking_mismatches) + ", " +
                fmt_double(elapsed) + " s"};
}

// ---------------------------------------------------------------------------

Outcome metric_oracles() {
    Rng rng(1002);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        EvalPair p;
        p.gold = synth::random_label_sets(rng, 1 + uniform_index(rng, 30), 1 + uniform_index(rng, 25), 5, 0.0);
        p.predictions = synth::random_label_sets(rng, 35, 30, 5, 0.2);
        const auto ranked = synth::random_label_sets(rng, 35, 30, 10, 0.1);
        worst = std::max({worst, std::abs(macro_fscore(p) - oracle::macro_f(p)),
                          std::abs(micro_fscore(p) - oracle::micro_f(p)),
                          std::abs(mean_jaccard(p) - oracle::jaccard(p)),
                          std::abs(ndcg_at_5(ranked, p.gold) - oracle::ndcg5(ranked, p.gold))});
    }
    const EvalPair half{{{1, {1}}, {2, {}}}, {{1, {1}}, {2, {2}}}};
    const EvalPair third{{{1, {1}}}, {{1, {1, 2, 3}}}};
    const double maf = macro_fscore(half);
    const double jac = mean_jaccard(third);
    const double ndcg = ndcg_at_5({{1, {2, 1}}}, {{1, {1}}});
    const bool fixed = maf == 0.5 && std::abs(jac - 1.0 / 3) <= 1e-12 && std::abs(ndcg - 1 / std::log2(3.0)) <= 1e-12;
    return {worst <= 1e-12 && fixed, "1000 pairs, max |diff| " + fmt_double(worst) + "; maF " + fmt_double(maf) +
                                         ", Jaccard " + fmt_double(jac) + ", NDCG@5 " + fmt_double(ndcg)};
}

// ---------------------------------------------------------------------------

Outcome transposed_beats_argmax() {
    const auto t0 = Clock::now();
    const auto corpus = synth::zipf_corpus(1003, {});
    const auto [train, test] = synth::split_corpus(corpus, 1500, 7);
    const auto tmpl = parse_template_name("mafs_u_jm3_bm18ti");
    const auto model = train_model(train, resolve_template(tmpl).model);
    const auto stats = model_label_stats(model);

    const auto per_doc = classify_documents(model, test, {20, {1.0}, 4});
    InstantiateConfig icfg;
    icfg.instantiate_weight = static_cast<double>(test.size()) / static_cast<double>(train.size());
    const auto transposed = transpose_to_documents(classify_transposed(model, test, icfg, stats, 4));

    const double argmax_maf = evaluate_results(Measure::Mafs, per_doc, test);
    const double transposed_maf = evaluate_results(Measure::Mafs, transposed, test);
    const double elapsed = seconds_since(t0);
    return {transposed_maf >= argmax_maf + 0.03 && elapsed < 120,
            "transposed maF " + fmt_double(transposed_maf) + ", argmax maF " + fmt_double(argmax_maf) + ", " +
                fmt_double(elapsed) + " s"};
}

// ---------------------------------------------------------------------------

Outcome ridge_oracle() {
    Rng rng(1004);
    double worst = 0;
    constexpr std::size_t kRows = 200, kDim = 20;
    for (int sys = 0; sys < 50; ++sys) {
        std::vector<double> x(kRows * kDim), y(kRows), beta(kDim);
        for (auto& b : beta) b = standard_normal(rng);
        for (std::size_t r = 0; r < kRows; ++r) {
            double t = standard_normal(rng);
            for (std::size_t j = 0; j < kDim; ++j) {
                x[r * kDim + j] = standard_normal(rng) + 0.5;
                t += beta[j] * x[r * kDim + j];
            }
            y[r] = t;
        }
        for (double lambda : {1e-9, 1.0, 1000.0, 1e12}) {
            const auto got = fit_ridge(x, y, kDim, lambda);
            const auto want = oracle::normal_equations(x, y, kDim, lambda);
            double num = (got.intercept - want.intercept) * (got.intercept - want.intercept);
            double den = want.intercept * want.intercept;
            for (std::size_t j = 0; j < kDim; ++j) {
                num += (got.slopes[j] - want.slopes[j]) * (got.slopes[j] - want.slopes[j]);
                den += want.slopes[j] * want.slopes[j];
            }
            worst = std::max(worst, std::sqrt(num / den));
        }
    }
    const bool default_lambda = kDefaultRidgeLambda == 1000.0 && CombineConfig{}.lambda == 1000.0;
    return {worst <= 1e-6 && default_lambda,
            "50 systems x 4 lambdas, max relative error " + fmt_double(worst) + ", default lambda " +
                fmt_double(kDefaultRidgeLambda)};
}

// ---------------------------------------------------------------------------

Outcome stacking_gain() {
    const auto t0 = Clock::now();
    const synth::EnsembleSpec spec{.docs = 1000, .labels = 800, .specialists = 4};
    const auto sizes = synth::ensemble_label_sizes(1005, spec);
    const auto train = synth::ensemble_problem(1006, spec, sizes, 0);
    const auto test = synth::ensemble_problem(1007, spec, sizes, 100000);
    const auto stats = synth::ensemble_stats(spec, sizes);
    const CombineConfig cfg{.workers = 4};
    const auto model = fit_vote_regressors(train.outputs, train.gold, stats, cfg);
    const double stacked = synth::results_macro_f(combine(test.outputs, model, stats, spec.docs, cfg), test.gold);
    double best_single = 0;
    for (const auto& o : test.outputs) best_single = std::max(best_single, synth::results_macro_f(synth::output_results(o), test.gold));
    const double elapsed = seconds_since(t0);
    return {stacked >= best_single + 0.02 && elapsed < 120,
            "stacked maF " + fmt_double(stacked) + ", best single " + fmt_double(best_single) + ", " +
                fmt_double(elapsed) + " s"};
}

// ---------------------------------------------------------------------------

Outcome weight_scale_invariance() {
    Rng rng(1008);
    std::size_t differing = 0;
    const SelectionConfig cfg;
    for (int label = 0; label < 1000; ++label) {
        const std::size_t m = 2 + uniform_index(rng, 5);
        std::vector<InstanceList> lists(m);
        for (auto& l : lists) {
            std::set<DocId> docs;
            const auto n = uniform_index(rng, 15);
            while (docs.size() < n) docs.insert(uniform_index(rng, 40));
            std::vector<DocId> order(docs.begin(), docs.end());
            shuffle(std::span<DocId>(order), rng);
            for (std::size_t r = 0; r < order.size(); ++r) l.push_back({order[r], 1.0 / static_cast<double>(r + 1)});
        }
        std::vector<const InstanceList*> ptrs;
        for (const auto& l : lists) ptrs.push_back(&l);
        std::vector<double> w(m);
        for (auto& x : w) x = uniform01(rng) < 0.2 ? 0.0 : uniform01(rng) * 3;
        const std::size_t n0 = 1 + uniform_index(rng, 10);
        const auto base = vote_and_select(ptrs, w, n0, cfg);
        for (double c : {0.1, 3.0, 100.0}) {
            std::vector<double> scaled(w);
            for (auto& x : scaled) x *= c;
            const auto got = vote_and_select(ptrs, scaled, n0, cfg);
            bool same = got.size() == base.size();
            for (std::size_t i = 0; same && i < got.size(); ++i) same = got[i].doc == base[i].doc;
            differing += same ? 0 : 1;
        }
    }
    return {differing == 0, "1000 labels x 3 scales, differing selections " + std::to_string(differing)};
}

// ---------------------------------------------------------------------------

std::string pipeline_outputs(std::size_t workers) {
    std::ostringstream all;
    const auto corpus = synth::topic_corpus(1009, {.num_docs = 900, .vocab = 300, .labels = 30});
    const auto seg = segment(corpus, 600, 300, 11);
    auto [ens_train, ens_test] = synth::split_corpus(seg.ensemble_train, 150, 12);

    std::vector<ClassifierOutput> train_outputs, test_outputs;
    const char* templates[] = {"mafs3_s3_kd_u_jm3_kdp5_bm18ti_pct0_ps7_iw2", "mafs_s6_lp_u_jm2_bm18tib_mc0_pct0_ps5",
                               "mafs3_s1_uc1_jm3_bm18ti_pci7_pct0_psX_iw1"};
    for (std::uint32_t t = 0; t < 3; ++t) {
        const auto tmpl = parse_template_name(templates[t]);
        RunSettings settings{resolve_template(tmpl), {}};
        const auto split = make_fold(seg.base_train, FoldSpec::for_index(*tmpl.fold(), 100, 13));
        const auto spec = default_param_spec(tmpl, settings);
        OptimizeOptions opts;
        opts.dev = {tmpl.measure, 20, workers, nullptr};
        opts.search = {.seed = 14, .outer_iterations = 2, .batch_size = 4, .workers = static_cast<unsigned>(workers)};
        const auto result = optimize_parameters(split.dry_train, split.dry_dev, settings, spec, opts);
        write_param_spec(all, result.best);
        apply_parameters(settings, spec, result.state.best_params);

        const auto model = train_model(seg.base_train, settings.resolved.model);
        save_model(all, model);
        const auto stats = model_label_stats(model);
        InstantiateConfig icfg = settings.resolved.instantiate;
        if (!settings.resolved.transposed) icfg.instantiate_weight = 1;
        const auto on_train = classify_transposed(model, ens_train, icfg, stats, workers);
        const auto on_test = classify_transposed(model, ens_test, icfg, stats, workers);
        write_transposed(all, on_train);
        write_transposed(all, on_test);
        write_document_results(all, classify_documents(model, ens_test, {20, settings.policy, workers}));
        train_outputs.push_back(make_classifier_output(t, on_train));
        test_outputs.push_back(make_classifier_output(t, on_test));
    }
    const auto gold = corpus_label_sets(ens_train);
    const auto stats = labelset_stats(ens_train);
    const CombineConfig cfg{.workers = workers};
    const auto vote = fit_vote_regressors(train_outputs, gold, stats, cfg);
    write_transposed(all, combine(test_outputs, vote, stats, ens_test.size(), cfg));
    all << cross_validate(train_outputs, gold, stats, cfg, 3, 15) << '\n';
    return all.str();
}

Outcome deterministic_pipeline() {
    const auto reference = pipeline_outputs(1);
    std::vector<std::string> mismatches;
    for (std::size_t w : {1, 4, 8}) {
        for (int run = 0; run < 2; ++run) {
            if (pipeline_outputs(w) != reference) mismatches.push_back("W=" + std::to_string(w));
        }
    }
    std::string detail = std::to_string(reference.size()) + " bytes compared over W in {1, 4, 8}, 2 runs each";
    for (const auto& m : mismatches) detail += "; differs at " + m;
    return {mismatches.empty(), detail};
}

// ---------------------------------------------------------------------------

Outcome random_search_convergence() {
    const ParamSpec spec{{ParamDef{"x", 0.0, 10.0, Transform::Linear, 0.0, 1.0, false}}};
    const Objective f = [](const ParamVector& p) { return -(p[0] - 3) * (p[0] - 3); };
    int hits = 0;
    bool monotone = true;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto state = run_search(f, spec, {.seed = seed, .outer_iterations = 40, .batch_size = 8});
        hits += std::abs(state.best_params[0] - 3) < 0.1 ? 1 : 0;
        for (std::size_t i = 1; i < state.best_trace.size(); ++i) {
            monotone = monotone && state.best_trace[i] >= state.best_trace[i - 1];
        }
    }
    return {hits >= 95 && monotone,
            std::to_string(hits) + "/100 seeds within 0.1, traces " + (monotone ? "monotone" : "not monotone")};
}

// ---------------------------------------------------------------------------

Outcome template_parsing() {
    std::vector<std::string> failures;
    for (auto name : synth::kTableTemplates) {
        try {
            const auto cfg = parse_template_name(std::string(name));
            (void)resolve_template(cfg);
        } catch (const std::exception& e) {
            failures.push_back(std::string(name) + ": " + e.what());
        }
    }
    bool row7 = false, walkthrough = false, empty_rejected = false;
    try {
        const auto c = parse_template_name("mafs3_s1_uc1_jm3_bm18ti_pci7_pct0_psX_fb_iw2");
        row7 = c.measure == Measure::Mafs3 && c.fold() == 1 && c.background == BackgroundKind::UniformCollection &&
               c.level("jm") == 3 && c.weighting == "bm18ti" && c.level("pci") == 7 && c.level("pct") == 0 &&
               c.prior_search && c.has("fb") && c.level("iw") == 2;
        const auto w = parse_template_name("mnb_mafs2_s8_lp_u_jm2_bm18ti_pct0_ps5_thr16");
        const auto r = resolve_template(w);
        walkthrough = w.has("lp") && w.background == BackgroundKind::Uniform && r.model.flags.label_powerset &&
                      r.model.smoothing.background == BackgroundKind::Uniform && r.workers == 16;
    } catch (const std::exception&) {
    }
    try {
        (void)parse_template_name("");
    } catch (const std::invalid_argument&) {
        empty_rejected = true;
    }
    std::string detail = std::to_string(synth::kTableTemplates.size() - failures.size()) + "/" +
                         std::to_string(synth::kTableTemplates.size()) + " names parse, row 7 " +
                         (row7 ? "ok" : "wrong") + ", walkthrough " + (walkthrough ? "ok" : "wrong") +
                         ", empty name " + (empty_rejected ? "rejected" : "accepted");
    for (const auto& f : failures) detail += "; " + f;
    return {failures.empty() && row7 && walkthrough && empty_rejected, detail};
}

// ---------------------------------------------------------------------------

std::vector<DocId> ids_of(const Corpus& c) {
    std::vector<DocId> out;
    for (const auto& d : c.documents) out.push_back(d.doc_id);
    std::sort(out.begin(), out.end());
    return out;
}

bool partition_with_shared_dev(const Corpus& base, std::initializer_list<int> folds, std::size_t dev_size,
                               std::uint64_t seed) {
    std::vector<DocId> dev, train_union;
    bool ok = true;
    for (int f : folds) {
        const auto split = make_fold(base, FoldSpec::for_index(f, dev_size, seed));
        const auto d = ids_of(split.dry_dev);
        if (dev.empty()) dev = d;
        ok = ok && d == dev;
        const auto t = ids_of(split.dry_train);
        train_union.insert(train_union.end(), t.begin(), t.end());
    }
    std::sort(train_union.begin(), train_union.end());
    // the training parts must be disjoint and cover everything outside dev
    const auto all = ids_of(base);
    std::vector<DocId> expected;
    std::set_difference(all.begin(), all.end(), dev.begin(), dev.end(), std::back_inserter(expected));
    return ok && train_union == expected;
}

Outcome fold_partitions() {
    const auto base = synth::topic_corpus(1010, {.num_docs = 1000});
    int bad_partitions = 0, overlapping = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        bad_partitions += partition_with_shared_dev(base, {3, 4, 5}, 100, seed) ? 0 : 1;
        bad_partitions += partition_with_shared_dev(base, {6, 7, 8, 9}, 100, seed) ? 0 : 1;
        std::vector<std::vector<DocId>> devs;
        for (int f : {0, 1, 2}) devs.push_back(ids_of(make_fold(base, FoldSpec::for_index(f, 100, seed)).dry_dev));
        for (int a = 0; a < 3; ++a) {
            for (int b = a + 1; b < 3; ++b) {
                std::vector<DocId> both;
                std::set_intersection(devs[a].begin(), devs[a].end(), devs[b].begin(), devs[b].end(),
                                      std::back_inserter(both));
                overlapping += both.empty() ? 0 : 1;
            }
        }
    }
    return {bad_partitions == 0 && overlapping == 0,
            "100 seeds, broken partitions " + std::to_string(bad_partitions) + ", overlapping dev pairs " +
                std::to_string(overlapping)};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"sparse-dense-equivalence", sparse_dense_equivalence},
        {"metric-oracles", metric_oracles},
        {"transposed-beats-argmax", transposed_beats_argmax},
        {"ridge-normal-equations", ridge_oracle},
        {"stacking-gain", stacking_gain},
        {"vote-weight-scale-invariance", weight_scale_invariance},
        {"deterministic-pipeline", deterministic_pipeline},
        {"random-search-convergence", random_search_convergence},
        {"template-parsing", template_parsing},
        {"fold-partitions", fold_partitions},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
