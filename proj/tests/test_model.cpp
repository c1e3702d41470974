#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/oracle.hpp"
#include "support/synth.hpp"
#include "xmlc/inference.hpp"
#include "xmlc/model.hpp"

using namespace xmlc;

namespace {

Corpus two_feature_corpus() {
    Corpus c;
    c.documents.push_back({0, {{1, 3}, {2, 1}}, {0}});
    return c;
}

double vocab_sum(const SgmModel& m, const std::function<double(FeatureId)>& p) {
    double s = 0;
    for (auto f : m.vocabulary()) s += p(f);
    return s;
}

std::string saved(const SgmModel& m) {
    std::ostringstream out;
    save_model(out, m);
    return out.str();
}

}  // namespace

TEST_CASE("counting") {
    Corpus c;
    c.documents.push_back({0, {{5, 1}}, {7}});
    c.documents.push_back({1, {{5, 1}}, {7}});
    const auto m = train_model(c, {});
    REQUIRE(m.classes().size() == 1);
    const auto& cls = m.classes()[0];
    CHECK(sparse_lookup(cls.weights, 5) == 2);
    CHECK(cls.norm == 2);
    CHECK(cls.prior == 1);
}

TEST_CASE("minimum label count drops singletons") {
    Corpus c;
    c.documents.push_back({0, {{5, 1}}, {1}});
    c.documents.push_back({1, {{5, 1}}, {1}});
    c.documents.push_back({2, {{6, 1}}, {2}});
    ModelConfig cfg;
    cfg.pruning.min_label_count = 2;
    const auto m = train_model(c, cfg);
    CHECK(m.has_class(1));
    CHECK_FALSE(m.has_class(2));
}

TEST_CASE("label norms match a recount") {
    const auto c = synth::topic_corpus(21, {.num_docs = 200});
    const auto m = train_model(c, {});
    std::map<LabelId, double> recount;
    for (const auto& d : c.documents) {
        for (auto l : d.labels) recount[l] += d.length();
    }
    for (const auto& cls : m.classes()) CHECK(cls.norm == doctest::Approx(recount[cls.id]).epsilon(1e-12));
}

TEST_CASE("jelinek-mercer example") {
    ModelConfig cfg;
    cfg.smoothing.jm_lambda = 0.5;
    const auto m = train_model(two_feature_corpus(), cfg);
    CHECK(m.label_word_prob(0, 1) == doctest::Approx(0.625).epsilon(1e-15));
    CHECK_THROWS((void)m.label_word_prob(9, 1));

    cfg.smoothing.jm_lambda = 0.0;
    const auto ml = train_model(two_feature_corpus(), cfg);
    CHECK(ml.label_word_prob(0, 1) == 0.75);
    CHECK(ml.label_word_prob(0, 2) == 0.25);
}

TEST_CASE("label distributions sum to one") {
    const auto c = synth::topic_corpus(8, {.num_docs = 150, .vocab = 400});
    Hierarchy h;
    for (LabelId l = 1; l < 20; ++l) h.add_edge(100 + l % 3, l);
    for (auto bg : {BackgroundKind::Uniform, BackgroundKind::UniformCollection}) {
        ModelConfig cfg;
        cfg.smoothing.background = bg;
        cfg.smoothing.collection_mix = 0.3;
        cfg.smoothing.hierarchy_mix = 0.4;
        cfg.flags.hierarchy_smoothing = true;
        cfg.weighting = {WeightingScheme::Bm18ti, 1.2, 0.75, 1.0, 1.0, 1.0};
        const auto m = train_model(c, cfg, &h);
        CHECK(vocab_sum(m, [&](FeatureId f) { return m.background_prob(f); }) == doctest::Approx(1.0).epsilon(1e-9));
        for (const auto& cls : m.classes()) {
            const double s = vocab_sum(m, [&](FeatureId f) { return m.label_word_prob(cls.id, f); });
            CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("zero hierarchy mix equals the flat model") {
    const auto c = synth::topic_corpus(9, {.num_docs = 100});
    Hierarchy h;
    for (LabelId l = 0; l < 20; ++l) h.add_edge(50, l);
    ModelConfig cfg;
    const auto flat = train_model(c, cfg);
    cfg.flags.hierarchy_smoothing = true;
    const auto tree = train_model(c, cfg, &h);
    for (const auto& cls : flat.classes()) {
        for (auto f : flat.vocabulary()) CHECK(flat.label_word_prob(cls.id, f) == tree.label_word_prob(cls.id, f));
    }
}

TEST_CASE("kernel density example") {
    Corpus c;
    c.documents.push_back({0, {{1, 2}}, {0}});
    c.documents.push_back({1, {{2, 1}}, {1}});
    ModelConfig cfg;
    cfg.flags.kernel_densities = true;
    cfg.flags.no_backoff = true;
    cfg.smoothing.dirichlet_mu = 2;
    const auto m = train_model(c, cfg);
    CHECK(m.kernel_doc_prob(0, 0, 1) == doctest::Approx(0.75).epsilon(1e-15));

    cfg.smoothing.dirichlet_mu = 1e-12;
    const auto ml = train_model(c, cfg);
    CHECK(ml.kernel_doc_prob(0, 0, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("kernel distributions sum to one") {
    const auto c = synth::topic_corpus(10, {.num_docs = 60, .vocab = 300});
    for (bool nobo : {false, true}) {
        ModelConfig cfg;
        cfg.flags.kernel_densities = true;
        cfg.flags.no_backoff = nobo;
        const auto m = train_model(c, cfg);
        for (const auto& cls : m.classes()) {
            for (std::size_t k = 0; k < cls.kernels.size(); ++k) {
                const double s = vocab_sum(m, [&](FeatureId f) { return m.kernel_doc_prob(cls.id, k, f); });
                CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("no back-off ignores label conditionals") {
    const auto c = synth::topic_corpus(12, {.num_docs = 80});
    const auto docs = synth::topic_corpus(13, {.num_docs = 10});
    ModelConfig cfg;
    cfg.flags.kernel_densities = true;
    cfg.flags.no_backoff = true;
    const auto m = train_model(c, cfg);
    const auto stripped = m.without_label_conditionals();
    const InvertedIndex a(m), b(stripped);
    for (const auto& d : docs.documents) {
        const auto pa = a.score(m.weight(d), 100);
        const auto pb = b.score(stripped.weight(d), 100);
        REQUIRE(pa.ranked.size() == pb.ranked.size());
        for (std::size_t i = 0; i < pa.ranked.size(); ++i) {
            CHECK(pa.ranked[i].cls == pb.ranked[i].cls);
            CHECK(pa.ranked[i].score == pb.ranked[i].score);
        }
    }
}

TEST_CASE("label powerset") {
    Corpus c;
    c.documents.push_back({0, {{1, 1}}, {1, 2}});
    c.documents.push_back({1, {{1, 1}}, {1}});
    c.documents.push_back({2, {{1, 1}}, {1, 2}});
    auto enc = encode_label_powerset(c);
    CHECK(enc.powerset.size() == 2);
    CHECK(enc.meta_corpus.documents[2].labels == enc.meta_corpus.documents[0].labels);
    for (const auto& d : c.documents) {
        const auto id = *enc.powerset.find(d.labels);
        CHECK(decode_label_powerset(enc.powerset, id) == d.labels);
    }
    CHECK_THROWS_AS((void)enc.powerset.decode(999), std::out_of_range);

    c.documents.push_back({3, {{1, 1}}, {}});
    CHECK_THROWS_AS(encode_label_powerset(c), std::invalid_argument);

    const auto r = synth::topic_corpus(14, {.num_docs = 300, .labels = 6});
    std::set<std::vector<LabelId>> distinct;
    for (const auto& d : r.documents) distinct.insert(d.labels);
    CHECK(encode_label_powerset(r).powerset.size() == distinct.size());
}

TEST_CASE("safe pruning keeps every positive count") {
    const auto c = synth::topic_corpus(15, {.num_docs = 100});
    ModelConfig cfg;
    cfg.pruning.precomputed_prune = 0;
    const auto m = train_model(c, cfg);
    std::map<LabelId, std::set<FeatureId>> seen;
    for (const auto& d : c.documents) {
        for (auto l : d.labels) {
            for (const auto& f : d.features) seen[l].insert(f.id);
        }
    }
    for (const auto& cls : m.classes()) CHECK(cls.weights.size() == seen[cls.id].size());

    cfg.pruning.precomputed_prune = 1.5;
    const auto pruned = train_model(c, cfg);
    for (const auto& cls : pruned.classes()) {
        for (const auto& w : cls.weights) CHECK(w.value >= 1.5);
    }
}

TEST_CASE("minimum feature count") {
    Corpus c;
    c.documents.push_back({0, {{1, 3}, {2, 1}}, {0}});
    ModelConfig cfg;
    cfg.pruning.min_count = 2;
    const auto m = train_model(c, cfg);
    CHECK(m.in_vocabulary(1));
    CHECK_FALSE(m.in_vocabulary(2));
}

TEST_CASE("model files round trip") {
    const auto c = synth::topic_corpus(16, {.num_docs = 120});
    const auto docs = synth::topic_corpus(17, {.num_docs = 10});
    Hierarchy h;
    for (LabelId l = 0; l < 20; ++l) h.add_edge(30 + l % 2, l);
    std::vector<ModelConfig> configs(4);
    configs[1].flags.label_powerset = true;
    configs[1].weighting = {WeightingScheme::Bm25c, 1.2, 0.75, 1.0, 1.0, 1.0};
    configs[2].flags.kernel_densities = true;
    configs[2].smoothing.background = BackgroundKind::UniformCollection;
    configs[3].flags.hierarchy_smoothing = true;
    configs[3].smoothing.hierarchy_mix = 0.3;
    for (const auto& cfg : configs) {
        const auto m = train_model(c, cfg, &h);
        const auto text = saved(m);
        std::istringstream in(text);
        const auto back = load_model(in, "mem");
        CHECK(saved(back) == text);
        for (const auto& d : docs.documents) {
            const auto a = oracle::dense_scores(m, m.weight(d));
            const auto b = oracle::dense_scores(back, back.weight(d));
            CHECK(a == b);
        }
    }
}

TEST_CASE("config validation") {
    ModelConfig cfg;
    cfg.smoothing.jm_lambda = 1.0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.smoothing.dirichlet_mu = 0;
    cfg.flags.kernel_densities = true;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.flags.no_backoff = true;
    CHECK_THROWS(cfg.validate());
}
