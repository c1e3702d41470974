#include <doctest.h>

#include <cmath>

#include "support/metric_oracle.hpp"
#include "support/synth.hpp"
#include "xmlc/metrics.hpp"

using namespace xmlc;

TEST_CASE("fixed measure values") {
    EvalPair half{{{1, {1}}, {2, {}}}, {{1, {1}}, {2, {2}}}};
    CHECK(macro_fscore(half) == 0.5);

    EvalPair third{{{1, {1}}}, {{1, {1, 2, 3}}}};
    CHECK(mean_jaccard(third) == doctest::Approx(1.0 / 3).epsilon(1e-15));

    const LabelSets ranked{{1, {2, 1}}};
    const LabelSets gold{{1, {1}}};
    CHECK(ndcg_at_5(ranked, gold) == doctest::Approx(1.0 / std::log2(3.0)).epsilon(1e-15));
}

TEST_CASE("edge cases") {
    EvalPair empty;
    CHECK_THROWS_AS(macro_fscore(empty), std::invalid_argument);
    CHECK_THROWS_AS(micro_fscore(empty), std::invalid_argument);
    CHECK(mean_jaccard(empty) == 0.0);

    EvalPair both_empty{{{1, {}}}, {{1, {}}}};
    CHECK(mean_jaccard(both_empty) == 1.0);

    EvalPair perfect{{{1, {1, 2}}, {2, {3}}}, {{1, {1, 2}}, {2, {3}}}};
    CHECK(macro_fscore(perfect) == 1.0);
    CHECK(micro_fscore(perfect) == 1.0);
    CHECK(mean_jaccard(perfect) == 1.0);

    // predicted-only labels do not enter the macro mean
    EvalPair extra{{{1, {1, 9}}}, {{1, {1}}}};
    CHECK(macro_fscore(extra) == 1.0);
    CHECK(micro_fscore(extra) == doctest::Approx(2.0 / 3).epsilon(1e-15));

    // duplicate ranks do not count twice
    CHECK(ndcg_at_5({{1, {1, 1, 2}}}, {{1, {1, 2}}}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(ndcg_at_5({}, {{1, {}}}) == 0.0);
}

TEST_CASE("measures agree with the set-based oracle") {
    Rng rng(51);
    for (int trial = 0; trial < 200; ++trial) {
        EvalPair p;
        p.gold = synth::random_label_sets(rng, 1 + uniform_index(rng, 20), 15, 4, 0.0);
        p.predictions = synth::random_label_sets(rng, 25, 15, 4, 0.2);
        const auto ranked = synth::random_label_sets(rng, 25, 15, 8, 0.1);
        CHECK(macro_fscore(p) == doctest::Approx(oracle::macro_f(p)).epsilon(1e-12));
        CHECK(micro_fscore(p) == doctest::Approx(oracle::micro_f(p)).epsilon(1e-12));
        CHECK(mean_jaccard(p) == doctest::Approx(oracle::jaccard(p)).epsilon(1e-12));
        CHECK(ndcg_at_5(ranked, p.gold) == doctest::Approx(oracle::ndcg5(ranked, p.gold)).epsilon(1e-12));
    }
}

TEST_CASE("surrogate penalizes labels absent from gold") {
    EvalPair p{{{1, {1, 7}}, {2, {2, 8}}}, {{1, {1}}, {2, {2}}}};
    const std::set<LabelId> universe{1, 2, 7, 8};
    CHECK(surrogate_mafs(p, universe, SurrogateConfig::preset(SurrogateVariant::Mafs)) == 1.0);
    CHECK(surrogate_mafs(p, universe, SurrogateConfig::preset(SurrogateVariant::Mafs2)) ==
          doctest::Approx(1.0 - 0.5 * 2 / 4).epsilon(1e-15));
    CHECK(surrogate_mafs(p, universe, SurrogateConfig::preset(SurrogateVariant::Mafs3)) ==
          doctest::Approx(0.5).epsilon(1e-15));
    CHECK(surrogate_mafs(p, {7}, SurrogateConfig::preset(SurrogateVariant::Mafs3)) == 0.0);
}

TEST_CASE("measure names") {
    for (auto m : {Measure::Mafs, Measure::Mafs2, Measure::Mafs3, Measure::Mifs, Measure::Mjac, Measure::Ndcg5}) {
        CHECK(measure_from_string(to_string(m)) == m);
    }
    CHECK_THROWS(measure_from_string("accuracy"));
}
