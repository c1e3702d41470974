#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "support/synth.hpp"
#include "xmlc/corpus.hpp"
#include "xmlc/text.hpp"

using namespace xmlc;

namespace {

Corpus numbered(std::size_t n) {
    Corpus c;
    for (std::size_t i = 0; i < n; ++i) {
        c.documents.push_back({i, {{static_cast<FeatureId>(i % 7), 1.0}}, {static_cast<LabelId>(i % 3)}});
    }
    return c;
}

std::set<DocId> ids(const Corpus& c) {
    std::set<DocId> out;
    for (const auto& d : c.documents) out.insert(d.doc_id);
    return out;
}

}  // namespace

TEST_CASE("dataset lines") {
    auto d = parse_document_line("12,34 5:2 8:1", 1);
    CHECK(d.labels == std::vector<LabelId>{12, 34});
    CHECK(d.features == std::vector<FeatureValue>{{5, 2}, {8, 1}});

    d = parse_document_line("7 3:1", 1);
    CHECK(d.labels == std::vector<LabelId>{7});
    CHECK(d.features == std::vector<FeatureValue>{{3, 1}});

    d = parse_document_line("1, 2 4:1", 1);
    CHECK(d.labels == std::vector<LabelId>{1, 2});

    d = parse_document_line("3:1 9:4", 1);
    CHECK(d.labels.empty());
    CHECK(d.length() == 5);

    CHECK_THROWS_AS(parse_document_line("5:1 9,9:2", 1), ParseError);
    CHECK_THROWS_AS(parse_document_line("1 5:-1", 1), ParseError);
    CHECK_THROWS_AS(parse_document_line("1 5:0", 1), ParseError);
    CHECK_THROWS_AS(parse_document_line("1 5:1 5:2", 1), ParseError);
    CHECK_THROWS_AS(parse_document_line("1", 1), ParseError);
}

TEST_CASE("parse errors name the line") {
    std::istringstream in("1 2:1\n\n2 x:1\n");
    try {
        parse_dataset(in, "f");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
}

TEST_CASE("dataset round trip") {
    auto c = synth::topic_corpus(5, {.num_docs = 50, .unlabeled_share = 0.2});
    c.documents.erase(c.documents.begin() + 3);  // ids no longer match line numbers
    std::ostringstream out;
    write_dataset(out, c);
    std::istringstream in(out.str());
    const auto back = parse_dataset(in, "mem");
    CHECK(back.documents == c.documents);
}

TEST_CASE("segment") {
    const auto c = numbered(10);
    const auto s = segment(c, 8, 2, 3);
    CHECK(s.base_train.size() == 8);
    CHECK(s.ensemble_train.size() == 2);
    auto a = ids(s.base_train);
    for (auto id : ids(s.ensemble_train)) CHECK_FALSE(a.contains(id));
    const auto again = segment(c, 8, 2, 3);
    CHECK(again.base_train.documents == s.base_train.documents);
    CHECK_THROWS(segment(c, 9, 2, 3));
    CHECK(kDefaultBaseSize == 2341782);
    CHECK(kDefaultEnsembleSize == 23654);
}

TEST_CASE("fold schemes") {
    CHECK(scheme_for_fold(0) == FoldScheme::ExclusiveDev);
    CHECK(scheme_for_fold(5) == FoldScheme::RandomThirds);
    CHECK(scheme_for_fold(9) == FoldScheme::OrderedQuarters);

    const auto c = numbered(12);
    const auto q = make_fold(c, FoldSpec::for_index(6, 0, 1));
    CHECK(ids(q.dry_train) == std::set<DocId>{0, 1, 2});
    CHECK(q.dry_dev.empty());

    const auto f0 = make_fold(numbered(10), FoldSpec::for_index(0, 2, 9));
    const auto f1 = make_fold(numbered(10), FoldSpec::for_index(1, 2, 9));
    CHECK(f0.dry_dev.size() == 2);
    for (auto id : ids(f0.dry_dev)) CHECK_FALSE(ids(f1.dry_dev).contains(id));
    CHECK(ids(f0.dry_train).size() + 2 == 10);
}

TEST_CASE("shuffle keeps documents") {
    auto c = synth::topic_corpus(1, {.num_docs = 40});
    auto before = c.documents;
    shuffle_corpus(c, 7);
    CHECK(c.documents != before);
    auto key = [](const SparseDocument& a, const SparseDocument& b) { return a.doc_id < b.doc_id; };
    std::sort(c.documents.begin(), c.documents.end(), key);
    CHECK(c.documents == before);
}

TEST_CASE("label statistics") {
    Corpus c;
    c.documents.push_back({0, {{1, 1}}, {1, 2}});
    c.documents.push_back({1, {{1, 1}}, {1}});
    c.documents.push_back({2, {{1, 1}}, {}});
    const auto s = labelset_stats(c);
    CHECK(s.label_freq == std::map<LabelId, std::uint64_t>{{1, 2}, {2, 1}});
    CHECK(s.labelset_freq == std::map<std::string, std::uint64_t>{{"1,2", 1}, {"1", 1}});
    CHECK(s.total_docs == 3);
    CHECK(labelset_stats(Corpus{}).label_freq.empty());

    const auto r = synth::topic_corpus(11, {.num_docs = 1000});
    const auto rs = labelset_stats(r);
    std::map<LabelId, std::uint64_t> recount;
    for (const auto& d : r.documents) {
        for (auto l : d.labels) ++recount[l];
    }
    CHECK(rs.label_freq == recount);
}

TEST_CASE("hierarchy file") {
    std::istringstream in("1 5\n2 5\n1 5\n");
    const auto h = parse_hierarchy(in, "h");
    const auto p = h.parents_of(5);
    CHECK(std::vector<LabelId>(p.begin(), p.end()) == std::vector<LabelId>{1, 2});
    CHECK(h.edges().size() == 2);
    std::istringstream empty("");
    CHECK(parse_hierarchy(empty, "e").empty());
    std::istringstream bad("1 x\n");
    CHECK_THROWS_AS(parse_hierarchy(bad, "b"), ParseError);
}
