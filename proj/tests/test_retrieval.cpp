#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "fixtures.hpp"
#include "pescourse/error.hpp"
#include "pescourse/retrieval.hpp"

using namespace pescourse;
using fixtures::make_doc;

namespace {

CorpusStore store_of(std::initializer_list<std::pair<const char*, const char*>> docs) {
    CorpusStore s;
    for (auto [id, text] : docs) s.add(make_doc(id, text));
    return s;
}

std::vector<std::string> ids(const std::vector<ScoredDoc>& hits) {
    std::vector<std::string> out;
    for (const auto& h : hits) out.push_back(h.doc_id);
    return out;
}

}  // namespace

TEST_CASE("idf formula") {
    CHECK(bm25_idf(10, 1) == doctest::Approx(std::log(1.0 + 9.5 / 1.5)));
    CHECK(bm25_idf(10, 10) > 0.0);
}

TEST_CASE("hand-computed single-term score") {
    const auto store = store_of({{"a", "fever fever cough"}, {"b", "cough"}});
    const auto idx = build_index(store, {});
    const auto hits = idx.search({{"fever", 1.0}}, 10);
    REQUIRE(hits.size() == 1);
    const double avg = 2.0, idf = std::log(1.0 + (2 - 1 + 0.5) / 1.5);
    const double expect = idf * (2.0 * 2.2) / (2.0 + 1.2 * (0.25 + 0.75 * 3.0 / avg));
    CHECK(hits[0].doc_id == "a");
    CHECK(hits[0].score == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ties break by doc_id, zero scores are dropped, k truncates") {
    const auto store = store_of({{"z", "anemia iron"}, {"m", "anemia iron"}, {"a", "anemia iron"}, {"q", "unrelated"}});
    const auto idx = build_index(store, {});
    CHECK(ids(idx.search({{"anemia", 1.0}}, 10)) == std::vector<std::string>{"a", "m", "z"});
    CHECK(ids(idx.search({{"anemia", 1.0}}, 2)) == std::vector<std::string>{"a", "m"});
    CHECK(idx.search({{"nothing", 1.0}}, 10).empty());
    CHECK_THROWS_AS(idx.search({{"anemia", 1.0}}, 0), DomainError);
    CHECK(idx.doc_length("a") == 2);
}

TEST_CASE("synonym recall through search_text") {
    AnalyzerConfig c;
    c.synonyms = parse_synonyms("myocardial infarction, heart attack\n");
    const auto store = store_of({{"d1", "Acute heart attack management"}, {"d2", "Asthma in children"}});
    const auto idx = build_index(store, c);
    const auto hits = idx.search_text("infarction", 5);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == "d1");
    CHECK(hits[0].score > 0.0);
}

TEST_CASE("adding an occurrence never lowers the score") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        auto corpus = fixtures::random_token_corpus(rng, 20, 15);
        const auto q = fixtures::random_query(rng, 15);
        const std::string term = q.begin()->first;
        // Same documents, with one extra occurrence of `term` appended to doc 0.
        CorpusStore bumped;
        for (std::size_t i = 0; i < corpus.ids.size(); ++i) {
            std::string text = corpus.store.documents()[i].paragraph;
            if (i == 0) text += " " + term;
            bumped.add(make_doc(corpus.ids[i], text));
        }
        auto score_of = [&](const InvertedIndex& idx) {
            for (const auto& h : idx.search({{term, 1.0}}, 100)) {
                if (h.doc_id == corpus.ids[0]) return h.score;
            }
            return 0.0;
        };
        const auto before = build_index(corpus.store, {});
        const auto after = build_index(bumped, {});
        const double s0 = score_of(before);
        const double s1 = score_of(after);
        CHECK(s1 > s0);
    }
}

TEST_CASE("engine matches the brute-force oracle") {
    std::mt19937_64 rng(77);
    for (int c = 0; c < 10; ++c) {
        std::uniform_int_distribution<std::size_t> n_docs(1, 100);
        auto corpus = fixtures::random_token_corpus(rng, n_docs(rng), 30);
        const auto idx = build_index(corpus.store, {});
        for (int qn = 0; qn < 50; ++qn) {
            const auto q = fixtures::random_query(rng, 30);
            const std::size_t k = qn % 3 == 0 ? 5 : 1000;
            const auto got = idx.search(q, k);
            const auto want = fixtures::oracle_bm25(corpus, q, k);
            REQUIRE(ids(got) == ids(want));
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(std::fabs(got[i].score - want[i].score) <= 1e-9 * std::fabs(want[i].score));
            }
        }
    }
}

TEST_CASE("index bundle round trip keeps results identical") {
    std::mt19937_64 rng(9);
    auto corpus = fixtures::random_token_corpus(rng, 40, 25);
    AnalyzerConfig c;
    c.synonyms = parse_synonyms("w1, w2\n");
    c.stopwords = {"w0"};
    IndexBundle bundle{corpus.store, build_index(corpus.store, c)};
    const auto path = std::filesystem::temp_directory_path() / "pescourse_index_test.json";
    save_index_bundle(bundle, path);
    const IndexBundle back = load_index_bundle(path);
    std::filesystem::remove(path);
    CHECK(back.corpus.documents() == bundle.corpus.documents());
    CHECK(back.index.config() == c);
    CHECK(back.index.doc_count() == bundle.index.doc_count());
    for (int i = 0; i < 30; ++i) {
        const std::string text = "w" + std::to_string(i) + " w" + std::to_string(i + 3);
        CHECK(back.index.search_text(text, 50) == bundle.index.search_text(text, 50));
    }
}
