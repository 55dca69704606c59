#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include "fixtures.hpp"
#include "pescourse/corpus.hpp"
#include "pescourse/error.hpp"

using namespace pescourse;
using fixtures::make_doc;

TEST_CASE("snippets stay within the cap and come from the paragraph") {
    std::string para;
    for (int i = 0; i < 80; ++i) para += "żółć" + std::to_string(i) + "  ";
    const std::string snippet = make_snippet(para);
    CHECK(utf8_length(snippet) <= kSnippetTarget);
    CHECK(utf8_length(snippet) > kSnippetTarget / 2);
    CHECK(snippet_is_extract(snippet, para));
    CHECK(snippet.back() != ' ');
    CHECK(make_snippet("short text") == "short text");
    CHECK(utf8_length("ąę") == 2);
}

TEST_CASE("document validation") {
    auto doc = make_doc("d1", "A paragraph about anaemia.");
    CHECK_NOTHROW(check_document(doc));
    CHECK(document_from_json(document_to_json(doc)) == doc);

    auto bad_date = doc;
    bad_date.publication_date = "2020-13-01";
    CHECK_THROWS_AS(check_document(bad_date), Error);

    auto not_extract = doc;
    not_extract.snippet = "something else";
    CHECK_THROWS_AS(check_document(not_extract), Error);

    auto long_snippet = make_doc("d2", std::string(300, 'a'));
    long_snippet.snippet = std::string(161, 'a');
    CHECK_THROWS_AS(check_document(long_snippet), Error);
    long_snippet.snippet = std::string(160, 'a');
    CHECK_NOTHROW(check_document(long_snippet));

    auto j = document_to_json(doc);
    j.erase("snippet");
    CHECK(document_from_json(j).snippet == make_snippet(doc.paragraph));
}

TEST_CASE("store rejects duplicates and keeps insertion order") {
    CorpusStore store;
    store.add(make_doc("b", "x"));
    store.add(make_doc("a", "y"));
    CHECK_THROWS_AS(store.add(make_doc("a", "z")), DuplicateIdError);
    REQUIRE(store.size() == 2);
    CHECK(store.documents()[0].doc_id == "b");
    CHECK(store.find("a")->paragraph == "y");
    CHECK(store.find("nope") == nullptr);
    CHECK_THROWS_AS(store.at("nope"), Error);
}

TEST_CASE("corpus file round trip and line-numbered errors") {
    CorpusStore store;
    store.add(make_doc("d1", "First paragraph.", SourceKind::Guideline));
    store.add(make_doc("d2", "Drugi akapit z polskimi znakami: źdźbło.", SourceKind::CaseReport));
    const std::string text = "# header\n\n" + render_corpus(store);
    const CorpusStore back = parse_corpus(text);
    CHECK(back.documents() == store.documents());

    try {
        parse_corpus("# c\n{\"doc_id\":\"x\",\"paragraph\":\"p\",\"publication_date\":\"2020-01-01\"}\n{bad\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.is_line());
        CHECK(e.offset() == 3);
    }
    CHECK_THROWS_AS(parse_corpus(render_corpus(store) + render_corpus(store)), DuplicateIdError);

    const auto path = std::filesystem::temp_directory_path() / "pescourse_corpus_test" / "c.jsonl";
    write_file(path, render_corpus(store));
    CHECK(load_corpus(path).documents() == store.documents());
    std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("source ordering: tier, then recency, then id") {
    std::vector<CorpusDocument> docs{
        make_doc("c", "p", SourceKind::CaseReport, "2024-01-01"),
        make_doc("j", "p", SourceKind::JournalArticle, "2023-01-01"),
        make_doc("t-old", "p", SourceKind::Textbook, "2010-01-01"),
        make_doc("g-new", "p", SourceKind::Guideline, "2022-01-01"),
        make_doc("a-new", "p", SourceKind::Textbook, "2022-01-01"),
        make_doc("o", "p", SourceKind::Other, "2025-01-01"),
    };
    std::sort(docs.begin(), docs.end(), [](const auto& a, const auto& b) { return compare_sources(a, b) < 0; });
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.doc_id);
    CHECK(ids == std::vector<std::string>{"a-new", "g-new", "t-old", "j", "c", "o"});
    CHECK(source_tier(SourceKind::Guideline) == source_tier(SourceKind::Textbook));
    CHECK(source_kind_from_string("JournalArticle") == SourceKind::JournalArticle);
    CHECK_FALSE(source_kind_from_string("Blog").has_value());
}
