#include <doctest.h>

#include "pescourse/text_analysis.hpp"

using namespace pescourse;

using Tokens = std::vector<std::string>;

TEST_CASE("analyze lowercases and splits on punctuation") {
    AnalyzerConfig c;
    CHECK(analyze("Ból w KLATCE piersiowej, ST-elevation!", c) == Tokens{"ból", "w", "klatce", "piersiowej", "st", "elevation"});
    CHECK(analyze("  ", c).empty());
    CHECK(analyze("HbA1c 7.5%", c) == Tokens{"hba1c", "7", "5"});
    CHECK(analyze("ŻÓŁTACZKA Ωmega Щит", c) == Tokens{"żółtaczka", "ωmega", "щит"});
}

TEST_CASE("diacritic folding is optional") {
    AnalyzerConfig c;
    c.preserve_diacritics = false;
    CHECK(analyze("Zażółć gęślą jaźń", c) == Tokens{"zazolc", "gesla", "jazn"});
    CHECK(analyze("Ménière résumé", c) == Tokens{"meniere", "resume"});
}

TEST_CASE("stopwords are normalised like text") {
    AnalyzerConfig c;
    c.stopwords = parse_stopwords("# comment\nThe\nOF\n\n");
    CHECK(c.stopwords == std::set<std::string>{"the", "of"});
    CHECK(analyze("The cause of THE disease", c) == Tokens{"cause", "disease"});
}

TEST_CASE("synonym dictionary and expansion") {
    const auto dict = parse_synonyms("# classes\nMI, heart attack, zawał\nhypertension, HTN\nlonely\n");
    CHECK(dict.classes.size() == 2);
    CHECK(dict.related("mi") == std::set<std::string>{"heart", "attack", "zawał"});
    CHECK(dict.related("zawał") == std::set<std::string>{"mi", "heart", "attack"});
    CHECK(dict.related("htn") == std::set<std::string>{"hypertension"});
    CHECK(dict.related("unknown").empty());

    const auto q = expand_query({"mi", "htn", "heart"}, dict);
    CHECK(q.at("mi") == kLiteralWeight);
    CHECK(q.at("htn") == kLiteralWeight);
    CHECK(q.at("heart") == kLiteralWeight);  // literal beats synonym weight
    CHECK(q.at("attack") == kSynonymWeight);
    CHECK(q.at("zawał") == kSynonymWeight);
    CHECK(q.at("hypertension") == kSynonymWeight);
    CHECK(q.size() == 6);
    CHECK(expand_query({}, dict).empty());
}
