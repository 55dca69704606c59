#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "pescourse/error.hpp"
#include "pescourse/ingest.hpp"

using namespace pescourse;

namespace {

const char* kExamJson = R"({
  "exam_id": "card-2021",
  "specialty": "Cardiology",
  "session": "2021 spring",
  "questions": [
    {"test_no": 1, "question": " What lowers blood pressure? ", "answers": {"A": "Salt", "B": "ACE inhibitor", "C": "Licorice", "D": "NSAID", "E": "Steroids"}, "correct": "B"},
    {"test_no": 2, "question": "Read the ECG.", "answers": {"A": "1", "B": "2", "C": "3", "D": "4", "E": "5"}, "correct": "A", "has_image": true, "extra": 7}
  ]
})";

ExamQuestion flagged(int no, bool image, bool invalid) {
    ExamQuestion q;
    q.exam_id = "x";
    q.question_no = no;
    q.stem = "s";
    for (char c : kChoiceLetters) q.choices.push_back({c, std::string(1, c)});
    q.has_image = image;
    q.invalidated = invalid;
    return q;
}

}  // namespace

TEST_CASE("exam JSON parses, trims text and ignores unknown fields") {
    const ExamFile exam = parse_exam_json(kExamJson);
    CHECK(exam.exam_id == "card-2021");
    REQUIRE(exam.questions.size() == 2);
    const auto& q = exam.questions[0];
    CHECK(q.stem == "What lowers blood pressure?");
    CHECK(q.correct == 'B');
    CHECK(q.choice_text('B') == "ACE inhibitor");
    CHECK_FALSE(q.has_image);
    CHECK(exam.questions[1].has_image);
    CHECK(q.id() == "card-2021-q1");
    CHECK(q.specialty == "Cardiology");
}

TEST_CASE("exam JSON errors") {
    SUBCASE("malformed JSON carries a byte offset") {
        try {
            parse_exam_json(R"({"exam_id": "a", )");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.offset() > 0);
            CHECK_FALSE(e.is_line());
        }
    }
    SUBCASE("correct letter outside A-E") {
        std::string bad = kExamJson;
        bad.replace(bad.find(R"("correct": "B")"), 14, R"("correct": "F")");
        try {
            parse_exam_json(bad);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.question_no() == 1);
        }
    }
    SUBCASE("four answers") {
        std::string bad = kExamJson;
        bad.replace(bad.find(R"(, "E": "Steroids")"), 17, "");
        CHECK_THROWS_AS(parse_exam_json(bad), SchemaError);
    }
    SUBCASE("missing question text") {
        std::string bad = kExamJson;
        bad.replace(bad.find(R"("question": "Read the ECG.", )"), 29, "");
        try {
            parse_exam_json(bad);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.question_no() == 2);
        }
    }
    SUBCASE("empty exam") {
        CHECK_THROWS_AS(parse_exam_json(R"({"exam_id":"a","specialty":"b","session":"c","questions":[]})"),
                        SchemaError);
    }
}

TEST_CASE("quiz markup parses the canonical grammar") {
    const char* html = R"(<div class="exam" data-exam-id="e1" data-specialty="Pediatrics" data-session="2020">
<div class="q" id="1"><p class="stem">Fever &amp; rash in a &lt;2 year old?</p>
<ol class="ans"><li>Measles</li><li>Rubella</li><li><b>Roseola</b></li><li>Scarlet fever</li><li>Kawasaki</li></ol></div>
<div class="q" id="2" data-invalidated="true"><p class="stem">Outdated item</p>
<ol class="ans"><li>a</li><li>b</li><li>c</li><li>d</li><li>e</li></ol></div>
<table class="key"><tr><th>No</th><th>Answer</th></tr><tr><td>1</td><td>C</td></tr><tr><td>2</td><td>e</td></tr></table>
</div>)";
    const ExamFile exam = parse_exam_quiz_html(html);
    REQUIRE(exam.questions.size() == 2);
    CHECK(exam.questions[0].stem == "Fever & rash in a <2 year old?");
    CHECK(exam.questions[0].choice_text('C') == "Roseola");
    CHECK(exam.questions[0].correct == 'C');
    CHECK(exam.questions[1].invalidated);
    CHECK(exam.questions[1].correct == 'E');
    CHECK(exam.questions[1].specialty == "Pediatrics");
}

TEST_CASE("quiz markup errors") {
    const std::string good_q = R"(<div class="q" id="1"><p class="stem">S</p><ol class="ans"><li>a</li><li>b</li><li>c</li><li>d</li><li>e</li></ol></div>)";
    const std::string key = R"(<table class="key"><tr><td>1</td><td>A</td></tr></table>)";
    const std::string head = R"(<div class="exam" data-exam-id="e">)";
    CHECK_NOTHROW(parse_exam_quiz_html(head + good_q + key + "</div>"));

    SUBCASE("unclosed answer list") {
        std::string bad = good_q;
        bad.erase(bad.find("</ol>"), 5);
        CHECK_THROWS_AS(parse_exam_quiz_html(head + bad + key), ParseError);
    }
    SUBCASE("key row without a question") {
        const std::string key2 = R"(<table class="key"><tr><td>1</td><td>A</td></tr><tr><td>2</td><td>B</td></tr></table>)";
        try {
            parse_exam_quiz_html(head + good_q + key2);
            FAIL("expected SchemaError");
        } catch (const SchemaError& e) {
            CHECK(e.question_no() == 2);
        }
    }
    SUBCASE("question missing from key") {
        const std::string key0 = R"(<table class="key"><tr><td>7</td><td>A</td></tr></table>)";
        CHECK_THROWS_AS(parse_exam_quiz_html(head + good_q + key0), SchemaError);
    }
    SUBCASE("no key table") { CHECK_THROWS_AS(parse_exam_quiz_html(head + good_q), ParseError); }
}

TEST_CASE("filter_questions examples") {
    ExamFile exam;
    exam.exam_id = "x";
    for (int i = 1; i <= 5; ++i) exam.questions.push_back(flagged(i, i == 3, false));
    auto r = filter_questions(exam);
    CHECK(r.kept.size() == 4);
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.dropped[0].first.question_no == 3);
    CHECK(r.dropped[0].second == DropReason::Image);

    exam.questions = {flagged(1, false, false), flagged(2, false, false)};
    r = filter_questions(exam);
    CHECK(r.kept == exam.questions);
    CHECK(r.dropped.empty());

    exam.questions = {flagged(1, true, true)};
    r = filter_questions(exam);
    REQUIRE(r.dropped.size() == 1);
    CHECK(r.dropped[0].second == DropReason::Image);
}

TEST_CASE("filter_questions partitions its input") {
    std::mt19937_64 rng(11);
    std::bernoulli_distribution coin(0.4);
    for (int trial = 0; trial < 200; ++trial) {
        ExamFile exam;
        exam.exam_id = "x";
        for (int i = 1; i <= 25; ++i) exam.questions.push_back(flagged(i, coin(rng), coin(rng)));
        const auto r = filter_questions(exam);
        CHECK(r.kept.size() + r.dropped.size() == exam.questions.size());
        std::vector<int> seen;
        for (const auto& q : r.kept) {
            CHECK_FALSE((q.has_image || q.invalidated));
            seen.push_back(q.question_no);
        }
        for (const auto& [q, why] : r.dropped) {
            CHECK(why == (q.has_image ? DropReason::Image : DropReason::Invalidated));
            seen.push_back(q.question_no);
        }
        std::sort(seen.begin(), seen.end());
        for (int i = 0; i < 25; ++i) CHECK(seen[i] == i + 1);
    }
}

TEST_CASE("both formats parse to the same exam") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const ExamFile exam = fixtures::synthetic_exam("rt-" + std::to_string(seed), 40, seed);
        const ExamFile from_json = parse_exam_json(render_exam_json(exam));
        const ExamFile from_html = parse_exam_quiz_html(render_exam_quiz_html(exam));
        CHECK(from_json == exam);
        CHECK(from_html == exam);
        CHECK(parse_exam_json(render_exam_json(exam)) == from_json);
    }
}

TEST_CASE("question JSON round trip") {
    const ExamFile exam = fixtures::synthetic_exam("q", 5, 3);
    for (const auto& q : exam.questions) CHECK(question_from_json(question_to_json(q)) == q);
}
