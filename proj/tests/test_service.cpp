#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "fixtures.hpp"
#include "pescourse/error.hpp"
#include "pescourse/service.hpp"

using namespace pescourse;
using json = nlohmann::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pescourse_service_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<QuestionReport> reports_for(const ExamFile& exam) {
    std::vector<QuestionReport> out;
    for (const auto& q : exam.questions) {
        QuestionReport r;
        r.question = q;
        r.query = {q.id(), "query", {}};
        for (int d = 0; d < 10; ++d) {
            r.docs.push_back({fixtures::make_doc(q.id() + "-d" + std::to_string(d), "Text " + std::to_string(d)), 1.0, 0.5});
        }
        r.comment.question_id = q.id();
        r.comment.body = "See [doc:" + q.id() + "-d3].";
        r.comment.citations = extract_citations(r.comment.body);
        out.push_back(r);
    }
    return out;
}

int error_kind(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const SessionError& e) {
        return static_cast<int>(e.kind());
    }
    return -1;
}

constexpr int kOutOfOrder = static_cast<int>(SessionError::Kind::OutOfOrder);
constexpr int kUnknownItem = static_cast<int>(SessionError::Kind::UnknownItem);
constexpr int kBadInput = static_cast<int>(SessionError::Kind::BadInput);

}  // namespace

TEST_CASE("assemble_course filters, pairs and checks citations") {
    ExamFile exam = fixtures::synthetic_exam("e1", 12, 4);
    for (auto& q : exam.questions) q.has_image = q.invalidated = false;
    exam.questions[2].has_image = true;
    exam.questions[5].invalidated = true;
    auto reports = reports_for(exam);
    reports.erase(reports.begin() + 2);  // the image question needs no report

    const Course c = assemble_course("c1", {exam}, reports);
    CHECK(c.item_ids.size() == 10);
    CHECK_FALSE(c.questions.contains(exam.questions[2].id()));
    CHECK_FALSE(c.questions.contains(exam.questions[5].id()));
    CHECK(c.doc_refs.size() == 10);
    CHECK(c.specialty == exam.specialty);
    CHECK_NOTHROW(validate_course(c));
    CHECK(course_from_json(course_to_json(c)) == c);

    auto missing = reports;
    missing.erase(missing.begin());
    try {
        assemble_course("c1", {exam}, missing);
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        CHECK(e.ids() == std::vector<std::string>{exam.questions[0].id()});
    }

    auto dangling = reports;
    dangling[0].comment.citations.push_back("nowhere");
    try {
        assemble_course("c1", {exam}, dangling);
        FAIL("expected BuildError");
    } catch (const BuildError& e) {
        CHECK(e.ids() == std::vector<std::string>{"nowhere"});
    }

    Course broken = c;
    broken.doc_refs.clear();
    CHECK_THROWS_AS(validate_course(broken), BuildError);
}

TEST_CASE("config parsing") {
    const auto cfg = parse_service_config(
        "# comment\n\nprovider_endpoint = http://gen:1\nrerank_mode=base\ndaily_new_cap=5\nr_target=0.85\n"
        "snapshot_every=0\n");
    CHECK(cfg.provider_endpoint == "http://gen:1");
    CHECK(cfg.rerank_mode == RerankVariant::Base);
    CHECK(cfg.daily_new_cap == 5);
    CHECK(cfg.threshold.r_target == 0.85);
    CHECK(cfg.snapshot_every == 0);
    CHECK(parse_service_config("") == ServiceConfig{});
    CHECK_THROWS_AS(parse_service_config("colour=blue\n"), Error);
    CHECK_THROWS_AS(parse_service_config("r_target=1.5\n"), Error);
    CHECK_THROWS_AS(parse_service_config("daily_new_cap=-1\n"), Error);
    CHECK_THROWS_AS(parse_service_config("just words\n"), Error);
}

TEST_CASE("episode tracker") {
    EpisodeTracker t;
    const Timestamp now = from_epoch_seconds(0);
    auto ev = [&](EventKind k, const std::string& item = "i1") {
        return SessionEvent{"u", item, k, std::nullopt, std::nullopt, now};
    };
    CHECK_THROWS_AS(t.apply(ev(EventKind::Answered)), SessionError);
    CHECK_THROWS_AS(t.apply(ev(EventKind::Graded)), SessionError);
    t.apply(ev(EventKind::Shown));
    CHECK_THROWS_AS(t.apply(ev(EventKind::Shown, "i2")), SessionError);
    CHECK_THROWS_AS(t.apply(ev(EventKind::Revealed)), SessionError);
    CHECK_THROWS_AS(t.apply(ev(EventKind::Answered, "i2")), SessionError);
    const EpisodeTracker before = t;
    CHECK_THROWS_AS(t.apply(ev(EventKind::Graded)), SessionError);
    CHECK(t == before);
    t.apply(ev(EventKind::Answered));
    t.apply(ev(EventKind::Revealed));
    CHECK(t.open_episode("u")->phase == EpisodePhase::Revealed);
    CHECK(EpisodeTracker::from_json(t.to_json()) == t);
    t.apply(ev(EventKind::Graded));
    CHECK(t.open_episode("u") == nullptr);

    SessionEvent answered = ev(EventKind::Answered);
    answered.letter = 'C';
    CHECK(session_event_from_json(session_event_to_json(answered)) == answered);
}

TEST_CASE("learning session flow") {
    const Course course = fixtures::small_course("c1", 4);
    ManualClock clock(from_epoch_seconds(1'700'006'400.0));
    ServiceConfig cfg;
    cfg.daily_new_cap = 2;
    LearningService svc({course}, {}, clock, cfg);

    CHECK(svc.list_courses().size() == 1);
    CHECK(svc.course("c1").has_value());
    CHECK_FALSE(svc.course("zz").has_value());

    auto q = svc.next("alice");
    REQUIRE(q.has_value());
    const std::string item = (*q)["item_id"];
    std::set<std::string> keys;
    for (auto& [k, v] : q->items()) keys.insert(k);
    CHECK(keys == std::set<std::string>{"item_id", "course_id", "stem", "choices", "phase"});
    CHECK(svc.next("alice") == q);  // an open item is served again

    CHECK(error_kind([&] { svc.grade("alice", item, "know"); }) == kOutOfOrder);
    CHECK(error_kind([&] { svc.answer("alice", "nope", "A"); }) == kUnknownItem);
    CHECK(error_kind([&] { svc.answer("alice", item, "F"); }) == kBadInput);
    const std::string other = course.item_ids[0] == item ? course.item_ids[1] : course.item_ids[0];
    CHECK(error_kind([&] { svc.answer("alice", other, "A"); }) == kOutOfOrder);

    const json reveal = svc.answer("alice", item, "A");
    const auto& question = course.questions.at(item);
    CHECK(reveal["correct"] == std::string(1, question.correct));
    CHECK(reveal["is_correct"] == (question.correct == 'A'));
    CHECK(reveal["comment"] == course.comments.at(item).body);
    CHECK(reveal["sources"].size() == 2);
    CHECK(error_kind([&] { svc.answer("alice", item, "B"); }) == kOutOfOrder);
    CHECK(error_kind([&] { svc.grade("alice", item, "perfect"); }) == kBadInput);

    const json g = svc.grade("alice", item, "know");
    CHECK(g["interval_days"] == doctest::Approx(1.0));
    CHECK(svc.review_book().find("alice", item) != nullptr);

    // Second new item, then the daily cap stops new ones.
    auto q2 = svc.next("alice");
    REQUIRE(q2.has_value());
    svc.answer("alice", (*q2)["item_id"], "B");
    svc.grade("alice", (*q2)["item_id"], "dontknow");
    CHECK_FALSE(svc.next("alice").has_value());

    // Another learner is independent.
    CHECK(svc.next("bob").has_value());

    // Next day: both reviewed items are due again.
    clock.advance(Days(1.01));
    auto q3 = svc.next("alice");
    REQUIRE(q3.has_value());
    CHECK(svc.review_book().find("alice", (*q3)["item_id"].get<std::string>()) != nullptr);
}

TEST_CASE("reports and annotations") {
    ExamFile exam = fixtures::synthetic_exam("e", 3, 1);
    for (auto& q : exam.questions) q.has_image = q.invalidated = false;
    const auto reports = reports_for(exam);
    ManualClock clock;
    LearningService svc({assemble_course("c", {exam}, reports)}, reports, clock);
    const std::string qid = exam.questions[0].id();
    CHECK(svc.report(qid).has_value());
    CHECK_FALSE(svc.report("nope").has_value());

    std::mt19937_64 rng(1);
    auto a = fixtures::random_annotation(rng, qid, "ann1");
    auto b = fixtures::perturb(rng, a, "ann2", 0.3);
    json body = annotation_to_json(a);
    body.erase("question_id");
    CHECK(svc.add_annotation(qid, body)["annotator_id"] == "ann1");
    svc.add_annotation(qid, annotation_to_json(b));
    CHECK(error_kind([&] { svc.add_annotation("nope", body); }) == kUnknownItem);
    json bad = annotation_to_json(a);
    bad["logic"] = 9;
    CHECK(error_kind([&] { svc.add_annotation(qid, bad); }) == kBadInput);
    CHECK(error_kind([&] { svc.add_annotation(exam.questions[1].id(), annotation_to_json(a)); }) == kBadInput);

    const json iaa = svc.iaa();
    CHECK(iaa["question_pairs"] == 1);
    CHECK(iaa["table"].get<std::string>().starts_with("| Parameter | Score | TIAA | PIAA |"));
}

TEST_CASE("restart recovers sessions and schedules") {
    const auto dir = scratch("recover");
    const Course course = fixtures::small_course("c1", 5);
    ManualClock clock(from_epoch_seconds(1'700'006'400.0));
    ServiceConfig cfg;
    cfg.snapshot_every = 3;
    ReviewBook book;
    EpisodeTracker episodes;
    {
        LearningService svc({course}, {}, clock, cfg, dir);
        for (int i = 0; i < 4; ++i) {
            auto q = svc.next("u");
            REQUIRE(q.has_value());
            svc.answer("u", (*q)["item_id"], "C");
            svc.grade("u", (*q)["item_id"], i % 2 ? "unsure" : "know");
            clock.advance(Seconds(30));
        }
        svc.next("u");  // leave an episode open
        book = svc.review_book();
        episodes = svc.episodes();
    }
    CHECK(std::filesystem::exists(dir / "snapshot.json"));
    LearningService again({course}, {}, clock, cfg, dir);
    CHECK(again.review_book() == book);
    CHECK(again.episodes() == episodes);
    CHECK(recover_review_book(dir / "events.jsonl", dir / "no-snapshot.json") == book);

    // Torn last write is ignored.
    {
        std::ofstream torn(dir / "events.jsonl", std::ios::app);
        torn << R"({"user_id":"u","item_)";
    }
    LearningService third({course}, {}, clock, cfg, dir);
    CHECK(third.review_book() == book);
    std::filesystem::remove_all(dir);
}

TEST_CASE("open() loads a data directory") {
    const auto dir = scratch("open");
    std::filesystem::create_directories(dir / "courses");
    std::filesystem::create_directories(dir / "reports");
    ExamFile exam = fixtures::synthetic_exam("e", 2, 5);
    for (auto& q : exam.questions) q.has_image = q.invalidated = false;
    const auto reports = reports_for(exam);
    write_file(dir / "courses" / "c.json", course_to_json(assemble_course("c", {exam}, reports)).dump());
    for (const auto& r : reports) write_file(dir / "reports" / (r.question_id() + ".json"), render_report(r));
    write_file(dir / "config", "daily_new_cap=1\n");
    ManualClock clock;
    auto svc = LearningService::open(dir, clock);
    CHECK(svc->config().daily_new_cap == 1);
    CHECK(svc->report(exam.questions[1].id()).has_value());
    CHECK(svc->list_courses()[0]["items"] == 2);
    write_file(dir / "config", "bogus=1\n");
    CHECK_THROWS_AS(LearningService::open(dir, clock), Error);
    std::filesystem::remove_all(dir);
}
