#include "pescourse/service.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "pescourse/error.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

constexpr double kSecondsPerDay = 86400.0;

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::size_t parse_count(const std::string& value, std::size_t line_no) {
    std::size_t pos = 0;
    long long v = -1;
    try {
        v = std::stoll(value, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos != value.size() || v < 0) {
        throw Error("config line " + std::to_string(line_no) + ": expected a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

long long utc_day(Timestamp t) { return static_cast<long long>(std::floor(to_epoch_seconds(t) / kSecondsPerDay)); }

std::string_view phase_name(EpisodePhase p) {
    switch (p) {
        case EpisodePhase::Shown: return "shown";
        case EpisodePhase::Answered: return "answered";
        case EpisodePhase::Revealed: return "revealed";
    }
    return "shown";
}

std::optional<EpisodePhase> phase_from_name(std::string_view s) {
    for (auto p : {EpisodePhase::Shown, EpisodePhase::Answered, EpisodePhase::Revealed}) {
        if (phase_name(p) == s) return p;
    }
    return std::nullopt;
}

std::vector<std::filesystem::path> json_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

SessionError out_of_order(const std::string& what) { return SessionError(SessionError::Kind::OutOfOrder, what); }

}  // namespace

Course assemble_course(const std::string& course_id, const std::vector<ExamFile>& exams,
                       const std::vector<QuestionReport>& reports) {
    std::map<std::string, const QuestionReport*> by_id;
    for (const auto& r : reports) by_id[r.question_id()] = &r;

    Course course;
    course.course_id = course_id;
    std::vector<std::string> specialties;
    std::vector<std::string> missing;
    for (const auto& exam : exams) {
        if (std::find(specialties.begin(), specialties.end(), exam.specialty) == specialties.end()) {
            specialties.push_back(exam.specialty);
        }
        if (std::find(course.session_years.begin(), course.session_years.end(), exam.session) ==
            course.session_years.end()) {
            course.session_years.push_back(exam.session);
        }
        for (const auto& q : filter_questions(exam).kept) {
            const std::string id = q.id();
            auto it = by_id.find(id);
            if (it == by_id.end()) {
                missing.push_back(id);
                continue;
            }
            const QuestionReport& report = *it->second;
            for (const auto& cited : report.comment.citations) {
                auto doc = std::find_if(report.docs.begin(), report.docs.end(),
                                        [&](const ReportDoc& d) { return d.doc.doc_id == cited; });
                if (doc == report.docs.end()) {
                    throw BuildError("comment for " + id + " cites unknown document " + cited, {cited});
                }
                course.doc_refs[cited] = doc->doc;
            }
            course.item_ids.push_back(id);
            course.questions[id] = q;
            course.comments[id] = report.comment;
        }
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& id : missing) list += (list.empty() ? "" : ", ") + id;
        throw BuildError("questions without a report: " + list, missing);
    }
    for (std::size_t i = 0; i < specialties.size(); ++i) course.specialty += (i ? ", " : "") + specialties[i];
    return course;
}

void validate_course(const Course& course) {
    std::vector<std::string> bad;
    for (const auto& id : course.item_ids) {
        if (!course.questions.contains(id) || !course.comments.contains(id)) bad.push_back(id);
    }
    if (!bad.empty()) throw BuildError("course items without question or comment", bad);
    for (const auto& [id, comment] : course.comments) {
        for (const auto& cited : comment.citations) {
            if (!course.doc_refs.contains(cited)) {
                throw BuildError("comment for " + id + " cites unknown document " + cited, {cited});
            }
        }
    }
}

json course_to_json(const Course& c) {
    json items = json::array();
    for (const auto& id : c.item_ids) {
        items.push_back({{"question", question_to_json(c.questions.at(id))}, {"comment", comment_to_json(c.comments.at(id))}});
    }
    json docs = json::array();
    for (const auto& [id, doc] : c.doc_refs) docs.push_back(document_to_json(doc));
    return json{{"course_id", c.course_id},
                {"specialty", c.specialty},
                {"session_years", c.session_years},
                {"items", items},
                {"doc_refs", docs}};
}

Course course_from_json(const json& j) {
    Course c;
    try {
        c.course_id = j.at("course_id").get<std::string>();
        c.specialty = j.at("specialty").get<std::string>();
        c.session_years = j.at("session_years").get<std::vector<std::string>>();
        for (const auto& item : j.at("items")) {
            ExamQuestion q = question_from_json(item.at("question"));
            const std::string id = q.id();
            c.comments[id] = comment_from_json(item.at("comment"), id);
            c.questions[id] = std::move(q);
            c.item_ids.push_back(id);
        }
        for (const auto& d : j.at("doc_refs")) {
            CorpusDocument doc = document_from_json(d);
            c.doc_refs[doc.doc_id] = std::move(doc);
        }
    } catch (const json::exception& e) {
        throw Error(std::string("malformed course: ") + e.what());
    }
    validate_course(c);
    return c;
}

ServiceConfig parse_service_config(std::string_view text) {
    ServiceConfig cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key == "provider_endpoint") {
            cfg.provider_endpoint = value;
        } else if (key == "scorer_endpoint") {
            cfg.scorer_endpoint = value;
        } else if (key == "rerank_mode") {
            auto v = rerank_variant_from_string(value);
            if (!v) throw Error("config line " + std::to_string(line_no) + ": rerank_mode must be base or refined");
            cfg.rerank_mode = *v;
        } else if (key == "daily_new_cap") {
            cfg.daily_new_cap = parse_count(value, line_no);
        } else if (key == "snapshot_every") {
            cfg.snapshot_every = parse_count(value, line_no);
        } else if (key == "r_target") {
            try {
                std::size_t pos = 0;
                cfg.threshold.r_target = std::stod(value, &pos);
                if (pos != value.size()) throw Error("trailing characters");
                cfg.threshold.validate();
            } catch (const std::exception&) {
                throw Error("config line " + std::to_string(line_no) + ": r_target must be a number in (0, 1)");
            }
        } else {
            throw Error("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    return cfg;
}

std::string_view to_string(EventKind k) {
    switch (k) {
        case EventKind::Shown: return "shown";
        case EventKind::Answered: return "answered";
        case EventKind::Revealed: return "revealed";
        case EventKind::Graded: return "graded";
    }
    return "shown";
}

json session_event_to_json(const SessionEvent& e) {
    json j{{"kind", to_string(e.kind)}, {"user_id", e.user_id}, {"item_id", e.item_id}, {"t", to_epoch_seconds(e.at)}};
    if (e.letter) j["letter"] = std::string(1, *e.letter);
    if (e.grade) j["grade"] = to_string(*e.grade);
    return j;
}

SessionEvent session_event_from_json(const json& j) {
    SessionEvent e;
    const std::string kind = j.at("kind").get<std::string>();
    bool known = false;
    for (auto k : {EventKind::Shown, EventKind::Answered, EventKind::Revealed, EventKind::Graded}) {
        if (to_string(k) == kind) {
            e.kind = k;
            known = true;
        }
    }
    if (!known) throw Error("unknown event kind '" + kind + "'");
    e.user_id = j.at("user_id").get<std::string>();
    e.item_id = j.at("item_id").get<std::string>();
    e.at = from_epoch_seconds(j.at("t").get<double>());
    if (e.kind == EventKind::Answered) {
        const std::string letter = j.at("letter").get<std::string>();
        if (letter.size() != 1) throw Error("answered event needs a single letter");
        e.letter = letter[0];
    }
    if (e.kind == EventKind::Graded) {
        auto g = grade_from_string(j.at("grade").get<std::string>());
        if (!g) throw Error("graded event has an unknown grade");
        e.grade = *g;
    }
    return e;
}

void EpisodeTracker::check(const SessionEvent& e) const {
    auto it = open_.find(e.user_id);
    const Open* open = it == open_.end() ? nullptr : &it->second;
    const bool same_item = open && open->item_id == e.item_id;
    switch (e.kind) {
        case EventKind::Shown:
            if (open) throw out_of_order(e.user_id + " already has an open item " + open->item_id);
            return;
        case EventKind::Answered:
            if (!same_item) throw out_of_order("item " + e.item_id + " was not served to " + e.user_id);
            if (open->phase != EpisodePhase::Shown) throw out_of_order("item " + e.item_id + " was already answered");
            return;
        case EventKind::Revealed:
            if (!same_item || open->phase != EpisodePhase::Answered) {
                throw out_of_order("item " + e.item_id + " cannot be revealed before an answer");
            }
            return;
        case EventKind::Graded:
            if (!same_item || open->phase != EpisodePhase::Revealed) {
                throw out_of_order("item " + e.item_id + " cannot be graded before it is revealed");
            }
            return;
    }
}

void EpisodeTracker::apply(const SessionEvent& e) {
    check(e);
    switch (e.kind) {
        case EventKind::Shown: open_[e.user_id] = {e.item_id, EpisodePhase::Shown}; break;
        case EventKind::Answered: open_[e.user_id].phase = EpisodePhase::Answered; break;
        case EventKind::Revealed: open_[e.user_id].phase = EpisodePhase::Revealed; break;
        case EventKind::Graded: open_.erase(e.user_id); break;
    }
}

const EpisodeTracker::Open* EpisodeTracker::open_episode(std::string_view user_id) const {
    auto it = open_.find(user_id);
    return it == open_.end() ? nullptr : &it->second;
}

json EpisodeTracker::to_json() const {
    json out = json::array();
    for (const auto& [user, open] : open_) {
        out.push_back({{"user_id", user}, {"item_id", open.item_id}, {"phase", phase_name(open.phase)}});
    }
    return out;
}

EpisodeTracker EpisodeTracker::from_json(const json& j) {
    EpisodeTracker t;
    for (const auto& e : j) {
        auto phase = phase_from_name(e.at("phase").get<std::string>());
        if (!phase) throw Error("unknown episode phase");
        t.open_[e.at("user_id").get<std::string>()] = {e.at("item_id").get<std::string>(), *phase};
    }
    return t;
}

LearningService::LearningService(std::vector<Course> courses, std::vector<QuestionReport> reports, const Clock& clock,
                                 ServiceConfig config, std::optional<std::filesystem::path> data_dir)
    : courses_(std::move(courses)), clock_(clock), config_(std::move(config)), dir_(std::move(data_dir)) {
    config_.threshold.validate();
    std::set<std::string> course_ids;
    for (std::size_t i = 0; i < courses_.size(); ++i) {
        validate_course(courses_[i]);
        if (!course_ids.insert(courses_[i].course_id).second) {
            throw BuildError("duplicate course id " + courses_[i].course_id, {courses_[i].course_id});
        }
        for (const auto& item : courses_[i].item_ids) {
            if (!course_of_item_.emplace(item, i).second) throw BuildError("item in two courses: " + item, {item});
        }
    }
    for (auto& r : reports) {
        const std::string id = r.question_id();
        reports_.insert_or_assign(id, std::move(r));
    }
    if (dir_) {
        log_ = std::make_unique<EventLog>(*dir_ / "events.jsonl");
        annotation_log_ = std::make_unique<EventLog>(*dir_ / "annotations.jsonl");
        recover();
    }
}

std::unique_ptr<LearningService> LearningService::open(const std::filesystem::path& dir, const Clock& clock) {
    std::vector<Course> courses;
    for (const auto& p : json_files(dir / "courses")) {
        try {
            courses.push_back(course_from_json(json::parse(read_file(p))));
        } catch (const json::exception& e) {
            throw Error("course file " + p.string() + ": " + e.what());
        }
    }
    std::vector<QuestionReport> reports;
    for (const auto& p : json_files(dir / "reports")) {
        try {
            reports.push_back(report_from_json(json::parse(read_file(p))));
        } catch (const json::exception& e) {
            throw Error("report file " + p.string() + ": " + e.what());
        }
    }
    ServiceConfig config;
    if (std::filesystem::exists(dir / "config")) config = parse_service_config(read_file(dir / "config"));
    return std::make_unique<LearningService>(std::move(courses), std::move(reports), clock, config, dir);
}

void LearningService::recover() {
    std::lock_guard lock(mutex_);
    std::size_t offset = 0;
    if (auto snap = read_snapshot(*dir_ / "snapshot.json")) {
        book_ = ReviewBook::from_json(snap->at("book"));
        episodes_ = EpisodeTracker::from_json(snap->at("episodes"));
        offset = snap->at("log_offset").get<std::size_t>();
    }
    const auto events = log_->read_all();
    if (offset > events.size()) throw Error("snapshot is ahead of the event log");
    for (std::size_t i = offset; i < events.size(); ++i) {
        const SessionEvent e = session_event_from_json(events[i]);
        episodes_.apply(e);
        if (e.kind == EventKind::Graded) book_.apply({e.user_id, e.item_id, *e.grade, e.at}, config_.threshold);
    }
    log_lines_ = events.size();
    since_snapshot_ = events.size() - offset;
    for (const auto& j : annotation_log_->read_all()) annotations_.push_back(annotation_from_json(j));
}

const Course* LearningService::course_of(std::string_view item_id) const {
    auto it = course_of_item_.find(item_id);
    return it == course_of_item_.end() ? nullptr : &courses_[it->second];
}

void LearningService::commit(const std::vector<SessionEvent>& events) {
    if (!log_) return;
    std::vector<json> lines;
    for (const auto& e : events) lines.push_back(session_event_to_json(e));
    log_->append(lines);
    log_lines_ += lines.size();
    since_snapshot_ += lines.size();
}

// Called once in-memory state includes everything committed so far.
void LearningService::maybe_snapshot_locked() {
    if (config_.snapshot_every != 0 && since_snapshot_ >= config_.snapshot_every) write_snapshot_locked();
}

void LearningService::write_snapshot_locked() {
    if (!dir_) return;
    write_snapshot(*dir_ / "snapshot.json",
                   json{{"log_offset", log_lines_}, {"book", book_.to_json()}, {"episodes", episodes_.to_json()}});
    since_snapshot_ = 0;
}

void LearningService::snapshot() {
    std::lock_guard lock(mutex_);
    write_snapshot_locked();
}

json LearningService::list_courses() const {
    json out = json::array();
    for (const auto& c : courses_) {
        out.push_back({{"course_id", c.course_id},
                       {"specialty", c.specialty},
                       {"session_years", c.session_years},
                       {"items", c.item_ids.size()}});
    }
    return out;
}

std::optional<json> LearningService::course(std::string_view course_id) const {
    for (const auto& c : courses_) {
        if (c.course_id != course_id) continue;
        return json{{"course_id", c.course_id},
                    {"specialty", c.specialty},
                    {"session_years", c.session_years},
                    {"item_ids", c.item_ids},
                    {"documents", c.doc_refs.size()}};
    }
    return std::nullopt;
}

json LearningService::question_payload(const std::string& item_id, EpisodePhase phase) const {
    const Course& c = *course_of(item_id);
    const ExamQuestion& q = c.questions.at(item_id);
    json choices = json::array();
    for (const auto& ch : q.choices) choices.push_back({{"letter", std::string(1, ch.letter)}, {"text", ch.text}});
    return json{{"item_id", item_id}, {"course_id", c.course_id}, {"stem", q.stem},
                {"choices", choices},  {"phase", phase_name(phase)}};
}

std::size_t LearningService::introduced_today(const std::string& user_id, Timestamp now) const {
    const long long today = utc_day(now);
    std::size_t n = 0;
    for (auto it = book_.states().lower_bound({user_id, ""}); it != book_.states().end() && it->first.first == user_id;
         ++it) {
        if (!it->second.history.empty() && utc_day(it->second.history.front().at) == today) ++n;
    }
    return n;
}

std::optional<json> LearningService::next(const std::string& user_id) {
    if (user_id.empty()) throw SessionError(SessionError::Kind::BadInput, "user id is empty");
    std::lock_guard lock(mutex_);
    if (const auto* open = episodes_.open_episode(user_id)) return question_payload(open->item_id, open->phase);

    const Timestamp now = clock_.now();
    std::vector<ReviewState> states;
    for (const auto& c : courses_) {
        for (const auto& item : c.item_ids) states.push_back(book_.state_or_new(user_id, item));
    }
    const std::size_t used = introduced_today(user_id, now);
    const std::size_t cap = config_.daily_new_cap > used ? config_.daily_new_cap - used : 0;
    const auto queue = due_queue(states, now, cap);
    if (queue.empty()) return std::nullopt;

    SessionEvent shown{user_id, queue.front(), EventKind::Shown, std::nullopt, std::nullopt, now};
    episodes_.apply(shown);
    commit({shown});
    maybe_snapshot_locked();
    return question_payload(queue.front(), EpisodePhase::Shown);
}

json LearningService::answer(const std::string& user_id, const std::string& item_id, std::string_view letter) {
    const Course* c = course_of(item_id);
    if (!c) throw SessionError(SessionError::Kind::UnknownItem, "unknown item " + item_id);
    if (letter.size() != 1 ||
        std::find(kChoiceLetters.begin(), kChoiceLetters.end(), letter[0]) == kChoiceLetters.end()) {
        throw SessionError(SessionError::Kind::BadInput, "letter must be one of A-E");
    }
    std::lock_guard lock(mutex_);
    const Timestamp now = clock_.now();
    SessionEvent answered{user_id, item_id, EventKind::Answered, letter[0], std::nullopt, now};
    SessionEvent revealed{user_id, item_id, EventKind::Revealed, std::nullopt, std::nullopt, now};
    EpisodeTracker next = episodes_;
    next.apply(answered);
    next.apply(revealed);
    commit({answered, revealed});
    episodes_ = std::move(next);
    maybe_snapshot_locked();

    const ExamQuestion& q = c->questions.at(item_id);
    const GeneratedComment& comment = c->comments.at(item_id);
    json sources = json::array();
    for (const auto& id : comment.citations) {
        const CorpusDocument& d = c->doc_refs.at(id);
        sources.push_back({{"doc_id", d.doc_id},
                           {"title", d.title},
                           {"source_kind", to_string(d.source_kind)},
                           {"publication_date", d.publication_date},
                           {"locator", d.url_or_locator}});
    }
    return json{{"item_id", item_id},
                {"submitted", std::string(1, letter[0])},
                {"correct", std::string(1, q.correct)},
                {"correct_text", q.choice_text(q.correct)},
                {"is_correct", letter[0] == q.correct},
                {"comment", comment.body},
                {"sources", sources}};
}

json LearningService::grade(const std::string& user_id, const std::string& item_id, std::string_view grade_name) {
    if (!course_of(item_id)) throw SessionError(SessionError::Kind::UnknownItem, "unknown item " + item_id);
    auto g = grade_from_string(grade_name);
    if (!g) throw SessionError(SessionError::Kind::BadInput, "grade must be dontknow, unsure or know");
    std::lock_guard lock(mutex_);
    const Timestamp now = clock_.now();
    SessionEvent graded{user_id, item_id, EventKind::Graded, std::nullopt, *g, now};
    episodes_.check(graded);
    ReviewBook next_book = book_;
    const ReviewState state = next_book.apply({user_id, item_id, *g, now}, config_.threshold);
    commit({graded});
    episodes_.apply(graded);
    book_ = std::move(next_book);
    maybe_snapshot_locked();
    return json{{"item_id", item_id},
                {"grade", to_string(*g)},
                {"due", format_iso8601(state.due)},
                {"due_epoch", to_epoch_seconds(state.due)},
                {"interval_days", (to_epoch_seconds(state.due) - to_epoch_seconds(now)) / kSecondsPerDay}};
}

std::optional<json> LearningService::report(std::string_view question_id) const {
    auto it = reports_.find(question_id);
    if (it == reports_.end()) return std::nullopt;
    return report_to_json(it->second);
}

json LearningService::add_annotation(std::string_view question_id, const json& body) {
    if (!reports_.contains(question_id)) {
        throw SessionError(SessionError::Kind::UnknownItem, "no report for " + std::string(question_id));
    }
    json record_json = body;
    if (record_json.is_object() && !record_json.contains("question_id")) record_json["question_id"] = question_id;
    AnnotationRecord record;
    try {
        record = annotation_from_json(record_json);
    } catch (const std::exception& e) {
        throw SessionError(SessionError::Kind::BadInput, e.what());
    }
    if (record.question_id != question_id) {
        throw SessionError(SessionError::Kind::BadInput, "question_id does not match the report");
    }
    std::lock_guard lock(mutex_);
    if (annotation_log_) annotation_log_->append(annotation_to_json(record));
    auto same = std::find_if(annotations_.begin(), annotations_.end(), [&](const AnnotationRecord& r) {
        return r.question_id == record.question_id && r.annotator_id == record.annotator_id;
    });
    if (same != annotations_.end()) {
        *same = record;
    } else {
        annotations_.push_back(record);
    }
    return annotation_to_json(record);
}

json LearningService::iaa() const {
    std::lock_guard lock(mutex_);
    std::map<std::string, std::vector<const AnnotationRecord*>> by_question;
    for (const auto& r : annotations_) by_question[r.question_id].push_back(&r);
    std::vector<ResolvedRecord> pairs;
    std::vector<FinalValues> finals;
    for (const auto& [qid, records] : by_question) {
        if (records.size() < 2) continue;
        pairs.push_back(compare_annotations(*records[0], *records[1]));
        finals.push_back(pairs.back().final_values());
    }
    const IaaSummary summary = iaa_summary(pairs);
    const AggregateTable scores = finals.empty() ? AggregateTable{} : aggregate(finals);
    json rows = json::array();
    for (const auto& [metric, counts] : summary.rows) {
        json row{{"metric", metric_label(metric)},
                 {"tiaa", counts.tiaa},
                 {"piaa", counts.piaa},
                 {"discrepancy", counts.discrepancy},
                 {"tiaa_percent", display_percent(counts.tiaa_fraction())},
                 {"piaa_percent", display_percent(counts.piaa_fraction())}};
        if (auto it = scores.rows.find(metric); it != scores.rows.end()) {
            row["mean"] = it->second.mean;
            row["std"] = it->second.stddev;
        }
        rows.push_back(std::move(row));
    }
    return json{{"question_pairs", summary.question_pairs},
                {"annotations", annotations_.size()},
                {"rows", rows},
                {"table", render_validation_table(scores, summary)}};
}

ReviewBook LearningService::review_book() const {
    std::lock_guard lock(mutex_);
    return book_;
}

EpisodeTracker LearningService::episodes() const {
    std::lock_guard lock(mutex_);
    return episodes_;
}

}  // namespace pescourse
