#include "pescourse/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pescourse/corpus.hpp"
#include "pescourse/error.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

constexpr double kSecondsPerDay = 86400.0;
constexpr double kUnsureGrowth = 1.2;
constexpr double kUnsureEasePenalty = 0.15;
constexpr double kDontKnowEasePenalty = 0.3;
constexpr double kFirstInterval = 1.0;
constexpr double kSecondInterval = 6.0;

Timestamp plus_days(Timestamp t, double days) { return t + Seconds(days * kSecondsPerDay); }

json state_history_to_json(const std::vector<GradeEntry>& history) {
    json out = json::array();
    for (const auto& h : history) out.push_back({{"t", to_epoch_seconds(h.at)}, {"grade", to_string(h.grade)}});
    return out;
}

Grade grade_from_json(const json& j) {
    auto g = grade_from_string(j.get<std::string>());
    if (!g) throw Error("unknown grade '" + j.get<std::string>() + "'");
    return *g;
}

}  // namespace

std::string_view to_string(Grade g) {
    switch (g) {
        case Grade::DontKnow: return "dontknow";
        case Grade::Unsure: return "unsure";
        case Grade::Know: return "know";
    }
    return "know";
}

std::optional<Grade> grade_from_string(std::string_view s) {
    for (auto g : {Grade::DontKnow, Grade::Unsure, Grade::Know}) {
        if (to_string(g) == s) return g;
    }
    return std::nullopt;
}

void RetentionThreshold::validate() const {
    if (!(r_target > 0.0 && r_target < 1.0)) throw DomainError("r_target must lie in (0, 1)");
}

double RetentionThreshold::interval_factor() const {
    if (r_target == kCurveBase) return 1.0;
    return std::log(r_target) / std::log(kCurveBase);
}

ReviewState new_review_state(std::string user_id, std::string item_id) {
    ReviewState s;
    s.user_id = std::move(user_id);
    s.item_id = std::move(item_id);
    return s;
}

json review_state_to_json(const ReviewState& s) {
    return json{{"user_id", s.user_id},
                {"item_id", s.item_id},
                {"stability_days", s.stability_days},
                {"ease", s.ease},
                {"last_review", to_epoch_seconds(s.last_review)},
                {"due", to_epoch_seconds(s.due)},
                {"reps", s.reps},
                {"history", state_history_to_json(s.history)}};
}

ReviewState review_state_from_json(const json& j) {
    ReviewState s;
    s.user_id = j.at("user_id").get<std::string>();
    s.item_id = j.at("item_id").get<std::string>();
    s.stability_days = j.at("stability_days").get<double>();
    s.ease = j.at("ease").get<double>();
    s.last_review = from_epoch_seconds(j.at("last_review").get<double>());
    s.due = from_epoch_seconds(j.at("due").get<double>());
    s.reps = j.at("reps").get<int>();
    for (const auto& h : j.at("history")) {
        s.history.push_back({from_epoch_seconds(h.at("t").get<double>()), grade_from_json(h.at("grade"))});
    }
    if (!(s.stability_days > 0.0) || s.ease < kMinEase || s.reps < 0) throw Error("invalid review state");
    return s;
}

double retrievability(double elapsed_days, double stability_days) {
    if (!(elapsed_days >= 0.0)) throw DomainError("elapsed time must be non-negative");
    if (!(stability_days > 0.0)) throw DomainError("stability must be positive");
    return std::pow(kCurveBase, elapsed_days / stability_days);
}

Timestamp next_due(const ReviewState& state, const RetentionThreshold& threshold) {
    return plus_days(state.last_review, state.stability_days * threshold.interval_factor());
}

double next_stability(const ReviewState& s, Grade grade) {
    // Unsure sits between the reset and the Know interval so that a better
    // grade can never schedule sooner.
    const double know = s.reps == 0   ? kFirstInterval
                        : s.reps == 1 ? kSecondInterval
                                      : std::max(kFirstInterval, s.stability_days * s.ease);
    switch (grade) {
        case Grade::Know: return know;
        case Grade::Unsure:
            return std::clamp(std::max(s.stability_days, s.stability_days * kUnsureGrowth), kFirstInterval, know);
        case Grade::DontKnow: return kFirstInterval;
    }
    return kFirstInterval;
}

ReviewState apply_grade(const ReviewState& state, Grade grade, Timestamp now, const RetentionThreshold& threshold) {
    threshold.validate();
    if (!state.is_new() && now < state.last_review) {
        throw ClockError("review at " + format_iso8601(now) + " precedes last review at " +
                         format_iso8601(state.last_review));
    }
    ReviewState next = state;
    next.stability_days = next_stability(state, grade);
    switch (grade) {
        case Grade::Know: ++next.reps; break;
        case Grade::Unsure:
            next.ease = std::max(kMinEase, state.ease - kUnsureEasePenalty);
            ++next.reps;
            break;
        case Grade::DontKnow:
            next.ease = std::max(kMinEase, state.ease - kDontKnowEasePenalty);
            next.reps = 0;
            break;
    }
    next.last_review = now;
    next.due = next_due(next, threshold);
    next.history.push_back({now, grade});
    return next;
}

std::vector<std::string> due_queue(const std::vector<ReviewState>& states, Timestamp now, std::size_t new_cap) {
    std::vector<const ReviewState*> due;
    std::vector<std::string> out;
    for (const auto& s : states) {
        if (!s.is_new() && s.due <= now) due.push_back(&s);
    }
    std::sort(due.begin(), due.end(), [](const ReviewState* a, const ReviewState* b) {
        if (a->due != b->due) return a->due < b->due;
        return a->item_id < b->item_id;
    });
    for (const auto* s : due) out.push_back(s->item_id);
    for (const auto& s : states) {
        if (new_cap == 0) break;
        if (s.is_new()) {
            out.push_back(s.item_id);
            --new_cap;
        }
    }
    return out;
}

SimTrace simulate(const std::vector<Grade>& policy, int days, const RetentionThreshold& threshold) {
    if (days < 1) throw DomainError("simulation needs at least one day");
    if (policy.empty()) throw DomainError("simulation policy is empty");
    threshold.validate();
    SimTrace trace;
    trace.days = days;
    ReviewState state = new_review_state("sim", "item");
    std::size_t turn = 0;
    for (int day = 1; day <= days; ++day) {
        const Timestamp today = from_epoch_seconds(day * kSecondsPerDay);
        if (!state.is_new() && state.due > today) continue;
        const Grade g = policy[turn++ % policy.size()];
        state = apply_grade(state, g, today, threshold);
        trace.reviews.push_back({day, g, state.stability_days * threshold.interval_factor(), state.ease, state.reps});
    }
    return trace;
}

std::vector<Grade> policy_from_name(std::string_view name) {
    if (name == "know") return {Grade::Know};
    if (name == "unsure") return {Grade::Unsure};
    if (name == "dontknow") return {Grade::DontKnow};
    if (name == "mixed") return {Grade::Know, Grade::Unsure, Grade::Know, Grade::DontKnow};
    throw DomainError("unknown policy '" + std::string(name) + "'");
}

std::string render_trace(const SimTrace& trace) {
    std::ostringstream out;
    out << "day\tgrade\tinterval_days\tease\treps\n";
    char buf[128];
    for (const auto& r : trace.reviews) {
        std::snprintf(buf, sizeof buf, "%d\t%s\t%.4g\t%.2f\t%d\n", r.day, std::string(to_string(r.grade)).c_str(),
                      r.interval_days, r.ease, r.reps);
        out << buf;
    }
    out << "reviews in " << trace.days << " days: " << trace.reviews.size() << "\n";
    return out.str();
}

json grade_event_to_json(const GradeEvent& e) {
    return json{{"kind", "graded"},
                {"user_id", e.user_id},
                {"item_id", e.item_id},
                {"grade", to_string(e.grade)},
                {"t", to_epoch_seconds(e.at)}};
}

GradeEvent grade_event_from_json(const json& j) {
    if (j.value("kind", "") != "graded") throw Error("not a grade event");
    return {j.at("user_id").get<std::string>(), j.at("item_id").get<std::string>(), grade_from_json(j.at("grade")),
            from_epoch_seconds(j.at("t").get<double>())};
}

const ReviewState* ReviewBook::find(std::string_view user_id, std::string_view item_id) const {
    auto it = states_.find(Key(user_id, item_id));
    return it == states_.end() ? nullptr : &it->second;
}

ReviewState ReviewBook::state_or_new(const std::string& user_id, const std::string& item_id) const {
    if (const auto* s = find(user_id, item_id)) return *s;
    return new_review_state(user_id, item_id);
}

const ReviewState& ReviewBook::apply(const GradeEvent& e, const RetentionThreshold& threshold) {
    ReviewState next = apply_grade(state_or_new(e.user_id, e.item_id), e.grade, e.at, threshold);
    auto& slot = states_[Key(e.user_id, e.item_id)];
    slot = std::move(next);
    ++events_applied_;
    return slot;
}

json ReviewBook::to_json() const {
    json states = json::array();
    for (const auto& [key, s] : states_) states.push_back(review_state_to_json(s));
    return json{{"events_applied", events_applied_}, {"states", states}};
}

ReviewBook ReviewBook::from_json(const json& j) {
    ReviewBook book;
    book.events_applied_ = j.at("events_applied").get<std::size_t>();
    for (const auto& sj : j.at("states")) {
        auto s = review_state_from_json(sj);
        book.states_[Key(s.user_id, s.item_id)] = std::move(s);
    }
    return book;
}

ReviewBook replay(const std::vector<GradeEvent>& events, const RetentionThreshold& threshold, ReviewBook base) {
    for (const auto& e : events) base.apply(e, threshold);
    return base;
}

EventLog::EventLog(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    if (!std::filesystem::exists(path_)) {
        std::ofstream create(path_, std::ios::binary);
        return;
    }
    // Drop a torn tail so the next append starts on a fresh line.
    const std::string text = read_file(path_);
    if (!text.empty() && text.back() != '\n') {
        const auto keep = text.rfind('\n');
        std::filesystem::resize_file(path_, keep == std::string::npos ? 0 : keep + 1);
    }
}

void EventLog::append(const json& event) { append(std::vector<json>{event}); }

void EventLog::append(const std::vector<json>& events) {
    std::string chunk;
    for (const auto& e : events) chunk += e.dump() + "\n";
    std::lock_guard lock(mutex_);
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    out << chunk;
    out.flush();
    if (!out) throw Error("cannot append to event log " + path_.string());
}

std::vector<json> EventLog::read_all() const {
    std::lock_guard lock(mutex_);
    const std::string text = read_file(path_);
    std::vector<json> out;
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
        ++line_no;
        auto nl = text.find('\n', pos);
        const bool torn = nl == std::string::npos;
        const std::string line = text.substr(pos, torn ? std::string::npos : nl - pos);
        pos = torn ? text.size() : nl + 1;
        if (line.empty()) continue;
        try {
            out.push_back(json::parse(line));
        } catch (const json::parse_error&) {
            if (torn) break;
            throw ParseError("event log " + path_.string() + " line " + std::to_string(line_no) + " is corrupt",
                             line_no, true);
        }
    }
    return out;
}

void write_snapshot(const std::filesystem::path& path, const json& snapshot) {
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp, snapshot.dump());
    std::filesystem::rename(tmp, path);
}

std::optional<json> read_snapshot(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError("snapshot " + path.string() + " is corrupt", e.byte);
    }
}

ReviewBook recover_review_book(const std::filesystem::path& log_path, const std::filesystem::path& snapshot_path,
                               const RetentionThreshold& threshold) {
    ReviewBook book;
    std::size_t offset = 0;
    if (auto snap = read_snapshot(snapshot_path)) {
        book = ReviewBook::from_json(snap->at("book"));
        offset = snap->at("log_offset").get<std::size_t>();
    }
    const auto events = EventLog(log_path).read_all();
    if (offset > events.size()) throw Error("snapshot is ahead of the event log");
    for (std::size_t i = offset; i < events.size(); ++i) {
        if (events[i].value("kind", "") == "graded") book.apply(grade_event_from_json(events[i]), threshold);
    }
    return book;
}

}  // namespace pescourse
