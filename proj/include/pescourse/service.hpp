#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pescourse/clock.hpp"
#include "pescourse/corpus.hpp"
#include "pescourse/evalkit.hpp"
#include "pescourse/genpipe.hpp"
#include "pescourse/ingest.hpp"
#include "pescourse/rerank.hpp"
#include "pescourse/scheduler.hpp"

namespace httplib {
class Server;
}

namespace pescourse {

/// A learnable course: kept exam questions with their validated comments and
/// the documents those comments cite.
struct Course {
    std::string course_id;
    std::string specialty;
    std::vector<std::string> session_years;
    std::vector<std::string> item_ids;
    std::map<std::string, ExamQuestion> questions;
    std::map<std::string, GeneratedComment> comments;
    std::map<std::string, CorpusDocument> doc_refs;

    bool operator==(const Course&) const = default;
};

/// Filters each exam, then pairs every kept question with its report.
/// Missing reports -> BuildError listing the question ids; a citation that
/// does not resolve among the report's documents -> BuildError(doc_id).
Course assemble_course(const std::string& course_id, const std::vector<ExamFile>& exams,
                       const std::vector<QuestionReport>& reports);

/// Throws BuildError when an item lacks a question or comment, or a
/// citation does not resolve in doc_refs.
void validate_course(const Course& course);

nlohmann::json course_to_json(const Course& course);
Course course_from_json(const nlohmann::json& j);

struct ServiceConfig {
    std::string provider_endpoint;
    std::string scorer_endpoint;
    RerankVariant rerank_mode = RerankVariant::Refined;
    std::size_t daily_new_cap = 20;
    RetentionThreshold threshold;
    std::size_t snapshot_every = 100;  // events between snapshots; 0 disables

    bool operator==(const ServiceConfig&) const = default;
};

/// key=value lines; '#' comments and blank lines are ignored. Unknown keys
/// and bad values throw Error naming the line.
ServiceConfig parse_service_config(std::string_view text);

enum class EventKind { Shown, Answered, Revealed, Graded };

std::string_view to_string(EventKind k);

struct SessionEvent {
    std::string user_id;
    std::string item_id;
    EventKind kind = EventKind::Shown;
    std::optional<char> letter;   // Answered
    std::optional<Grade> grade;   // Graded
    Timestamp at;

    bool operator==(const SessionEvent&) const = default;
};

nlohmann::json session_event_to_json(const SessionEvent& e);
SessionEvent session_event_from_json(const nlohmann::json& j);

enum class EpisodePhase { Shown, Answered, Revealed };

/// Enforces Shown -> Answered -> Revealed -> Graded per (user, item)
/// episode, with at most one open episode per user.
class EpisodeTracker {
  public:
    struct Open {
        std::string item_id;
        EpisodePhase phase = EpisodePhase::Shown;
        bool operator==(const Open&) const = default;
    };

    /// Throws SessionError(OutOfOrder) for an illegal transition; the
    /// tracker is unchanged in that case.
    void apply(const SessionEvent& e);
    void check(const SessionEvent& e) const;

    const Open* open_episode(std::string_view user_id) const;

    nlohmann::json to_json() const;
    static EpisodeTracker from_json(const nlohmann::json& j);

    bool operator==(const EpisodeTracker&) const = default;

  private:
    std::map<std::string, Open, std::less<>> open_;
};

/// Learning sessions, report browsing and annotation intake over a set of
/// courses. All state changes go through one lock and, when a data
/// directory is set, to an append-only event log.
class LearningService {
  public:
    LearningService(std::vector<Course> courses, std::vector<QuestionReport> reports, const Clock& clock,
                    ServiceConfig config = {}, std::optional<std::filesystem::path> data_dir = std::nullopt);

    /// Loads DIR/courses/*.json, DIR/reports/*.json, DIR/config (optional)
    /// and recovers DIR/snapshot.json + DIR/events.jsonl.
    static std::unique_ptr<LearningService> open(const std::filesystem::path& dir, const Clock& clock);

    nlohmann::json list_courses() const;
    std::optional<nlohmann::json> course(std::string_view course_id) const;

    /// Question payload (never the correct letter or the comment), or
    /// nullopt when nothing is due and the daily new-item cap is reached.
    std::optional<nlohmann::json> next(const std::string& user_id);
    /// Reveal payload; unconditional on whether the letter is right.
    nlohmann::json answer(const std::string& user_id, const std::string& item_id, std::string_view letter);
    nlohmann::json grade(const std::string& user_id, const std::string& item_id, std::string_view grade);

    std::optional<nlohmann::json> report(std::string_view question_id) const;
    /// Validates and stores an annotation; throws SessionError(BadInput) on
    /// schema violations and SessionError(UnknownItem) for unknown reports.
    nlohmann::json add_annotation(std::string_view question_id, const nlohmann::json& body);
    nlohmann::json iaa() const;

    ReviewBook review_book() const;
    EpisodeTracker episodes() const;
    const ServiceConfig& config() const { return config_; }

    /// Writes DIR/snapshot.json now (no-op without a data directory).
    void snapshot();

  private:
    const Course* course_of(std::string_view item_id) const;
    void commit(const std::vector<SessionEvent>& events);
    void maybe_snapshot_locked();
    void write_snapshot_locked();
    void recover();
    std::size_t introduced_today(const std::string& user_id, Timestamp now) const;
    nlohmann::json question_payload(const std::string& item_id, EpisodePhase phase) const;

    std::vector<Course> courses_;
    std::map<std::string, std::size_t, std::less<>> course_of_item_;
    std::map<std::string, QuestionReport, std::less<>> reports_;
    std::vector<AnnotationRecord> annotations_;
    const Clock& clock_;
    ServiceConfig config_;
    std::optional<std::filesystem::path> dir_;
    std::unique_ptr<EventLog> log_;
    std::unique_ptr<EventLog> annotation_log_;

    mutable std::mutex mutex_;
    ReviewBook book_;
    EpisodeTracker episodes_;
    std::size_t log_lines_ = 0;
    std::size_t since_snapshot_ = 0;
};

/// Mounts the /api/v1 routes on `server`.
void mount_routes(httplib::Server& server, LearningService& service);

}  // namespace pescourse
