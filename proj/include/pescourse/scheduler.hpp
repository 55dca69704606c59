#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pescourse/clock.hpp"

namespace pescourse {

enum class Grade { DontKnow, Unsure, Know };

std::string_view to_string(Grade g);
std::optional<Grade> grade_from_string(std::string_view s);

inline constexpr double kDefaultEase = 2.5;
inline constexpr double kMinEase = 1.3;
inline constexpr double kCurveBase = 0.9;

struct RetentionThreshold {
    double r_target = 0.9;

    /// Throws DomainError unless 0 < r_target < 1.
    void validate() const;
    /// Multiplier applied to stability to get the review interval.
    double interval_factor() const;

    bool operator==(const RetentionThreshold&) const = default;
};

struct GradeEntry {
    Timestamp at;
    Grade grade = Grade::Know;
    bool operator==(const GradeEntry&) const = default;
};

/// Memory state of one learner for one item. An item that was never graded
/// has an empty history and is "new".
struct ReviewState {
    std::string user_id;
    std::string item_id;
    double stability_days = 1.0;
    double ease = kDefaultEase;
    Timestamp last_review{};
    Timestamp due{};
    int reps = 0;
    std::vector<GradeEntry> history;

    bool is_new() const { return history.empty(); }
    bool operator==(const ReviewState&) const = default;
};

ReviewState new_review_state(std::string user_id, std::string item_id);

nlohmann::json review_state_to_json(const ReviewState& s);
ReviewState review_state_from_json(const nlohmann::json& j);

/// R = 0.9^(elapsed/stability). Throws DomainError for negative elapsed time
/// or non-positive stability.
double retrievability(double elapsed_days, double stability_days);

/// Moment the modelled recall falls to the threshold.
Timestamp next_due(const ReviewState& state, const RetentionThreshold& threshold = {});

/// Interval (days) the scheduler would assign for `grade`, without mutating.
double next_stability(const ReviewState& state, Grade grade);

/// Throws ClockError when `now` precedes the last review.
ReviewState apply_grade(const ReviewState& state, Grade grade, Timestamp now,
                        const RetentionThreshold& threshold = {});

/// Due items (due <= now) by due time then item_id, followed by at most
/// `new_cap` new items in input order.
std::vector<std::string> due_queue(const std::vector<ReviewState>& states, Timestamp now, std::size_t new_cap);

struct SimReview {
    int day = 0;
    Grade grade = Grade::Know;
    double interval_days = 0.0;
    double ease = kDefaultEase;
    int reps = 0;
};

struct SimTrace {
    int days = 0;
    std::vector<SimReview> reviews;
};

/// One virtual learner with one item, introduced on day 1 and reviewed on
/// every day it is due. Grades cycle through `policy`.
SimTrace simulate(const std::vector<Grade>& policy, int days, const RetentionThreshold& threshold = {});

/// "know", "unsure", "dontknow", or "mixed" (Know, Unsure, Know, DontKnow).
std::vector<Grade> policy_from_name(std::string_view name);

std::string render_trace(const SimTrace& trace);

struct GradeEvent {
    std::string user_id;
    std::string item_id;
    Grade grade = Grade::Know;
    Timestamp at;
    bool operator==(const GradeEvent&) const = default;
};

nlohmann::json grade_event_to_json(const GradeEvent& e);
GradeEvent grade_event_from_json(const nlohmann::json& j);

/// Every learner's review states, keyed by (user, item).
class ReviewBook {
  public:
    using Key = std::pair<std::string, std::string>;

    const ReviewState* find(std::string_view user_id, std::string_view item_id) const;
    ReviewState state_or_new(const std::string& user_id, const std::string& item_id) const;
    const ReviewState& apply(const GradeEvent& e, const RetentionThreshold& threshold = {});

    const std::map<Key, ReviewState>& states() const { return states_; }
    std::size_t events_applied() const { return events_applied_; }

    nlohmann::json to_json() const;
    static ReviewBook from_json(const nlohmann::json& j);

    bool operator==(const ReviewBook&) const = default;

  private:
    std::map<Key, ReviewState> states_;
    std::size_t events_applied_ = 0;
};

/// Applies events in order on top of `base`.
ReviewBook replay(const std::vector<GradeEvent>& events, const RetentionThreshold& threshold = {},
                  ReviewBook base = {});

/// Append-only JSON-lines file. Each append is flushed before returning; a
/// torn final line (crash mid-write) is ignored on read.
class EventLog {
  public:
    explicit EventLog(std::filesystem::path path);

    void append(const nlohmann::json& event);
    void append(const std::vector<nlohmann::json>& events);
    std::vector<nlohmann::json> read_all() const;
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    mutable std::mutex mutex_;
};

/// Snapshot = ReviewBook JSON including the number of events it covers.
void write_snapshot(const std::filesystem::path& path, const nlohmann::json& snapshot);
std::optional<nlohmann::json> read_snapshot(const std::filesystem::path& path);

/// Snapshot (if any) plus the log events it does not cover.
ReviewBook recover_review_book(const std::filesystem::path& log_path, const std::filesystem::path& snapshot_path,
                               const RetentionThreshold& threshold = {});

}  // namespace pescourse
