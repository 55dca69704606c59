#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pescourse {

inline constexpr std::array<char, 5> kChoiceLetters{'A', 'B', 'C', 'D', 'E'};

struct Choice {
    char letter = 'A';
    std::string text;

    bool operator==(const Choice&) const = default;
};

struct ExamQuestion {
    std::string exam_id;
    int question_no = 0;
    std::string stem;
    std::vector<Choice> choices;  // exactly 5, A..E in order
    char correct = 'A';
    bool has_image = false;
    bool invalidated = false;
    std::string specialty;
    std::string session;

    /// Stable key used by reports, courses, annotations and the scheduler.
    std::string id() const;
    const std::string& choice_text(char letter) const;

    bool operator==(const ExamQuestion&) const = default;
};

struct ExamFile {
    std::string exam_id;
    std::string specialty;
    std::string session;
    std::vector<ExamQuestion> questions;

    bool operator==(const ExamFile&) const = default;
};

enum class DropReason { Image, Invalidated };

std::string_view to_string(DropReason reason);

struct FilterResult {
    std::vector<ExamQuestion> kept;
    std::vector<std::pair<ExamQuestion, DropReason>> dropped;
};

/// Parses the OCR exam JSON. Throws ParseError (byte offset) on malformed
/// JSON and SchemaError (question number) on schema violations.
ExamFile parse_exam_json(std::string_view bytes);

/// Parses the canonical quiz markup. Same contract as parse_exam_json.
ExamFile parse_exam_quiz_html(std::string_view bytes);

/// Drops image-bearing and invalidated questions. Image wins when both
/// flags are set.
FilterResult filter_questions(const ExamFile& exam);

std::string render_exam_json(const ExamFile& exam);
std::string render_exam_quiz_html(const ExamFile& exam);

nlohmann::json question_to_json(const ExamQuestion& q);
ExamQuestion question_from_json(const nlohmann::json& j);

/// Throws SchemaError when `exam` breaks an ExamFile/ExamQuestion invariant.
void validate_exam(const ExamFile& exam);

}  // namespace pescourse
