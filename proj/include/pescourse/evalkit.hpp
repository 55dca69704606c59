#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace pescourse {

struct QuestionReport;

/// Forced-choice rating on the 1..4 scale; there is no neutral midpoint.
class Score {
  public:
    constexpr Score() = default;
    /// Throws DomainError outside 1..4.
    explicit Score(int value);
    constexpr int value() const noexcept { return value_; }
    constexpr bool low() const noexcept { return value_ <= 2; }
    auto operator<=>(const Score&) const = default;

  private:
    int value_ = 1;
};

enum class RelevanceLabel { Complete, Partial, Irrelevant };

std::string_view to_string(RelevanceLabel label);
std::optional<RelevanceLabel> relevance_label_from_string(std::string_view s);

/// Declining to rate prioritisation because the sources did not conflict.
struct Abstain {
    bool operator==(const Abstain&) const = default;
};

using PrioritizationRating = std::variant<Score, Abstain>;

inline constexpr std::size_t kReportDocCount = 10;

/// One annotator's evaluation of one question report.
struct AnnotationRecord {
    std::string question_id;
    std::string annotator_id;
    std::optional<Score> sensitivity;
    std::optional<Score> specificity;
    std::array<RelevanceLabel, kReportDocCount> doc_labels{};
    Score credibility;
    Score accuracy;
    Score logic;
    Score completeness_depth;
    Score conciseness;
    Score communicativeness;
    PrioritizationRating prioritization = Abstain{};

    std::size_t complete_count() const;
    std::size_t partial_count() const;
    std::size_t total_relevant() const { return complete_count() + partial_count(); }

    bool operator==(const AnnotationRecord&) const = default;
};

nlohmann::json annotation_to_json(const AnnotationRecord& r);
/// Throws Error (with the offending field) on any schema violation.
AnnotationRecord annotation_from_json(const nlohmann::json& j);
std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl);

enum class AgreementClass { TIAA, PIAA, Discrepancy, NotApplicable };

std::string_view to_string(AgreementClass c);

AgreementClass classify_score_pair(Score a, Score b);
AgreementClass classify_relevance_pair(RelevanceLabel a, RelevanceLabel b);
AgreementClass classify_prioritization_pair(const PrioritizationRating& a, const PrioritizationRating& b);

/// Rated parameters in reporting order.
enum class Parameter {
    Sensitivity,
    Specificity,
    Credibility,
    Accuracy,
    Logic,
    CompletenessDepth,
    Conciseness,
    Communicativeness,
    Prioritization,
};

inline constexpr std::array<Parameter, 9> kAllParameters{
    Parameter::Sensitivity, Parameter::Specificity,       Parameter::Credibility,
    Parameter::Accuracy,    Parameter::Logic,             Parameter::CompletenessDepth,
    Parameter::Conciseness, Parameter::Communicativeness, Parameter::Prioritization};

/// Identifier used in files, e.g. "completeness_depth".
std::string_view parameter_key(Parameter p);
std::optional<Parameter> parameter_from_key(std::string_view key);

/// A single comparable field: a rated parameter or one document's label.
struct FieldKey {
    std::variant<Parameter, std::size_t> which;  // doc index is 0-based

    static FieldKey param(Parameter p) { return {p}; }
    static FieldKey doc(std::size_t index) { return {index}; }

    bool is_doc() const { return std::holds_alternative<std::size_t>(which); }
    /// "credibility", "prioritization", "doc_1" .. "doc_10".
    std::string name() const;
    static std::optional<FieldKey> from_name(std::string_view name);

    auto operator<=>(const FieldKey&) const = default;
};

using FieldValue = std::variant<std::monostate, Score, Abstain, RelevanceLabel>;

FieldValue field_value(const AnnotationRecord& r, const FieldKey& key);
std::string to_display(const FieldValue& v);

/// Every field of a record pair in a fixed order: parameters first, then
/// the ten documents.
std::vector<FieldKey> all_fields();

AgreementClass classify_field(const FieldKey& key, const FieldValue& a, const FieldValue& b);

/// A third annotator's choices for the fields two annotators disputed.
struct Resolution {
    std::string question_id;
    std::string resolver_id;
    std::map<FieldKey, FieldValue> choices;
};

nlohmann::json resolution_to_json(const Resolution& r);
Resolution resolution_from_json(const nlohmann::json& j);
std::vector<Resolution> parse_resolutions(std::string_view jsonl);

struct FieldOutcome {
    FieldKey key;
    AgreementClass agreement = AgreementClass::NotApplicable;
    FieldValue a;
    FieldValue b;
    std::optional<FieldValue> resolution;  // set only for resolved discrepancies
};

/// Final per-question values after agreement handling. Parameters are
/// missing when not rated (or when prioritisation was abstained).
struct FinalValues {
    std::string question_id;
    std::map<Parameter, double> params;
    double complete_docs = 0.0;
    double partial_docs = 0.0;
    double total_relevant = 0.0;
};

/// Outcome of comparing two annotations of one question, with any
/// third-annotator resolutions applied.
struct ResolvedRecord {
    std::string question_id;
    std::string annotator_a;
    std::string annotator_b;
    std::optional<std::string> resolver;
    std::vector<FieldOutcome> fields;

    const FieldOutcome& field(const FieldKey& key) const;
    std::vector<FieldKey> resolved_fields() const;
    std::vector<FieldKey> unresolved_discrepancies() const;

    /// TIAA keeps the shared value, PIAA averages both, a resolved
    /// discrepancy takes the resolver's choice. Unresolved discrepancies are
    /// averaged (a lone prioritisation score is kept).
    FinalValues final_values() const;
};

/// Classifies every field without any resolution.
ResolvedRecord compare_annotations(const AnnotationRecord& a, const AnnotationRecord& b);

/// Applies a third annotator's choices. Only Discrepancy fields may be
/// resolved; everything else is left exactly as the pair rated it.
ResolvedRecord resolve(const AnnotationRecord& a, const AnnotationRecord& b, const Resolution& resolution);
ResolvedRecord resolve(const QuestionReport& report, const AnnotationRecord& a, const AnnotationRecord& b,
                       const Resolution& resolution);

/// Values of a single annotator, for development-phase evaluation where each
/// report was rated once.
FinalValues final_values(const AnnotationRecord& r);

/// Row identifiers for the reporting tables.
enum class Metric {
    Sensitivity,
    Specificity,
    CompleteDocs,
    PartialDocs,
    RelevantDocs,
    Credibility,
    Accuracy,
    Logic,
    CompletenessDepth,
    Conciseness,
    Communicativeness,
    Prioritization,
};

std::string_view metric_label(Metric m);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::size_t n = 0;
};

/// Population mean and standard deviation; throws AggregateError when empty.
MeanStd mean_std(const std::vector<double>& values);

struct AggregateTable {
    std::map<Metric, MeanStd> rows;  // metrics with no observations are absent
};

/// Mean +- std per metric over per-question final values; abstentions and
/// unrated parameters are excluded from their metric. Throws AggregateError
/// on empty input.
AggregateTable aggregate(const std::vector<FinalValues>& records);

struct AgreementCounts {
    std::size_t tiaa = 0;
    std::size_t piaa = 0;
    std::size_t discrepancy = 0;

    std::size_t total() const { return tiaa + piaa + discrepancy; }
    double tiaa_fraction() const;
    double piaa_fraction() const;
    double discrepancy_fraction() const;
};

/// Per-metric agreement counts. Relevant docs counts ten classifications per
/// question pair; parameters rated by neither annotator are skipped.
struct IaaSummary {
    std::map<Metric, AgreementCounts> rows;
    std::size_t question_pairs = 0;
};

/// Pairs records by question_id; throws IaaError when the two sets cover
/// different questions or contain a question twice.
IaaSummary iaa_summary(const std::vector<AnnotationRecord>& first, const std::vector<AnnotationRecord>& second);
IaaSummary iaa_summary(const std::vector<ResolvedRecord>& pairs);

/// Whole percent, as displayed.
long display_percent(double fraction);

/// "6.11 ± 2.91"
std::string format_mean_std(const MeanStd& m);

/// Development-phase table: one column per experiment, rows in the order
/// Sensitivity .. Prioritization with the three document-count rows.
std::string render_evaluation_table(const std::vector<std::string>& column_names,
                                    const std::vector<AggregateTable>& columns);

/// Validation table: Parameter | Score | TIAA | PIAA.
std::string render_validation_table(const AggregateTable& scores, const IaaSummary& agreement);

}  // namespace pescourse
