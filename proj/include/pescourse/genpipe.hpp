#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "pescourse/clock.hpp"
#include "pescourse/corpus.hpp"
#include "pescourse/ingest.hpp"
#include "pescourse/rerank.hpp"
#include "pescourse/retrieval.hpp"

namespace pescourse {

/// Number of documents every comment is grounded in.
inline constexpr std::size_t kPromptDocCount = 10;

struct GenParams {
    double temperature = 0.0;
    int max_output_tokens = 1024;
    std::optional<std::int64_t> seed;

    void validate() const;
    bool operator==(const GenParams&) const = default;
};

class TextGenProvider {
  public:
    virtual ~TextGenProvider() = default;
    /// Must be safe to call concurrently. Throws on failure.
    virtual std::string generate(const std::string& prompt, const GenParams& params) const = 0;
    virtual std::string model_name() const = 0;
};

/// Prompt templates loaded from versioned data files
/// (`rephrase.<version>.txt`, `comment.<version>.txt`). Placeholders:
/// {{stem}}, {{choices}}, {{correct}}, {{correct_text}}, {{documents}}.
struct PromptTemplates {
    std::string version;
    std::string rephrase;
    std::string comment;

    /// Throws Error when a template lacks a placeholder or orders them other
    /// than stem, choices, correct(, documents).
    void validate() const;
};

PromptTemplates load_prompt_templates(const std::filesystem::path& dir, const std::string& version = "v1");

/// Templates shipped in the repository's data/prompts directory.
const PromptTemplates& default_prompt_templates();

/// Deterministic stand-in for a hosted model. For rephrase prompts it returns
/// the stem's non-stopword tokens joined by spaces; for comment prompts it
/// justifies the correct letter citing the first three supplied documents.
class MockProvider final : public TextGenProvider {
  public:
    explicit MockProvider(AnalyzerConfig analyzer = {}) : analyzer_(std::move(analyzer)) {}
    std::string generate(const std::string& prompt, const GenParams& params) const override;
    std::string model_name() const override { return "mock"; }

  private:
    AnalyzerConfig analyzer_;
};

struct HttpProviderConfig {
    std::string endpoint;  // POST {endpoint}/generate
    std::string model = "remote";
    std::chrono::milliseconds timeout{120000};
    int retries = 3;
    std::chrono::milliseconds backoff{500};
};

using GenerateTransport = std::function<std::string(const std::string& request_body)>;

/// Adapter for a text-generation service speaking
/// {prompt, temperature, max_tokens, seed} -> {text}.
class HttpProvider final : public TextGenProvider {
  public:
    explicit HttpProvider(HttpProviderConfig config);
    HttpProvider(HttpProviderConfig config, GenerateTransport transport);
    std::string generate(const std::string& prompt, const GenParams& params) const override;
    std::string model_name() const override { return config_.model; }

  private:
    HttpProviderConfig config_;
    GenerateTransport transport_;
};

struct SearchQuery {
    std::string question_id;
    std::string query_text;
    std::vector<std::string> difficulties;

    bool operator==(const SearchQuery&) const = default;
};

struct ProviderMeta {
    std::string model;
    GenParams params;
    std::string timestamp;
    std::string template_version;

    bool operator==(const ProviderMeta&) const = default;
};

struct GeneratedComment {
    std::string question_id;
    std::string body;
    std::vector<std::string> citations;  // first-appearance order
    ProviderMeta provider_meta;

    bool operator==(const GeneratedComment&) const = default;
};

std::string render_rephrase_prompt(const ExamQuestion& question, const PromptTemplates& templates);

/// Throws GenError on provider failure or an empty/overlong query.
SearchQuery rephrase(const ExamQuestion& question, const TextGenProvider& provider, const GenParams& params = {},
                     const PromptTemplates& templates = default_prompt_templates());

/// Grounded prompt over exactly ten documents; throws
/// PipelineError(DocCount) otherwise.
std::string build_prompt(const ExamQuestion& question, const std::vector<CorpusDocument>& docs,
                         const PromptTemplates& templates = default_prompt_templates());

/// `[doc:ID]` markers in first-appearance order, without duplicates.
std::vector<std::string> extract_citations(std::string_view body);

/// Generates and validates a comment. A marker naming a document outside
/// `docs` raises CitationError; the comment is never repaired.
GeneratedComment generate_comment(const ExamQuestion& question, const std::vector<CorpusDocument>& docs,
                                  const TextGenProvider& provider, const GenParams& params, const Clock& clock,
                                  const PromptTemplates& templates = default_prompt_templates());

struct ReportDoc {
    CorpusDocument doc;
    double first_stage_score = 0.0;
    double rerank_score = 0.0;

    bool operator==(const ReportDoc&) const = default;
};

/// Everything an annotator sees for one question.
struct QuestionReport {
    ExamQuestion question;
    SearchQuery query;
    RerankVariant mode = RerankVariant::Refined;
    std::vector<ReportDoc> docs;
    GeneratedComment comment;

    const std::string& question_id() const { return comment.question_id; }
    bool operator==(const QuestionReport&) const = default;
};

nlohmann::json comment_to_json(const GeneratedComment& comment);
GeneratedComment comment_from_json(const nlohmann::json& j, const std::string& question_id);

nlohmann::json report_to_json(const QuestionReport& report);
QuestionReport report_from_json(const nlohmann::json& j);
std::string render_report(const QuestionReport& report);

struct PipelineOptions {
    GenParams params;
    Bm25Params bm25;
    RerankOptions rerank;
    const PromptTemplates* templates = nullptr;  // null: default_prompt_templates()
};

struct PipelineContext {
    const CorpusStore& corpus;
    const InvertedIndex& index;
    RerankMode mode;
    const RelevanceScorer& scorer;
    const TextGenProvider& provider;
    const Clock& clock;
    PipelineOptions options;
};

/// rephrase -> search(k = cap) -> rerank -> top 10 -> generate_comment.
/// Stage failures surface as PipelineError(Stage) with the original error
/// nested; too few documents is PipelineError(DocCount).
QuestionReport run_pipeline(const ExamQuestion& question, const PipelineContext& ctx);

struct BatchOutcome {
    std::string question_id;
    std::optional<QuestionReport> report;
    std::string error;
};

/// Runs the pipeline for each question on a bounded pool of `width` workers.
/// Results are returned in input order.
std::vector<BatchOutcome> run_batch(const std::vector<ExamQuestion>& questions, const PipelineContext& ctx,
                                    std::size_t width);

}  // namespace pescourse
