#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pescourse/corpus.hpp"
#include "pescourse/retrieval.hpp"
#include "pescourse/text_analysis.hpp"

namespace pescourse {

enum class RerankVariant { Base, Refined };
enum class RerankContext { Snippet, FullParagraph };

std::string_view to_string(RerankVariant v);
std::string_view to_string(RerankContext c);
std::optional<RerankVariant> rerank_variant_from_string(std::string_view s);

/// Production ("base") reranking looks at 100 snippets; the refined
/// configuration looks at up to 200 full paragraphs.
struct RerankMode {
    RerankVariant variant = RerankVariant::Refined;
    std::size_t candidate_cap = 200;
    RerankContext context = RerankContext::FullParagraph;

    static RerankMode base();
    static RerankMode refined();
    static RerankMode for_variant(RerankVariant v);

    bool operator==(const RerankMode&) const = default;
};

struct Passage {
    std::string id;
    std::string text;
};

/// Scores (query, passage) pairs jointly. Implementations must be safe to
/// call concurrently and must return one score in [0, 1] per passage.
class RelevanceScorer {
  public:
    virtual ~RelevanceScorer() = default;
    virtual std::vector<double> score(std::string_view query, std::span<const Passage> passages) const = 0;
};

/// Cosine similarity of term-frequency vectors over analysed tokens.
class LexicalOverlapScorer final : public RelevanceScorer {
  public:
    explicit LexicalOverlapScorer(AnalyzerConfig config = {}) : config_(std::move(config)) {}

    double score_pair(std::string_view query, std::string_view passage) const;
    std::vector<double> score(std::string_view query, std::span<const Passage> passages) const override;

  private:
    AnalyzerConfig config_;
};

double lexical_overlap_score(std::string_view query, std::string_view passage, const AnalyzerConfig& config = {});

struct RemoteScorerConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8090 ; requests go to POST {endpoint}/score
    std::chrono::milliseconds timeout{10000};
    int retries = 3;
    std::chrono::milliseconds backoff{200};  // doubled after every failed attempt
};

/// Sends one request body and returns the response body; throws on any
/// transport failure. Replaceable for tests.
using ScoreTransport = std::function<std::string(const std::string& request_body)>;

ScoreTransport make_http_score_transport(const RemoteScorerConfig& config);

/// Adapter for an external cross-encoder service. Responses are cached by
/// (query, passage id) for the lifetime of the adapter, i.e. one pipeline run.
class RemoteScorer final : public RelevanceScorer {
  public:
    explicit RemoteScorer(RemoteScorerConfig config);
    RemoteScorer(RemoteScorerConfig config, ScoreTransport transport);

    std::vector<double> score(std::string_view query, std::span<const Passage> passages) const override;

    std::size_t cache_size() const;
    void clear_cache();

  private:
    std::vector<double> fetch(std::string_view query, std::span<const Passage> passages) const;

    RemoteScorerConfig config_;
    ScoreTransport transport_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<std::string, std::string>, double> cache_;
};

struct RerankedDoc {
    std::string doc_id;
    double first_stage_score = 0.0;
    std::size_t first_stage_rank = 0;  // 0-based
    double rerank_score = 0.0;

    bool operator==(const RerankedDoc&) const = default;
};

struct RerankOptions {
    std::size_t batch_size = 16;
    std::size_t parallelism = 1;
};

/// Scores the first min(cap, n) candidates with the mode's context text and
/// returns them by rerank score descending (ties keep first-stage order).
/// Candidates past the cap are dropped. Any scorer failure fails the whole
/// call with RerankError.
std::vector<RerankedDoc> rerank(const std::vector<ScoredDoc>& candidates, const RerankMode& mode,
                                const RelevanceScorer& scorer, std::string_view query_text,
                                const CorpusStore& store, const RerankOptions& options = {});

}  // namespace pescourse
