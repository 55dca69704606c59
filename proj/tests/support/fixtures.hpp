#pragma once

// Shared fixtures for the unit tests and the acceptance runner.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <random>
#include <string>
#include <vector>

#include "pescourse/clock.hpp"
#include "pescourse/corpus.hpp"
#include "pescourse/evalkit.hpp"
#include "pescourse/genpipe.hpp"
#include "pescourse/ingest.hpp"
#include "pescourse/rerank.hpp"
#include "pescourse/retrieval.hpp"
#include "pescourse/service.hpp"

namespace fixtures {

using namespace pescourse;

CorpusDocument make_doc(const std::string& id, const std::string& paragraph,
                        SourceKind kind = SourceKind::Textbook, const std::string& date = "2020-01-01");

// Random corpus of token documents ("w0".."wV"), Zipf-ish term frequencies.
struct TokenCorpus {
    std::vector<std::string> ids;
    std::vector<std::vector<std::string>> tokens;
    CorpusStore store;
};

TokenCorpus random_token_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab);
WeightedTerms random_query(std::mt19937_64& rng, std::size_t vocab);

// Brute force BM25 over raw token lists: full scan per (doc, term), no index.
std::vector<ScoredDoc> oracle_bm25(const TokenCorpus& corpus, const WeightedTerms& query, std::size_t k,
                                   double k1 = 1.2, double b = 0.75);

// Exam with a mix of flags and awkward text (diacritics, markup characters).
ExamFile synthetic_exam(const std::string& exam_id, int questions, std::uint64_t seed);

// Corpus where every topic word appears in `per_topic` documents.
struct TopicWorld {
    std::vector<std::string> topics;
    CorpusStore store;
    InvertedIndex index;
    ExamFile exam;  // one question per entry, stem mentions a topic
};

TopicWorld topic_world(int questions, int per_topic);

// Scorer that records every passage it is shown.
class RecordingScorer final : public RelevanceScorer {
  public:
    std::vector<double> score(std::string_view query, std::span<const Passage> passages) const override;

    std::vector<Passage> seen() const;
    std::size_t calls() const { return calls_; }

  private:
    mutable std::mutex mutex_;
    mutable std::vector<Passage> seen_;
    mutable std::atomic<std::size_t> calls_{0};
};

// Mock that answers rephrase prompts like MockProvider but cites a document
// that was never supplied. Styles: 0 extra unknown id, 1 only the unknown
// id, 2 a real corpus document outside the prompt, 3 case
// variant of a supplied id, 4 supplied id with a suffix.
class GhostCitingProvider final : public TextGenProvider {
  public:
    static constexpr int kStyles = 5;
    GhostCitingProvider(int style, std::vector<std::string> corpus_ids)
        : style_(style), corpus_ids_(std::move(corpus_ids)) {}
    std::string generate(const std::string& prompt, const GenParams& params) const override;
    std::string model_name() const override { return "ghost"; }

  private:
    int style_;
    std::vector<std::string> corpus_ids_;
    MockProvider inner_;
};

AnnotationRecord random_annotation(std::mt19937_64& rng, const std::string& question_id,
                                   const std::string& annotator);

// Copy of `base` with roughly `flip` of its fields re-rolled.
AnnotationRecord perturb(std::mt19937_64& rng, const AnnotationRecord& base, const std::string& annotator,
                         double flip);

FieldValue random_value_for(std::mt19937_64& rng, const FieldKey& key);

// Small course with `n` items whose comments cite real documents.
Course small_course(const std::string& course_id, int n);

}  // namespace fixtures
