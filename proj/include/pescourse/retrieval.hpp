#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "pescourse/corpus.hpp"
#include "pescourse/text_analysis.hpp"

namespace pescourse {

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    /// Throws DomainError unless k1 >= 0 and 0 <= b <= 1.
    void validate() const;
};

/// Postings for one term, structure-of-arrays so the weighting kernel can
/// stream them. `docs` is ascending; `lengths[i]` mirrors the length of
/// `docs[i]`.
struct PostingList {
    std::vector<std::uint32_t> docs;
    std::vector<std::uint32_t> tf;
    std::vector<std::uint32_t> lengths;
};

struct ScoredDoc {
    std::string doc_id;
    double score = 0.0;

    bool operator==(const ScoredDoc&) const = default;
};

/// Inverted index over analysed paragraph text. Internal document numbers
/// follow ascending doc_id, so ordering by number is ordering by doc_id.
class InvertedIndex {
  public:
    InvertedIndex() = default;

    const AnalyzerConfig& config() const noexcept { return config_; }
    std::size_t doc_count() const noexcept { return doc_ids_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    const std::vector<std::string>& doc_ids() const noexcept { return doc_ids_; }
    const std::vector<std::uint32_t>& doc_lengths() const noexcept { return doc_lengths_; }
    const PostingList* postings(const std::string& term) const;
    std::size_t term_count() const noexcept { return postings_.size(); }
    std::uint32_t doc_length(const std::string& doc_id) const;

    /// Sum over query terms of weight * IDF * saturated tf, descending, ties
    /// by doc_id ascending, zero scores dropped, at most k results.
    std::vector<ScoredDoc> search(const WeightedTerms& query, std::size_t k, const Bm25Params& params = {}) const;

    /// analyze -> expand_query -> search, using the index's own analyzer.
    std::vector<ScoredDoc> search_text(std::string_view query_text, std::size_t k,
                                       const Bm25Params& params = {}) const;

    friend InvertedIndex build_index(const CorpusStore& store, const AnalyzerConfig& config);
    friend class IndexCodec;

  private:
    AnalyzerConfig config_;
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::unordered_map<std::string, PostingList> postings_;
};

InvertedIndex build_index(const CorpusStore& store, const AnalyzerConfig& config);

/// Inverse document frequency used by search: ln(1 + (N - df + 0.5)/(df + 0.5)).
double bm25_idf(std::size_t doc_count, std::size_t doc_freq);

/// Self-contained index bundle: analyzer config, documents and postings, so
/// `retrieve` and `generate` need only this one file.
struct IndexBundle {
    CorpusStore corpus;
    InvertedIndex index;
};

void save_index_bundle(const IndexBundle& bundle, const std::filesystem::path& path);
IndexBundle load_index_bundle(const std::filesystem::path& path);

}  // namespace pescourse
