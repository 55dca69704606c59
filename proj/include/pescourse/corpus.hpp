#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace pescourse {

enum class SourceKind { Guideline, Textbook, JournalArticle, CaseReport, Other };

std::string_view to_string(SourceKind kind);
std::optional<SourceKind> source_kind_from_string(std::string_view s);

/// Tier used for prioritising sources; lower is more valuable. Guidelines and
/// textbooks share the top tier.
int source_tier(SourceKind kind);

inline constexpr std::size_t kSnippetTarget = 140;
inline constexpr std::size_t kSnippetCap = 160;

struct CorpusDocument {
    std::string doc_id;
    std::string title;
    SourceKind source_kind = SourceKind::Other;
    std::string publication_date;  // ISO-8601 YYYY-MM-DD
    std::string paragraph;
    std::string snippet;
    std::string url_or_locator;

    bool operator==(const CorpusDocument&) const = default;
};

/// Total order over sources: more valuable tier first, then newer
/// publication date, then doc_id ascending. `less` means "ranks before".
std::strong_ordering compare_sources(const CorpusDocument& a, const CorpusDocument& b);

/// Builds a snippet of at most kSnippetTarget code points from the start of
/// the paragraph, cut at a word boundary when one exists.
std::string make_snippet(std::string_view paragraph);

/// Number of Unicode code points in a UTF-8 string.
std::size_t utf8_length(std::string_view s);

/// True when `snippet`, after whitespace normalisation, occurs in the
/// normalised paragraph.
bool snippet_is_extract(std::string_view snippet, std::string_view paragraph);

/// Throws Error on an empty id, a non-ISO date, or a snippet that is too long
/// or not taken from the paragraph.
void check_document(const CorpusDocument& doc);

nlohmann::json document_to_json(const CorpusDocument& doc);
CorpusDocument document_from_json(const nlohmann::json& j);

/// Paragraph-granular document store. Built once, then read-only.
class CorpusStore {
  public:
    CorpusStore() = default;

    /// Throws DuplicateIdError if doc_id is already present and Error when
    /// check_document fails.
    void add(CorpusDocument doc);

    std::size_t size() const noexcept { return docs_.size(); }
    bool empty() const noexcept { return docs_.empty(); }
    const std::vector<CorpusDocument>& documents() const noexcept { return docs_; }
    const CorpusDocument* find(std::string_view doc_id) const;
    const CorpusDocument& at(std::string_view doc_id) const;

    auto begin() const { return docs_.begin(); }
    auto end() const { return docs_.end(); }

  private:
    std::vector<CorpusDocument> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Parses the line-delimited corpus format. Blank lines and lines starting
/// with '#' are skipped. Throws ParseError(line_no) and DuplicateIdError.
CorpusStore parse_corpus(std::string_view text);
CorpusStore load_corpus(const std::filesystem::path& path);

std::string render_corpus(const CorpusStore& store);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace pescourse
