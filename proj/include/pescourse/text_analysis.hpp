#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pescourse {

/// Synonym classes as read from the dictionary file: the first term on each
/// line is the canonical entry, the rest are its synonyms. Expansion treats
/// each class symmetrically.
struct SynonymDictionary {
    std::map<std::string, std::set<std::string>> classes;

    /// Every term that shares a class with `term`, excluding `term` itself.
    std::set<std::string> related(const std::string& term) const;

    bool empty() const noexcept { return classes.empty(); }
    bool operator==(const SynonymDictionary&) const = default;
};

struct AnalyzerConfig {
    bool lowercase = true;
    bool strip_punctuation = true;
    bool preserve_diacritics = true;
    std::set<std::string> stopwords;
    SynonymDictionary synonyms;

    bool operator==(const AnalyzerConfig&) const = default;
};

/// Lowercases (Latin-1 and Latin Extended-A aware), splits on punctuation and
/// whitespace, optionally folds diacritics and drops stopwords. Stopwords are
/// compared after the same normalisation.
std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config);

/// Weighted query terms, ordered by term.
using WeightedTerms = std::map<std::string, double>;

inline constexpr double kLiteralWeight = 1.0;
inline constexpr double kSynonymWeight = 0.5;

/// Each token contributes itself at 1.0 and its synonym-class members at 0.5;
/// duplicates keep the larger weight.
WeightedTerms expand_query(const std::vector<std::string>& tokens, const SynonymDictionary& synonyms);

/// One class per line, comma separated. Terms are normalised with `config`
/// (stopword removal is not applied to dictionary entries); entries that
/// analyse to several tokens are kept as the individual tokens.
SynonymDictionary parse_synonyms(std::string_view text, const AnalyzerConfig& config = {});
SynonymDictionary load_synonyms(const std::filesystem::path& path, const AnalyzerConfig& config = {});

/// One term per line; blank lines and '#' comments skipped.
std::set<std::string> parse_stopwords(std::string_view text, const AnalyzerConfig& config = {});
std::set<std::string> load_stopwords(const std::filesystem::path& path, const AnalyzerConfig& config = {});

}  // namespace pescourse
