#include "pescourse/text_analysis.hpp"

#include "pescourse/corpus.hpp"

namespace pescourse {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Decodes one code point starting at s[i] and advances i. Malformed
// sequences decode to U+FFFD, which the analyzer treats as a separator.
char32_t next_code_point(std::string_view s, std::size_t& i) {
    const auto lead = static_cast<unsigned char>(s[i++]);
    if (lead < 0x80) return lead;
    int extra = 0;
    char32_t cp = 0;
    if ((lead & 0xE0) == 0xC0) {
        extra = 1;
        cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
        extra = 2;
        cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
        extra = 3;
        cp = lead & 0x07;
    } else {
        return kReplacement;
    }
    for (int k = 0; k < extra; ++k) {
        if (i >= s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80) return kReplacement;
        cp = (cp << 6) | (static_cast<unsigned char>(s[i++]) & 0x3F);
    }
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp < 0xC0) return cp;
    if (cp <= 0xDE) return cp == 0xD7 ? cp : cp + 0x20;
    if (cp >= 0x100 && cp <= 0x137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x139 && cp <= 0x148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x14A && cp <= 0x177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x179 && cp <= 0x17E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x391 && cp <= 0x3A9 && cp != 0x3A2) return cp + 0x20;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;
    return cp;
}

char32_t fold_diacritic(char32_t cp) {
    // '_' keeps the code point unchanged.
    static constexpr std::string_view latin1 = "aaaaaaaceeeeiiiidnooooo_ouuuuy_y";
    static constexpr std::string_view latin_ext_a =
        "aaaaaaccccccccddddeeeeeeeeeegggggggghhhhiiiiiiiiiiiijjkkklllllll"
        "lllnnnnnnnnnoooooooorrrrrrssssssssttttttuuuuuuuuuuuuwwyyyzzzzzzs";
    static_assert(latin1.size() == 32);
    static_assert(latin_ext_a.size() == 128);
    if (cp >= 0xC0 && cp <= 0xDF) {
        char mapped = latin1[cp - 0xC0];
        return mapped == '_' ? cp : static_cast<char32_t>(mapped);
    }
    if (cp >= 0xE0 && cp <= 0xFF) {
        char mapped = latin1[cp - 0xE0];
        return mapped == '_' ? cp : static_cast<char32_t>(mapped);
    }
    if (cp >= 0x100 && cp <= 0x17F) return static_cast<char32_t>(latin_ext_a[cp - 0x100]);
    return cp;
}

bool is_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0 ||
           (cp >= 0x2000 && cp <= 0x200B) || cp == 0x3000;
}

bool is_word_char(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
    }
    if (cp == kReplacement) return false;
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows, math
    if (cp >= 0x3000 && cp <= 0x303F) return false;
    if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    return true;
}

std::vector<std::string> normalise_tokens(std::string_view text, const AnalyzerConfig& config) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        char32_t cp = next_code_point(text, i);
        bool separator = config.strip_punctuation ? !is_word_char(cp) : (is_space(cp) || cp == kReplacement);
        if (separator) {
            flush();
            continue;
        }
        if (config.lowercase) cp = to_lower(cp);
        if (!config.preserve_diacritics) cp = fold_diacritic(cp);
        append_utf8(current, cp);
    }
    flush();
    return tokens;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        lines.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace

std::vector<std::string> analyze(std::string_view text, const AnalyzerConfig& config) {
    auto tokens = normalise_tokens(text, config);
    if (config.stopwords.empty()) return tokens;
    std::erase_if(tokens, [&](const std::string& t) { return config.stopwords.contains(t); });
    return tokens;
}

std::set<std::string> SynonymDictionary::related(const std::string& term) const {
    std::set<std::string> out;
    for (const auto& [canonical, members] : classes) {
        if (canonical == term || members.contains(term)) {
            out.insert(canonical);
            out.insert(members.begin(), members.end());
        }
    }
    out.erase(term);
    return out;
}

WeightedTerms expand_query(const std::vector<std::string>& tokens, const SynonymDictionary& synonyms) {
    WeightedTerms terms;
    auto raise = [&](const std::string& term, double weight) {
        auto [it, inserted] = terms.emplace(term, weight);
        if (!inserted && it->second < weight) it->second = weight;
    };
    for (const auto& token : tokens) {
        raise(token, kLiteralWeight);
        for (const auto& syn : synonyms.related(token)) raise(syn, kSynonymWeight);
    }
    return terms;
}

SynonymDictionary parse_synonyms(std::string_view text, const AnalyzerConfig& config) {
    AnalyzerConfig normaliser = config;
    normaliser.stopwords.clear();
    SynonymDictionary dict;
    for (const auto& line : split_lines(text)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::vector<std::string> terms;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            auto comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            for (auto& tok : normalise_tokens(std::string_view(line).substr(pos, comma - pos), normaliser)) {
                terms.push_back(std::move(tok));
            }
            pos = comma + 1;
        }
        if (terms.size() < 2) continue;
        auto& members = dict.classes[terms.front()];
        for (std::size_t k = 1; k < terms.size(); ++k) {
            if (terms[k] != terms.front()) members.insert(terms[k]);
        }
    }
    return dict;
}

SynonymDictionary load_synonyms(const std::filesystem::path& path, const AnalyzerConfig& config) {
    return parse_synonyms(read_file(path), config);
}

std::set<std::string> parse_stopwords(std::string_view text, const AnalyzerConfig& config) {
    AnalyzerConfig normaliser = config;
    normaliser.stopwords.clear();
    std::set<std::string> out;
    for (const auto& line : split_lines(text)) {
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        for (auto& tok : normalise_tokens(line, normaliser)) out.insert(std::move(tok));
    }
    return out;
}

std::set<std::string> load_stopwords(const std::filesystem::path& path, const AnalyzerConfig& config) {
    return parse_stopwords(read_file(path), config);
}

}  // namespace pescourse
