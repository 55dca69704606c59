#include "pescourse/corpus.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include "pescourse/error.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

std::string normalize_ws(std::string_view s) {
    std::string out;
    bool pending_space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out += ' ';
        pending_space = false;
        out += c;
    }
    return out;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    auto num = [&](std::size_t at, std::size_t n) {
        int v = 0;
        for (std::size_t i = at; i < at + n; ++i) v = v * 10 + (s[i] - '0');
        return v;
    };
    const std::chrono::year_month_day ymd{std::chrono::year(num(0, 4)), std::chrono::month(num(5, 2)),
                                          std::chrono::day(num(8, 2))};
    return ymd.ok();
}

}  // namespace

std::string_view to_string(SourceKind kind) {
    switch (kind) {
        case SourceKind::Guideline: return "Guideline";
        case SourceKind::Textbook: return "Textbook";
        case SourceKind::JournalArticle: return "JournalArticle";
        case SourceKind::CaseReport: return "CaseReport";
        case SourceKind::Other: return "Other";
    }
    return "Other";
}

std::optional<SourceKind> source_kind_from_string(std::string_view s) {
    for (auto k : {SourceKind::Guideline, SourceKind::Textbook, SourceKind::JournalArticle, SourceKind::CaseReport,
                   SourceKind::Other}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

int source_tier(SourceKind kind) {
    switch (kind) {
        case SourceKind::Guideline:
        case SourceKind::Textbook: return 0;
        case SourceKind::JournalArticle: return 1;
        case SourceKind::CaseReport: return 2;
        case SourceKind::Other: return 3;
    }
    return 3;
}

std::strong_ordering compare_sources(const CorpusDocument& a, const CorpusDocument& b) {
    if (auto c = source_tier(a.source_kind) <=> source_tier(b.source_kind); c != 0) return c;
    // ISO dates compare lexicographically; newer ranks first.
    if (auto c = b.publication_date <=> a.publication_date; c != 0) return c;
    return a.doc_id <=> b.doc_id;
}

std::size_t utf8_length(std::string_view s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

std::string make_snippet(std::string_view paragraph) {
    std::string norm = normalize_ws(paragraph);
    if (utf8_length(norm) <= kSnippetTarget) return norm;
    // Byte offset of the first code point past the target.
    std::size_t cut = 0;
    std::size_t count = 0;
    for (; cut < norm.size(); ++cut) {
        if ((static_cast<unsigned char>(norm[cut]) & 0xC0) != 0x80) {
            if (count == kSnippetTarget) break;
            ++count;
        }
    }
    auto space = norm.rfind(' ', cut);
    if (space != std::string::npos && space > cut / 2) cut = space;
    return norm.substr(0, cut);
}

bool snippet_is_extract(std::string_view snippet, std::string_view paragraph) {
    return normalize_ws(paragraph).find(normalize_ws(snippet)) != std::string::npos;
}

void check_document(const CorpusDocument& doc) {
    if (doc.doc_id.empty()) throw Error("doc_id must be non-empty");
    if (!is_iso_date(doc.publication_date)) throw Error("publication_date must be YYYY-MM-DD for " + doc.doc_id);
    if (utf8_length(doc.snippet) > kSnippetCap) {
        throw Error("snippet longer than " + std::to_string(kSnippetCap) + " characters for " + doc.doc_id);
    }
    if (!snippet_is_extract(doc.snippet, doc.paragraph)) {
        throw Error("snippet is not an extract of the paragraph for " + doc.doc_id);
    }
}

json document_to_json(const CorpusDocument& doc) {
    return json{{"doc_id", doc.doc_id},
                {"title", doc.title},
                {"source_kind", std::string(to_string(doc.source_kind))},
                {"publication_date", doc.publication_date},
                {"paragraph", doc.paragraph},
                {"snippet", doc.snippet},
                {"url_or_locator", doc.url_or_locator}};
}

CorpusDocument document_from_json(const json& j) {
    if (!j.is_object()) throw Error("document must be a JSON object");
    CorpusDocument doc;
    doc.doc_id = j.at("doc_id").get<std::string>();
    if (doc.doc_id.empty()) throw Error("doc_id must be non-empty");
    doc.title = j.value("title", "");
    auto kind = source_kind_from_string(j.value("source_kind", "Other"));
    if (!kind) throw Error("unknown source_kind for " + doc.doc_id);
    doc.source_kind = *kind;
    doc.publication_date = j.value("publication_date", "");
    doc.paragraph = j.at("paragraph").get<std::string>();
    doc.snippet = j.value("snippet", "");
    if (doc.snippet.empty()) doc.snippet = make_snippet(doc.paragraph);
    doc.url_or_locator = j.value("url_or_locator", "");
    check_document(doc);
    return doc;
}

void CorpusStore::add(CorpusDocument doc) {
    check_document(doc);
    auto [it, inserted] = by_id_.emplace(doc.doc_id, docs_.size());
    if (!inserted) throw DuplicateIdError(doc.doc_id);
    docs_.push_back(std::move(doc));
}

const CorpusDocument* CorpusStore::find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const CorpusDocument& CorpusStore::at(std::string_view doc_id) const {
    if (const auto* doc = find(doc_id)) return *doc;
    throw Error("unknown doc_id: " + std::string(doc_id));
}

CorpusStore parse_corpus(std::string_view text) {
    CorpusStore store;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string_view::npos || line[first] == '#') continue;
        CorpusDocument doc;
        try {
            doc = document_from_json(json::parse(line));
        } catch (const json::exception& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what(), line_no, true);
        } catch (const DuplicateIdError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what(), line_no, true);
        }
        store.add(std::move(doc));
    }
    return store;
}

CorpusStore load_corpus(const std::filesystem::path& path) { return parse_corpus(read_file(path)); }

std::string render_corpus(const CorpusStore& store) {
    std::string out;
    for (const auto& doc : store) out += document_to_json(doc).dump() + "\n";
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace pescourse
