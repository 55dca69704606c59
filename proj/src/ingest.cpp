#include "pescourse/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pescourse/error.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
    std::size_t start = 0;
    while (start < s.size() && is_space(s[start])) ++start;
    std::size_t end = s.size();
    while (end > start && is_space(s[end - 1])) --end;
    return std::string(s.substr(start, end - start));
}

std::optional<int> parse_int(std::string_view s) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return value;
}

bool is_choice_letter(char c) {
    return std::find(kChoiceLetters.begin(), kChoiceLetters.end(), c) != kChoiceLetters.end();
}

std::optional<char> letter_from(std::string_view s) {
    auto t = trim(s);
    if (t.size() != 1) return std::nullopt;
    const char c = (t[0] >= 'a' && t[0] <= 'z') ? static_cast<char>(t[0] - 'a' + 'A') : t[0];
    if (!is_choice_letter(c)) return std::nullopt;
    return c;
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

std::string decode_entities(std::string_view s) {
    static const std::map<std::string_view, std::string_view> named{
        {"amp", "&"}, {"lt", "<"}, {"gt", ">"}, {"quot", "\""}, {"apos", "'"}, {"nbsp", " "}};
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        auto semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 10) {
            out += s[i];
            continue;
        }
        auto name = s.substr(i + 1, semi - i - 1);
        if (!name.empty() && name[0] == '#') {
            std::uint32_t cp = 0;
            std::from_chars_result r{};
            if (name.size() > 1 && (name[1] == 'x' || name[1] == 'X')) {
                r = std::from_chars(name.data() + 2, name.data() + name.size(), cp, 16);
            } else {
                r = std::from_chars(name.data() + 1, name.data() + name.size(), cp, 10);
            }
            if (r.ec == std::errc{} && r.ptr == name.data() + name.size() && cp > 0 && cp <= 0x10FFFF) {
                append_utf8(out, cp);
                i = semi;
                continue;
            }
        } else if (auto it = named.find(name); it != named.end()) {
            out += it->second;
            i = semi;
            continue;
        }
        out += s[i];
    }
    return out;
}

std::string escape_html(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

// Minimal tag scanner for the quiz markup. It does not try to be an HTML
// parser: it yields start tags, end tags and text runs with byte offsets.
struct Token {
    enum class Kind { Start, End, Text } kind;
    std::string name;
    std::map<std::string, std::string> attrs;
    std::string text;
    std::size_t offset;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < src.size()) {
        if (src[i] != '<') {
            auto next = src.find('<', i);
            if (next == std::string_view::npos) next = src.size();
            tokens.push_back({Token::Kind::Text, {}, {}, decode_entities(src.substr(i, next - i)), i});
            i = next;
            continue;
        }
        if (src.compare(i, 4, "<!--") == 0) {
            auto end = src.find("-->", i + 4);
            if (end == std::string_view::npos) throw ParseError("unterminated comment", i);
            i = end + 3;
            continue;
        }
        auto close = src.find('>', i);
        if (close == std::string_view::npos) throw ParseError("unterminated tag", i);
        std::string_view body = src.substr(i + 1, close - i - 1);
        Token tok{Token::Kind::Start, {}, {}, {}, i};
        if (!body.empty() && (body[0] == '!' || body[0] == '?')) {
            i = close + 1;
            continue;
        }
        if (!body.empty() && body[0] == '/') {
            tok.kind = Token::Kind::End;
            body.remove_prefix(1);
        }
        if (!body.empty() && body.back() == '/') body.remove_suffix(1);
        std::size_t p = 0;
        while (p < body.size() && !std::isspace(static_cast<unsigned char>(body[p]))) ++p;
        tok.name = std::string(body.substr(0, p));
        std::transform(tok.name.begin(), tok.name.end(), tok.name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        while (p < body.size()) {
            while (p < body.size() && std::isspace(static_cast<unsigned char>(body[p]))) ++p;
            std::size_t key_start = p;
            while (p < body.size() && body[p] != '=' && !std::isspace(static_cast<unsigned char>(body[p]))) ++p;
            std::string key(body.substr(key_start, p - key_start));
            if (key.empty()) break;
            std::string value;
            if (p < body.size() && body[p] == '=') {
                ++p;
                if (p < body.size() && (body[p] == '"' || body[p] == '\'')) {
                    char quote = body[p++];
                    auto end = body.find(quote, p);
                    if (end == std::string_view::npos) throw ParseError("unterminated attribute value", i + 1 + p);
                    value = decode_entities(body.substr(p, end - p));
                    p = end + 1;
                } else {
                    std::size_t v = p;
                    while (p < body.size() && !std::isspace(static_cast<unsigned char>(body[p]))) ++p;
                    value = decode_entities(body.substr(v, p - v));
                }
            }
            tok.attrs[key] = value;
        }
        tokens.push_back(std::move(tok));
        i = close + 1;
    }
    return tokens;
}

bool has_class(const Token& t, std::string_view cls) {
    auto it = t.attrs.find("class");
    if (it == t.attrs.end()) return false;
    std::istringstream in(it->second);
    std::string word;
    while (in >> word) {
        if (word == cls) return true;
    }
    return false;
}

bool flag_attr(const Token& t, const std::string& key) {
    auto it = t.attrs.find(key);
    if (it == t.attrs.end()) return false;
    return it->second == "true" || it->second == "1" || it->second == key;
}

class QuizParser {
  public:
    explicit QuizParser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    ExamFile parse() {
        ExamFile exam;
        std::vector<std::pair<int, char>> key_rows;
        bool saw_key = false;
        while (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_];
            if (t.kind == Token::Kind::Start && t.name == "div" && has_class(t, "exam")) {
                exam.exam_id = attr(t, "data-exam-id");
                exam.specialty = attr(t, "data-specialty");
                exam.session = attr(t, "data-session");
                ++pos_;
            } else if (t.kind == Token::Kind::Start && t.name == "div" && has_class(t, "q")) {
                exam.questions.push_back(parse_question());
            } else if (t.kind == Token::Kind::Start && t.name == "table" && has_class(t, "key")) {
                if (saw_key) throw ParseError("more than one answer-key table", t.offset);
                saw_key = true;
                key_rows = parse_key();
            } else {
                ++pos_;
            }
        }
        if (!saw_key) throw ParseError("missing answer-key table", tokens_.empty() ? 0 : tokens_.back().offset);

        std::map<int, char> key;
        for (auto [no, letter] : key_rows) {
            if (!key.emplace(no, letter).second) throw SchemaError("answer key lists question twice", no);
        }
        for (auto& q : exam.questions) {
            auto it = key.find(q.question_no);
            if (it == key.end()) throw SchemaError("question missing from answer key", q.question_no);
            q.correct = it->second;
            q.exam_id = exam.exam_id;
            q.specialty = exam.specialty;
            q.session = exam.session;
        }
        if (key.size() != exam.questions.size()) {
            for (auto [no, letter] : key) {
                bool found = std::any_of(exam.questions.begin(), exam.questions.end(),
                                         [no = no](const ExamQuestion& q) { return q.question_no == no; });
                if (!found) throw SchemaError("answer key row has no matching question", no);
            }
            throw SchemaError("answer key row count does not match question count", 0);
        }
        return exam;
    }

  private:
    static std::string attr(const Token& t, const std::string& key) {
        auto it = t.attrs.find(key);
        return it == t.attrs.end() ? std::string{} : it->second;
    }

    // Collects text up to the matching end tag of `name`, flattening any
    // inline markup nested inside.
    std::string collect_text(const std::string& name, std::size_t open_offset) {
        std::string text;
        int depth = 0;
        while (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_++];
            if (t.kind == Token::Kind::Text) {
                text += t.text;
            } else if (t.kind == Token::Kind::Start && t.name == name) {
                ++depth;
            } else if (t.kind == Token::Kind::End && t.name == name) {
                if (depth == 0) return trim(text);
                --depth;
            } else if (t.kind == Token::Kind::Start && t.name == "br") {
                text += '\n';
            } else if (t.kind == Token::Kind::Start && (t.name == "div" || t.name == "table")) {
                throw ParseError("unclosed <" + name + "> element", open_offset);
            }
        }
        throw ParseError("unclosed <" + name + "> element", open_offset);
    }

    ExamQuestion parse_question() {
        const Token open = tokens_[pos_++];
        ExamQuestion q;
        auto no = parse_int(trim(attr(open, "id")));
        if (!no || *no <= 0) throw ParseError("question block without a positive numeric id", open.offset);
        q.question_no = *no;
        q.has_image = flag_attr(open, "data-image");
        q.invalidated = flag_attr(open, "data-invalidated");
        bool saw_stem = false;
        bool saw_answers = false;
        while (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_];
            if (t.kind == Token::Kind::End && t.name == "div") {
                ++pos_;
                if (!saw_stem) throw SchemaError("question has no stem", q.question_no);
                if (!saw_answers) throw SchemaError("question has no answer list", q.question_no);
                return q;
            }
            if (t.kind == Token::Kind::Start && (t.name == "div" || t.name == "table")) {
                throw ParseError("unclosed question block", open.offset);
            }
            if (t.kind == Token::Kind::Start && t.name == "p" && has_class(t, "stem")) {
                ++pos_;
                q.stem = collect_text("p", t.offset);
                saw_stem = true;
            } else if (t.kind == Token::Kind::Start && t.name == "ol" && has_class(t, "ans")) {
                parse_answers(q, t.offset);
                saw_answers = true;
            } else {
                ++pos_;
            }
        }
        throw ParseError("unclosed question block", open.offset);
    }

    void parse_answers(ExamQuestion& q, std::size_t open_offset) {
        ++pos_;
        std::vector<std::string> items;
        while (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_];
            if (t.kind == Token::Kind::End && t.name == "ol") {
                ++pos_;
                if (items.size() != kChoiceLetters.size()) {
                    throw SchemaError("question must have exactly 5 answers, found " + std::to_string(items.size()),
                                      q.question_no);
                }
                for (std::size_t i = 0; i < items.size(); ++i) q.choices.push_back({kChoiceLetters[i], items[i]});
                return;
            }
            if (t.kind == Token::Kind::Start && (t.name == "div" || t.name == "table")) {
                throw ParseError("unclosed answer list", open_offset);
            }
            if (t.kind == Token::Kind::Start && t.name == "li") {
                ++pos_;
                items.push_back(collect_text("li", t.offset));
            } else {
                ++pos_;
            }
        }
        throw ParseError("unclosed answer list", open_offset);
    }

    std::vector<std::pair<int, char>> parse_key() {
        const Token open = tokens_[pos_++];
        std::vector<std::pair<int, char>> rows;
        std::vector<std::string> cells;
        while (pos_ < tokens_.size()) {
            const Token& t = tokens_[pos_];
            if (t.kind == Token::Kind::End && t.name == "table") {
                ++pos_;
                return rows;
            }
            if (t.kind == Token::Kind::Start && t.name == "tr") {
                cells.clear();
                ++pos_;
            } else if (t.kind == Token::Kind::Start && (t.name == "td" || t.name == "th")) {
                ++pos_;
                cells.push_back(collect_text(t.name, t.offset));
            } else if (t.kind == Token::Kind::End && t.name == "tr") {
                ++pos_;
                if (cells.size() != 2) throw ParseError("answer-key row must have two cells", t.offset);
                auto no = parse_int(cells[0]);
                if (!no) continue;  // header row
                auto letter = letter_from(cells[1]);
                if (!letter) throw SchemaError("answer key holds an invalid letter", *no);
                rows.emplace_back(*no, *letter);
            } else {
                ++pos_;
            }
        }
        throw ParseError("unclosed answer-key table", open.offset);
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

const json& require(const json& obj, const char* key, int question_no) {
    auto it = obj.find(key);
    if (it == obj.end()) throw SchemaError(std::string("missing field '") + key + "'", question_no);
    return *it;
}

std::string require_string(const json& obj, const char* key, int question_no) {
    const json& v = require(obj, key, question_no);
    if (!v.is_string()) throw SchemaError(std::string("field '") + key + "' must be a string", question_no);
    return v.get<std::string>();
}

bool optional_bool(const json& obj, const char* key, int question_no) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return false;
    if (!it->is_boolean()) throw SchemaError(std::string("field '") + key + "' must be a boolean", question_no);
    return it->get<bool>();
}

ExamQuestion question_from_schema(const json& item, const ExamFile& exam, std::size_t index) {
    if (!item.is_object()) throw SchemaError("question entry must be an object", static_cast<int>(index + 1));
    const json& no = require(item, "test_no", 0);
    if (!no.is_number_integer() || no.get<long long>() <= 0) {
        throw SchemaError("test_no must be a positive integer", 0);
    }
    ExamQuestion q;
    q.question_no = no.get<int>();
    q.exam_id = exam.exam_id;
    q.specialty = exam.specialty;
    q.session = exam.session;
    q.stem = trim(require_string(item, "question", q.question_no));

    const json& answers = require(item, "answers", q.question_no);
    if (!answers.is_object()) throw SchemaError("answers must be an object", q.question_no);
    for (auto& [key, value] : answers.items()) {
        if (key.size() != 1 || !is_choice_letter(key[0])) {
            throw SchemaError("unexpected answer key '" + key + "'", q.question_no);
        }
        if (!value.is_string()) throw SchemaError("answer " + key + " must be a string", q.question_no);
    }
    for (char letter : kChoiceLetters) {
        auto it = answers.find(std::string(1, letter));
        if (it == answers.end()) {
            throw SchemaError(std::string("missing answer ") + letter, q.question_no);
        }
        q.choices.push_back({letter, trim(it->get<std::string>())});
    }
    auto correct = letter_from(require_string(item, "correct", q.question_no));
    if (!correct) throw SchemaError("correct must be one of A..E", q.question_no);
    q.correct = *correct;
    q.has_image = optional_bool(item, "has_image", q.question_no);
    q.invalidated = optional_bool(item, "invalidated", q.question_no);
    return q;
}

}  // namespace

std::string ExamQuestion::id() const { return exam_id + "-q" + std::to_string(question_no); }

const std::string& ExamQuestion::choice_text(char letter) const {
    for (const auto& c : choices) {
        if (c.letter == letter) return c.text;
    }
    throw SchemaError(std::string("no choice ") + letter, question_no);
}

std::string_view to_string(DropReason reason) {
    switch (reason) {
        case DropReason::Image: return "Image";
        case DropReason::Invalidated: return "Invalidated";
    }
    return "Unknown";
}

void validate_exam(const ExamFile& exam) {
    if (exam.exam_id.empty()) throw SchemaError("exam_id must be non-empty", 0);
    if (exam.questions.empty()) throw SchemaError("exam has no questions", 0);
    std::set<int> seen;
    for (const auto& q : exam.questions) {
        if (q.question_no <= 0) throw SchemaError("question number must be positive", q.question_no);
        if (!seen.insert(q.question_no).second) throw SchemaError("duplicate question number", q.question_no);
        if (q.choices.size() != kChoiceLetters.size()) {
            throw SchemaError("question must have exactly 5 choices", q.question_no);
        }
        for (std::size_t i = 0; i < q.choices.size(); ++i) {
            if (q.choices[i].letter != kChoiceLetters[i]) {
                throw SchemaError("choices must be lettered A..E in order", q.question_no);
            }
        }
        if (!is_choice_letter(q.correct)) throw SchemaError("correct must be one of A..E", q.question_no);
    }
}

ExamFile parse_exam_json(std::string_view bytes) {
    json root;
    try {
        root = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), e.byte);
    }
    if (!root.is_object()) throw SchemaError("top level must be an object", 0);
    ExamFile exam;
    exam.exam_id = require_string(root, "exam_id", 0);
    exam.specialty = require_string(root, "specialty", 0);
    exam.session = require_string(root, "session", 0);
    const json& questions = require(root, "questions", 0);
    if (!questions.is_array()) throw SchemaError("questions must be an array", 0);
    for (std::size_t i = 0; i < questions.size(); ++i) {
        exam.questions.push_back(question_from_schema(questions[i], exam, i));
    }
    validate_exam(exam);
    return exam;
}

ExamFile parse_exam_quiz_html(std::string_view bytes) {
    QuizParser parser(tokenize(bytes));
    ExamFile exam = parser.parse();
    validate_exam(exam);
    return exam;
}

FilterResult filter_questions(const ExamFile& exam) {
    FilterResult out;
    for (const auto& q : exam.questions) {
        if (q.has_image) {
            out.dropped.emplace_back(q, DropReason::Image);
        } else if (q.invalidated) {
            out.dropped.emplace_back(q, DropReason::Invalidated);
        } else {
            out.kept.push_back(q);
        }
    }
    return out;
}

json question_to_json(const ExamQuestion& q) {
    json answers = json::object();
    for (const auto& c : q.choices) answers[std::string(1, c.letter)] = c.text;
    return json{{"exam_id", q.exam_id},         {"specialty", q.specialty},
                {"session", q.session},         {"test_no", q.question_no},
                {"question", q.stem},           {"answers", answers},
                {"correct", std::string(1, q.correct)}, {"has_image", q.has_image},
                {"invalidated", q.invalidated}};
}

ExamQuestion question_from_json(const json& j) {
    ExamFile header;
    header.exam_id = require_string(j, "exam_id", 0);
    header.specialty = j.value("specialty", "");
    header.session = j.value("session", "");
    return question_from_schema(j, header, 0);
}

std::string render_exam_json(const ExamFile& exam) {
    json questions = json::array();
    for (const auto& q : exam.questions) {
        json item = question_to_json(q);
        item.erase("exam_id");
        item.erase("specialty");
        item.erase("session");
        questions.push_back(std::move(item));
    }
    json root{{"exam_id", exam.exam_id},
              {"specialty", exam.specialty},
              {"session", exam.session},
              {"questions", std::move(questions)}};
    return root.dump(2) + "\n";
}

std::string render_exam_quiz_html(const ExamFile& exam) {
    std::ostringstream out;
    out << "<div class=\"exam\" data-exam-id=\"" << escape_html(exam.exam_id) << "\" data-specialty=\""
        << escape_html(exam.specialty) << "\" data-session=\"" << escape_html(exam.session) << "\">\n";
    for (const auto& q : exam.questions) {
        out << "<div class=\"q\" id=\"" << q.question_no << "\"";
        if (q.has_image) out << " data-image=\"true\"";
        if (q.invalidated) out << " data-invalidated=\"true\"";
        out << ">\n  <p class=\"stem\">" << escape_html(q.stem) << "</p>\n  <ol class=\"ans\">\n";
        for (const auto& c : q.choices) out << "    <li>" << escape_html(c.text) << "</li>\n";
        out << "  </ol>\n</div>\n";
    }
    out << "<table class=\"key\">\n  <tr><th>No</th><th>Answer</th></tr>\n";
    for (const auto& q : exam.questions) {
        out << "  <tr><td>" << q.question_no << "</td><td>" << q.correct << "</td></tr>\n";
    }
    out << "</table>\n</div>\n";
    return out.str();
}

}  // namespace pescourse
