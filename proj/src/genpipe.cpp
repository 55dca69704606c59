#include "pescourse/genpipe.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <sstream>
#include <thread>

#include "http_util.hpp"
#include "pescourse/error.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

constexpr std::string_view kDocMarkerOpen = "[doc:";

std::string trim(std::string_view s) {
    auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

// Single pass, so placeholder-like text inside substituted values is left alone.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        auto open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        auto close = tmpl.find("}}", open + 2);
        if (close == std::string_view::npos) {
            out.append(tmpl.substr(pos));
            break;
        }
        out.append(tmpl.substr(pos, open - pos));
        std::string key(tmpl.substr(open + 2, close - open - 2));
        if (auto it = values.find(key); it != values.end()) {
            out += it->second;
        } else {
            out.append(tmpl.substr(open, close + 2 - open));
        }
        pos = close + 2;
    }
    return out;
}

std::string render_choices(const ExamQuestion& q) {
    std::string out;
    for (const auto& c : q.choices) {
        if (!out.empty()) out += '\n';
        out += c.letter;
        out += ". ";
        out += c.text;
    }
    return out;
}

std::map<std::string, std::string> question_values(const ExamQuestion& q) {
    return {{"stem", q.stem},
            {"choices", render_choices(q)},
            {"correct", std::string(1, q.correct)},
            {"correct_text", q.choice_text(q.correct)}};
}

void require_order(const std::string& tmpl, const std::vector<std::string>& keys, const std::string& name) {
    std::size_t last = 0;
    for (const auto& key : keys) {
        auto at = tmpl.find("{{" + key + "}}");
        if (at == std::string::npos) throw Error(name + " template lacks {{" + key + "}}");
        if (at < last) throw Error(name + " template places {{" + key + "}} out of order");
        last = at;
    }
}

std::string section(std::string_view prompt, std::string_view header, std::string_view next_header) {
    auto start = prompt.find(header);
    if (start == std::string_view::npos) return {};
    start += header.size();
    auto end = next_header.empty() ? std::string_view::npos : prompt.find(next_header, start);
    return trim(prompt.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
}

template <typename Fn>
std::string with_retries(int retries, std::chrono::milliseconds backoff, Fn&& fn) {
    std::string last_error;
    for (int attempt = 0; attempt <= retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        try {
            return fn();
        } catch (const std::exception& e) {
            last_error = e.what();
        }
    }
    throw Error("generation service unavailable after " + std::to_string(retries) + " retries: " + last_error);
}

json params_to_json(const GenParams& p) {
    json j{{"temperature", p.temperature}, {"max_output_tokens", p.max_output_tokens}};
    j["seed"] = p.seed ? json(*p.seed) : json(nullptr);
    return j;
}

GenParams params_from_json(const json& j) {
    GenParams p;
    p.temperature = j.value("temperature", 0.0);
    p.max_output_tokens = j.value("max_output_tokens", 1024);
    if (j.contains("seed") && !j["seed"].is_null()) p.seed = j["seed"].get<std::int64_t>();
    return p;
}

}  // namespace

void GenParams::validate() const {
    if (!(temperature >= 0.0)) throw DomainError("temperature must be >= 0");
    if (max_output_tokens <= 0) throw DomainError("max_output_tokens must be positive");
}

void PromptTemplates::validate() const {
    require_order(rephrase, {"stem", "choices", "correct"}, "rephrase");
    require_order(comment, {"stem", "choices", "correct", "documents"}, "comment");
}

PromptTemplates load_prompt_templates(const std::filesystem::path& dir, const std::string& version) {
    PromptTemplates t;
    t.version = version;
    t.rephrase = read_file(dir / ("rephrase." + version + ".txt"));
    t.comment = read_file(dir / ("comment." + version + ".txt"));
    t.validate();
    return t;
}

const PromptTemplates& default_prompt_templates() {
    static const PromptTemplates templates =
        load_prompt_templates(std::filesystem::path(PESCOURSE_DATA_DIR) / "prompts", "v1");
    return templates;
}

std::string MockProvider::generate(const std::string& prompt, const GenParams& params) const {
    params.validate();
    if (prompt.starts_with("TASK: search-query")) {
        const auto stem = section(prompt, "\nQUESTION:\n", "\nANSWERS:\n");
        std::string query;
        for (const auto& tok : analyze(stem, analyzer_)) {
            if (!query.empty()) query += ' ';
            query += tok;
        }
        return query;
    }
    if (prompt.starts_with("TASK: comment")) {
        const auto correct = section(prompt, "\nCORRECT ANSWER:", "\n");
        const auto docs = section(prompt, "\nDOCUMENTS:\n", "");
        std::vector<std::string> ids;
        std::istringstream lines(docs);
        for (std::string line; std::getline(lines, line);) {
            if (line.starts_with(kDocMarkerOpen)) {
                auto close = line.find(']');
                if (close != std::string::npos) ids.push_back(line.substr(kDocMarkerOpen.size(), close - kDocMarkerOpen.size()));
            }
        }
        std::string body = "The correct answer is " + correct + ".";
        const char* leads[] = {" The supplied sources support this directly ", " It is consistent with ",
                               " Further detail is given in "};
        for (std::size_t i = 0; i < std::min<std::size_t>(3, ids.size()); ++i) {
            body += leads[i];
            body += "[doc:" + ids[i] + "].";
        }
        body += " The remaining options do not fit the clinical picture (internal knowledge).";
        return body;
    }
    throw Error("mock provider does not recognise the prompt task");
}

HttpProvider::HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
    auto ep = detail::parse_endpoint(config_.endpoint);
    auto timeout = config_.timeout;
    transport_ = [ep, timeout](const std::string& body) {
        return detail::http_post_json(ep, "/generate", body, timeout);
    };
}

HttpProvider::HttpProvider(HttpProviderConfig config, GenerateTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::string HttpProvider::generate(const std::string& prompt, const GenParams& params) const {
    params.validate();
    json req{{"prompt", prompt}, {"temperature", params.temperature}, {"max_tokens", params.max_output_tokens}};
    req["seed"] = params.seed ? json(*params.seed) : json(nullptr);
    const std::string body = req.dump();
    const std::string response = with_retries(config_.retries, config_.backoff, [&] { return transport_(body); });
    json res;
    try {
        res = json::parse(response);
    } catch (const json::parse_error& e) {
        throw Error(std::string("generation service sent malformed JSON: ") + e.what());
    }
    if (!res.contains("text") || !res["text"].is_string()) throw Error("generation service reply lacks text");
    return res["text"].get<std::string>();
}

std::string render_rephrase_prompt(const ExamQuestion& question, const PromptTemplates& templates) {
    return fill_template(templates.rephrase, question_values(question));
}

SearchQuery rephrase(const ExamQuestion& question, const TextGenProvider& provider, const GenParams& params,
                     const PromptTemplates& templates) {
    std::string output;
    try {
        output = provider.generate(render_rephrase_prompt(question, templates), params);
    } catch (const std::exception& e) {
        throw GenError(GenError::Kind::ProviderFailure, std::string("rephrase provider failed: ") + e.what());
    }
    SearchQuery q;
    q.question_id = question.id();
    std::istringstream lines(output);
    for (std::string line; std::getline(lines, line);) {
        auto t = trim(line);
        if (t.empty()) continue;
        if (q.query_text.empty() && !t.starts_with("- ")) {
            q.query_text = t;
        } else if (t.starts_with("- ")) {
            q.difficulties.push_back(trim(std::string_view(t).substr(2)));
        }
    }
    if (q.query_text.empty()) throw GenError(GenError::Kind::EmptyQuery, "provider returned an empty query");
    std::size_t raw = question.stem.size();
    for (const auto& c : question.choices) raw += c.text.size();
    if (q.query_text.size() >= raw) {
        throw GenError(GenError::Kind::QueryTooLong, "rephrased query is not shorter than the question");
    }
    return q;
}

std::string build_prompt(const ExamQuestion& question, const std::vector<CorpusDocument>& docs,
                         const PromptTemplates& templates) {
    if (docs.size() != kPromptDocCount) {
        throw PipelineError(PipelineError::Kind::DocCount, "prompt",
                            "exactly " + std::to_string(kPromptDocCount) + " documents required, got " +
                                std::to_string(docs.size()));
    }
    std::string rendered;
    for (const auto& doc : docs) {
        if (!rendered.empty()) rendered += "\n\n";
        rendered += "[doc:" + doc.doc_id + "] " + doc.title + " (" + std::string(to_string(doc.source_kind)) + ", " +
                    doc.publication_date + ")\n" + doc.paragraph;
    }
    auto values = question_values(question);
    values["documents"] = rendered;
    return fill_template(templates.comment, values);
}

std::vector<std::string> extract_citations(std::string_view body) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = body.find(kDocMarkerOpen, pos)) != std::string_view::npos) {
        const auto start = pos + kDocMarkerOpen.size();
        auto close = body.find(']', start);
        if (close == std::string_view::npos) break;
        std::string id(body.substr(start, close - start));
        if (id.empty() || id.find_first_of(" \t\n[") != std::string::npos) {
            // Not a marker; a real one may still start inside it.
            pos = start;
            continue;
        }
        pos = close + 1;
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(std::move(id));
    }
    return out;
}

GeneratedComment generate_comment(const ExamQuestion& question, const std::vector<CorpusDocument>& docs,
                                  const TextGenProvider& provider, const GenParams& params, const Clock& clock,
                                  const PromptTemplates& templates) {
    params.validate();
    const std::string prompt = build_prompt(question, docs, templates);
    GeneratedComment comment;
    comment.question_id = question.id();
    try {
        comment.body = provider.generate(prompt, params);
    } catch (const std::exception& e) {
        throw GenError(GenError::Kind::ProviderFailure, std::string("comment provider failed: ") + e.what());
    }
    if (trim(comment.body).empty()) throw GenError(GenError::Kind::EmptyComment, "provider returned an empty comment");
    comment.citations = extract_citations(comment.body);
    for (const auto& id : comment.citations) {
        bool supplied = std::any_of(docs.begin(), docs.end(), [&](const CorpusDocument& d) { return d.doc_id == id; });
        if (!supplied) throw CitationError(id);
    }
    comment.provider_meta = {provider.model_name(), params, format_iso8601(clock.now()), templates.version};
    return comment;
}

json comment_to_json(const GeneratedComment& c) {
    json meta = params_to_json(c.provider_meta.params);
    meta["model"] = c.provider_meta.model;
    meta["timestamp"] = c.provider_meta.timestamp;
    meta["template_version"] = c.provider_meta.template_version;
    return json{{"body", c.body}, {"citations", c.citations}, {"provider_meta", meta}};
}

GeneratedComment comment_from_json(const json& c, const std::string& question_id) {
    GeneratedComment out;
    out.question_id = question_id;
    out.body = c.at("body").get<std::string>();
    out.citations = c.at("citations").get<std::vector<std::string>>();
    const json& meta = c.at("provider_meta");
    out.provider_meta.model = meta.value("model", "");
    out.provider_meta.params = params_from_json(meta);
    out.provider_meta.timestamp = meta.value("timestamp", "");
    out.provider_meta.template_version = meta.value("template_version", "");
    return out;
}

json report_to_json(const QuestionReport& r) {
    json docs = json::array();
    for (const auto& d : r.docs) {
        json j = document_to_json(d.doc);
        j["first_stage_score"] = d.first_stage_score;
        j["rerank_score"] = d.rerank_score;
        docs.push_back(std::move(j));
    }
    return json{{"question_id", r.question_id()},
                {"question", question_to_json(r.question)},
                {"query", {{"text", r.query.query_text}, {"difficulties", r.query.difficulties}}},
                {"rerank_mode", std::string(to_string(r.mode))},
                {"docs", std::move(docs)},
                {"comment", comment_to_json(r.comment)}};
}

QuestionReport report_from_json(const json& j) {
    try {
        QuestionReport r;
        r.question = question_from_json(j.at("question"));
        const std::string qid = j.at("question_id").get<std::string>();
        if (qid != r.question.id()) throw Error("report question_id does not match its question");
        r.query.question_id = qid;
        r.query.query_text = j.at("query").at("text").get<std::string>();
        r.query.difficulties = j.at("query").value("difficulties", std::vector<std::string>{});
        auto mode = rerank_variant_from_string(j.at("rerank_mode").get<std::string>());
        if (!mode) throw Error("unknown rerank_mode in report " + qid);
        r.mode = *mode;
        for (const auto& d : j.at("docs")) {
            r.docs.push_back({document_from_json(d), d.value("first_stage_score", 0.0), d.value("rerank_score", 0.0)});
        }
        r.comment = comment_from_json(j.at("comment"), qid);
        return r;
    } catch (const json::exception& e) {
        throw Error(std::string("malformed question report: ") + e.what());
    }
}

std::string render_report(const QuestionReport& report) { return report_to_json(report).dump(2) + "\n"; }

QuestionReport run_pipeline(const ExamQuestion& question, const PipelineContext& ctx) {
    const PromptTemplates& templates = ctx.options.templates ? *ctx.options.templates : default_prompt_templates();
    auto stage_error = [](const char* stage, const std::exception& e) {
        std::throw_with_nested(PipelineError(PipelineError::Kind::Stage, stage, e.what()));
    };

    QuestionReport report;
    report.question = question;
    report.mode = ctx.mode.variant;
    try {
        report.query = rephrase(question, ctx.provider, ctx.options.params, templates);
    } catch (const std::exception& e) {
        stage_error("rephrase", e);
    }

    std::vector<ScoredDoc> hits;
    try {
        hits = ctx.index.search_text(report.query.query_text, ctx.mode.candidate_cap, ctx.options.bm25);
    } catch (const std::exception& e) {
        stage_error("search", e);
    }

    std::vector<RerankedDoc> ranked;
    try {
        ranked = rerank(hits, ctx.mode, ctx.scorer, report.query.query_text, ctx.corpus, ctx.options.rerank);
    } catch (const std::exception& e) {
        stage_error("rerank", e);
    }
    if (ranked.size() < kPromptDocCount) {
        throw PipelineError(PipelineError::Kind::DocCount, "retrieve",
                            "only " + std::to_string(ranked.size()) + " documents retrieved, " +
                                std::to_string(kPromptDocCount) + " required");
    }
    ranked.resize(kPromptDocCount);

    std::vector<CorpusDocument> docs;
    for (const auto& r : ranked) {
        const CorpusDocument& doc = ctx.corpus.at(r.doc_id);
        docs.push_back(doc);
        report.docs.push_back({doc, r.first_stage_score, r.rerank_score});
    }
    try {
        report.comment = generate_comment(question, docs, ctx.provider, ctx.options.params, ctx.clock, templates);
    } catch (const std::exception& e) {
        stage_error("generate", e);
    }
    return report;
}

std::vector<BatchOutcome> run_batch(const std::vector<ExamQuestion>& questions, const PipelineContext& ctx,
                                    std::size_t width) {
    std::vector<BatchOutcome> out(questions.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < questions.size(); i = next++) {
            out[i].question_id = questions[i].id();
            try {
                out[i].report = run_pipeline(questions[i], ctx);
            } catch (const std::exception& e) {
                out[i].error = describe(e);
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(width, 1, std::max<std::size_t>(1, questions.size()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    return out;
}

}  // namespace pescourse
