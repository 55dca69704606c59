// Command-line front end: ingest exams, build and query the index, generate
// reports, score annotations, simulate the scheduler and run the service.

#include <CLI11.hpp>
#include <httplib.h>

#include <csignal>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "pescourse/clock.hpp"
#include "pescourse/corpus.hpp"
#include "pescourse/error.hpp"
#include "pescourse/evalkit.hpp"
#include "pescourse/genpipe.hpp"
#include "pescourse/ingest.hpp"
#include "pescourse/rerank.hpp"
#include "pescourse/retrieval.hpp"
#include "pescourse/scheduler.hpp"
#include "pescourse/service.hpp"
#include "pescourse/text_analysis.hpp"

namespace fs = std::filesystem;
using namespace pescourse;
using json = nlohmann::json;

namespace {

ExamFile load_exam(const fs::path& path, const std::string& format) {
    const std::string bytes = read_file(path);
    std::string fmt = format;
    if (fmt.empty()) fmt = (path.extension() == ".html" || path.extension() == ".htm") ? "html" : "json";
    if (fmt == "html") return parse_exam_quiz_html(bytes);
    if (fmt == "json") return parse_exam_json(bytes);
    throw Error("unknown exam format '" + fmt + "'");
}

std::map<std::string, std::string> parse_key_values(std::string_view text) {
    std::map<std::string, std::string> out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    auto trim = [](std::string s) {
        s.erase(0, s.find_first_not_of(" \t\r"));
        s.erase(s.find_last_not_of(" \t\r") + 1);
        return s;
    };
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line[0] == '#') continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("line " + std::to_string(line_no) + ": expected key=value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

std::vector<QuestionReport> load_reports(const fs::path& dir) {
    std::vector<QuestionReport> out;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) out.push_back(report_from_json(json::parse(read_file(f))));
    return out;
}

int cmd_ingest(const std::string& format, const fs::path& in, const fs::path& out, bool keep_all) {
    ExamFile exam = load_exam(in, format);
    if (!keep_all) {
        auto result = filter_questions(exam);
        for (const auto& [q, reason] : result.dropped) {
            std::cerr << "dropped " << q.id() << ": " << to_string(reason) << "\n";
        }
        exam.questions = std::move(result.kept);
    }
    write_file(out, render_exam_json(exam));
    std::cerr << "wrote " << exam.questions.size() << " questions to " << out.string() << "\n";
    return 0;
}

int cmd_index(const fs::path& corpus_path, const fs::path& synonyms, const fs::path& stopwords, const fs::path& out) {
    AnalyzerConfig config;
    if (!stopwords.empty()) config.stopwords = load_stopwords(stopwords, config);
    if (!synonyms.empty()) config.synonyms = load_synonyms(synonyms, config);
    IndexBundle bundle{load_corpus(corpus_path), {}};
    bundle.index = build_index(bundle.corpus, config);
    save_index_bundle(bundle, out);
    std::cerr << "indexed " << bundle.index.doc_count() << " documents, " << bundle.index.term_count() << " terms\n";
    return 0;
}

int cmd_retrieve(const fs::path& index_path, const std::string& query, std::size_t k) {
    const IndexBundle bundle = load_index_bundle(index_path);
    const auto hits = bundle.index.search_text(query, k);
    std::cout << "rank\tdoc_id\tscore\n";
    for (std::size_t i = 0; i < hits.size(); ++i) {
        std::cout << i + 1 << "\t" << hits[i].doc_id << "\t" << hits[i].score << "\n";
    }
    return 0;
}

struct GenerateSetup {
    std::unique_ptr<TextGenProvider> provider;
    std::unique_ptr<RelevanceScorer> scorer;
    PipelineOptions options;
    std::optional<PromptTemplates> templates;
    std::size_t width = 1;
};

GenerateSetup generate_setup(const fs::path& cfg_path, const AnalyzerConfig& analyzer) {
    GenerateSetup s;
    auto kv = cfg_path.empty() ? std::map<std::string, std::string>{} : parse_key_values(read_file(cfg_path));
    auto take = [&](const std::string& key, const std::string& fallback) {
        auto it = kv.find(key);
        if (it == kv.end()) return fallback;
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    const std::string provider = take("provider", "mock");
    const std::string endpoint = take("endpoint", "");
    const std::string model = take("model", "remote");
    s.options.params.temperature = std::stod(take("temperature", "0"));
    s.options.params.max_output_tokens = std::stoi(take("max_tokens", "1024"));
    if (auto seed = take("seed", ""); !seed.empty()) s.options.params.seed = std::stoll(seed);
    s.options.params.validate();
    const std::string scorer = take("scorer", "lexical");
    const std::string scorer_endpoint = take("scorer_endpoint", "");
    s.width = std::stoul(take("width", "1"));
    s.options.rerank.parallelism = std::stoul(take("rerank_parallelism", "1"));
    const std::string templates_dir = take("templates", "");
    const std::string version = take("template_version", "v1");
    if (!kv.empty()) throw Error("unknown provider config key '" + kv.begin()->first + "'");

    if (provider == "mock") {
        s.provider = std::make_unique<MockProvider>(analyzer);
    } else if (provider == "http") {
        if (endpoint.empty()) throw Error("provider=http needs endpoint=URL");
        HttpProviderConfig hc;
        hc.endpoint = endpoint;
        hc.model = model;
        s.provider = std::make_unique<HttpProvider>(hc);
    } else {
        throw Error("provider must be mock or http");
    }
    if (scorer == "lexical") {
        s.scorer = std::make_unique<LexicalOverlapScorer>(analyzer);
    } else if (scorer == "remote") {
        if (scorer_endpoint.empty()) throw Error("scorer=remote needs scorer_endpoint=URL");
        s.scorer = std::make_unique<RemoteScorer>(RemoteScorerConfig{scorer_endpoint});
    } else {
        throw Error("scorer must be lexical or remote");
    }
    if (!templates_dir.empty() || version != "v1") {
        s.templates = load_prompt_templates(templates_dir.empty() ? fs::path(PESCOURSE_DATA_DIR) / "prompts" : fs::path(templates_dir),
                                            version);
    }
    return s;
}

int cmd_generate(const std::vector<fs::path>& exams, const fs::path& index_path, const std::string& mode_name,
                 const fs::path& provider_cfg, const fs::path& out_dir) {
    auto variant = rerank_variant_from_string(mode_name);
    if (!variant) throw Error("--mode must be base or refined");
    const IndexBundle bundle = load_index_bundle(index_path);
    GenerateSetup setup = generate_setup(provider_cfg, bundle.index.config());
    if (setup.templates) setup.options.templates = &*setup.templates;

    std::vector<ExamQuestion> questions;
    for (const auto& p : exams) {
        auto result = filter_questions(load_exam(p, ""));
        for (const auto& [q, reason] : result.dropped) std::cerr << "skipped " << q.id() << ": " << to_string(reason) << "\n";
        questions.insert(questions.end(), result.kept.begin(), result.kept.end());
    }
    SystemClock clock;
    PipelineContext ctx{bundle.corpus, bundle.index, RerankMode::for_variant(*variant), *setup.scorer,
                        *setup.provider, clock, setup.options};
    int failures = 0;
    for (const auto& outcome : run_batch(questions, ctx, setup.width)) {
        if (!outcome.report) {
            ++failures;
            std::cerr << "failed " << outcome.question_id << ": " << outcome.error << "\n";
            continue;
        }
        write_file(out_dir / (outcome.question_id + ".json"), render_report(*outcome.report));
    }
    std::cerr << "generated " << questions.size() - failures << "/" << questions.size() << " reports\n";
    return failures == 0 ? 0 : 1;
}

int cmd_evaluate(const fs::path& reports_dir, const std::vector<fs::path>& annotation_files, const fs::path& out) {
    std::set<std::string> known;
    for (const auto& r : load_reports(reports_dir)) {
        if (r.docs.size() != kReportDocCount) throw Error("report " + r.question_id() + " does not hold 10 documents");
        known.insert(r.question_id());
    }
    std::vector<std::string> names;
    std::vector<AggregateTable> columns;
    for (const auto& f : annotation_files) {
        std::vector<FinalValues> finals;
        for (const auto& rec : parse_annotations(read_file(f))) {
            if (!known.contains(rec.question_id)) throw Error(f.string() + ": no report for " + rec.question_id);
            finals.push_back(final_values(rec));
        }
        names.push_back(f.stem().string());
        columns.push_back(aggregate(finals));
    }
    const std::string table = render_evaluation_table(names, columns);
    if (out.empty()) {
        std::cout << table;
    } else {
        write_file(out, table);
    }
    return 0;
}

int cmd_iaa(const std::vector<fs::path>& files, const fs::path& resolutions_path, const fs::path& out) {
    if (files.size() != 2) throw Error("--annotations takes exactly two files");
    const auto first = parse_annotations(read_file(files[0]));
    const auto second = parse_annotations(read_file(files[1]));
    std::map<std::string, Resolution> resolutions;
    if (!resolutions_path.empty()) {
        for (auto& r : parse_resolutions(read_file(resolutions_path))) resolutions[r.question_id] = std::move(r);
    }
    const IaaSummary summary = iaa_summary(first, second);  // validates pairing
    std::map<std::string, const AnnotationRecord*> by_q;
    for (const auto& r : second) by_q[r.question_id] = &r;
    std::vector<FinalValues> finals;
    for (const auto& a : first) {
        const AnnotationRecord& b = *by_q.at(a.question_id);
        auto it = resolutions.find(a.question_id);
        ResolvedRecord rec = it == resolutions.end() ? compare_annotations(a, b) : resolve(a, b, it->second);
        for (const auto& key : rec.unresolved_discrepancies()) {
            std::cerr << "unresolved discrepancy " << a.question_id << " " << key.name() << "\n";
        }
        finals.push_back(rec.final_values());
    }
    const std::string table = render_validation_table(aggregate(finals), summary);
    if (out.empty()) {
        std::cout << table;
    } else {
        write_file(out, table);
    }
    return 0;
}

int cmd_build_course(const std::string& id, const std::vector<fs::path>& exams, const fs::path& reports_dir,
                     const fs::path& out) {
    std::vector<ExamFile> files;
    for (const auto& p : exams) files.push_back(load_exam(p, ""));
    const Course course = assemble_course(id, files, load_reports(reports_dir));
    write_file(out, course_to_json(course).dump(2) + "\n");
    std::cerr << "course " << id << ": " << course.item_ids.size() << " items, " << course.doc_refs.size()
              << " documents\n";
    return 0;
}

httplib::Server* g_server = nullptr;

int cmd_serve(const fs::path& data, const std::string& host, int port) {
    SystemClock clock;
    auto service = LearningService::open(data, clock);
    httplib::Server server;
    mount_routes(server, *service);
    g_server = &server;
    std::signal(SIGINT, [](int) { if (g_server) g_server->stop(); });
    std::signal(SIGTERM, [](int) { if (g_server) g_server->stop(); });
    std::cerr << "listening on " << host << ":" << port << "\n";
    if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
    service->snapshot();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exam-to-course toolkit"};
    app.require_subcommand(1);

    std::string format, query, mode = "refined", course_id, host = "127.0.0.1", policy = "know";
    fs::path in, out, corpus, synonyms, stopwords, index, provider, reports, resolutions, data;
    std::vector<fs::path> exams, annotations;
    std::size_t k = 200;
    int days = 30, port = 8080;
    bool keep_all = false;
    double r_target = 0.9;

    auto* ingest = app.add_subcommand("ingest", "Parse an exam file into canonical exam JSON");
    ingest->add_option("--format", format, "json or html")->check(CLI::IsMember({"json", "html"}));
    ingest->add_option("--in", in)->required()->check(CLI::ExistingFile);
    ingest->add_option("--out", out)->required();
    ingest->add_flag("--keep-all", keep_all, "Do not drop image or invalidated questions");

    auto* idx = app.add_subcommand("index", "Build an index bundle from a corpus file");
    idx->add_option("--corpus", corpus)->required()->check(CLI::ExistingFile);
    idx->add_option("--synonyms", synonyms)->check(CLI::ExistingFile);
    idx->add_option("--stopwords", stopwords)->check(CLI::ExistingFile);
    idx->add_option("--out", out)->required();

    auto* retrieve = app.add_subcommand("retrieve", "Query an index bundle");
    retrieve->add_option("--index", index)->required()->check(CLI::ExistingFile);
    retrieve->add_option("--query", query)->required();
    retrieve->add_option("--k", k)->check(CLI::PositiveNumber);

    auto* generate = app.add_subcommand("generate", "Run the report pipeline for every kept question");
    generate->add_option("--exams", exams)->required()->check(CLI::ExistingFile);
    generate->add_option("--index", index)->required()->check(CLI::ExistingFile);
    generate->add_option("--mode", mode)->check(CLI::IsMember({"base", "refined"}));
    generate->add_option("--provider", provider, "key=value provider config")->check(CLI::ExistingFile);
    generate->add_option("--out", out)->required();

    auto* evaluate = app.add_subcommand("evaluate", "Mean and std per parameter, one column per annotation file");
    evaluate->add_option("--reports", reports)->required()->check(CLI::ExistingDirectory);
    evaluate->add_option("--annotations", annotations)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--out", out);

    auto* iaa = app.add_subcommand("iaa", "Agreement table for two annotation sets");
    iaa->add_option("--annotations", annotations)->required()->expected(2)->check(CLI::ExistingFile);
    iaa->add_option("--resolutions", resolutions)->check(CLI::ExistingFile);
    iaa->add_option("--out", out);

    auto* sim = app.add_subcommand("schedule-sim", "Trace a virtual learner");
    sim->add_option("--policy", policy)->check(CLI::IsMember({"know", "unsure", "dontknow", "mixed"}));
    sim->add_option("--days", days)->check(CLI::PositiveNumber);
    sim->add_option("--r-target", r_target)->check(CLI::Range(0.0, 1.0));

    auto* build = app.add_subcommand("build-course", "Assemble a course file from exams and reports");
    build->add_option("--id", course_id)->required();
    build->add_option("--exams", exams)->required()->check(CLI::ExistingFile);
    build->add_option("--reports", reports)->required()->check(CLI::ExistingDirectory);
    build->add_option("--out", out)->required();

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    serve->add_option("--data", data)->required()->check(CLI::ExistingDirectory);
    serve->add_option("--port", port);
    serve->add_option("--host", host);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return cmd_ingest(format, in, out, keep_all);
        if (*idx) return cmd_index(corpus, synonyms, stopwords, out);
        if (*retrieve) return cmd_retrieve(index, query, k);
        if (*generate) return cmd_generate(exams, index, mode, provider, out);
        if (*evaluate) return cmd_evaluate(reports, annotations, out);
        if (*iaa) return cmd_iaa(annotations, resolutions, out);
        if (*sim) {
            std::cout << render_trace(simulate(policy_from_name(policy), days, RetentionThreshold{r_target}));
            return 0;
        }
        if (*build) return cmd_build_course(course_id, exams, reports, out);
        if (*serve) return cmd_serve(data, host, port);
    } catch (const std::exception& e) {
        std::cerr << "error: " << describe(e) << "\n";
        return 1;
    }
    return 0;
}
