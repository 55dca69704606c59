#include "fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

namespace fixtures {

CorpusDocument make_doc(const std::string& id, const std::string& paragraph, SourceKind kind, const std::string& date) {
    CorpusDocument d;
    d.doc_id = id;
    d.title = "Title of " + id;
    d.source_kind = kind;
    d.publication_date = date;
    d.paragraph = paragraph;
    d.snippet = make_snippet(paragraph);
    d.url_or_locator = "library://" + id;
    return d;
}

TokenCorpus random_token_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t vocab) {
    std::vector<double> weights(vocab);
    for (std::size_t i = 0; i < vocab; ++i) weights[i] = 1.0 / static_cast<double>(i + 1);
    std::discrete_distribution<std::size_t> term(weights.begin(), weights.end());
    std::uniform_int_distribution<int> length(1, 120);

    std::vector<std::size_t> order(docs);
    for (std::size_t i = 0; i < docs; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    TokenCorpus out;
    for (std::size_t i = 0; i < docs; ++i) {
        std::string id = "d" + std::to_string(1000 + order[i]);
        std::vector<std::string> toks;
        std::string paragraph;
        const int len = length(rng);
        for (int t = 0; t < len; ++t) {
            toks.push_back("w" + std::to_string(term(rng)));
            if (!paragraph.empty()) paragraph += ' ';
            paragraph += toks.back();
        }
        out.store.add(make_doc(id, paragraph));
        out.ids.push_back(std::move(id));
        out.tokens.push_back(std::move(toks));
    }
    return out;
}

WeightedTerms random_query(std::mt19937_64& rng, std::size_t vocab) {
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<std::size_t> term(0, vocab + 3);  // a few unknown terms
    std::bernoulli_distribution synonym(0.3);
    WeightedTerms q;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const std::string t = "w" + std::to_string(term(rng));
        const double w = synonym(rng) ? kSynonymWeight : kLiteralWeight;
        auto [it, inserted] = q.emplace(t, w);
        if (!inserted) it->second = std::max(it->second, w);
    }
    return q;
}

std::vector<ScoredDoc> oracle_bm25(const TokenCorpus& corpus, const WeightedTerms& query, std::size_t k, double k1,
                                   double b) {
    const std::size_t n = corpus.tokens.size();
    double total = 0.0;
    for (const auto& t : corpus.tokens) total += static_cast<double>(t.size());
    const double avg = total / static_cast<double>(n);

    std::vector<double> score(n, 0.0);
    for (const auto& [term, weight] : query) {
        std::vector<std::size_t> tf(n, 0);
        std::size_t df = 0;
        for (std::size_t d = 0; d < n; ++d) {
            tf[d] = static_cast<std::size_t>(std::count(corpus.tokens[d].begin(), corpus.tokens[d].end(), term));
            if (tf[d] > 0) ++df;
        }
        if (df == 0) continue;
        const double idf =
            std::log(1.0 + (static_cast<double>(n) - static_cast<double>(df) + 0.5) / (static_cast<double>(df) + 0.5));
        for (std::size_t d = 0; d < n; ++d) {
            if (tf[d] == 0) continue;
            const double f = static_cast<double>(tf[d]);
            const double len = static_cast<double>(corpus.tokens[d].size());
            score[d] += weight * idf * (f * (k1 + 1.0)) / (f + k1 * (1.0 - b + b * len / avg));
        }
    }
    std::vector<ScoredDoc> out;
    for (std::size_t d = 0; d < n; ++d) {
        if (score[d] > 0.0) out.push_back({corpus.ids[d], score[d]});
    }
    std::sort(out.begin(), out.end(), [](const ScoredDoc& x, const ScoredDoc& y) {
        if (x.score != y.score) return x.score > y.score;
        return x.doc_id < y.doc_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

ExamFile synthetic_exam(const std::string& exam_id, int questions, std::uint64_t seed) {
    static const char* stems[] = {
        "Który lek jest leczeniem pierwszego rzutu w nadciśnieniu?",
        "Najczęstszą przyczyną zawału serca jest:",
        "Which value <5 mmol/L & \"normal\" range applies?",
        "Wskaż zdanie prawdziwe dotyczące żółtaczki:",
        "Pacjent lat 64 z dusznością; najbardziej prawdopodobne rozpoznanie to:",
        "O'Brien's sign is seen in which condition?",
    };
    static const char* answers[] = {"ACE-inhibitor", "Beta-bloker", "Diuretyk tiazydowy", "Ca²⁺ antagonist",
                                    "Żadne z powyższych", "Warfaryna", "Heparyna <LMWH>", "Aspiryna & klopidogrel",
                                    "Digoksyna", "Amiodaron"};
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution image(0.1), invalid(0.08);
    std::uniform_int_distribution<int> pick(0, 9), letter(0, 4);
    ExamFile exam;
    exam.exam_id = exam_id;
    exam.specialty = "Kardiologia";
    exam.session = "2022 jesień";
    for (int i = 1; i <= questions; ++i) {
        ExamQuestion q;
        q.exam_id = exam.exam_id;
        q.specialty = exam.specialty;
        q.session = exam.session;
        q.question_no = i;
        q.stem = std::string(stems[i % 6]) + " (pytanie " + std::to_string(i) + ")";
        for (int c = 0; c < 5; ++c) {
            q.choices.push_back({kChoiceLetters[c], std::string(answers[pick(rng)]) + " " + std::to_string(c + 1)});
        }
        q.correct = kChoiceLetters[letter(rng)];
        q.has_image = image(rng);
        q.invalidated = invalid(rng);
        exam.questions.push_back(std::move(q));
    }
    return exam;
}

TopicWorld topic_world(int questions, int per_topic) {
    TopicWorld w;
    w.exam.exam_id = "synth";
    w.exam.specialty = "Synthetic";
    w.exam.session = "2024";
    for (int t = 0; t < questions; ++t) {
        const std::string topic = "topic" + std::to_string(t);
        w.topics.push_back(topic);
        for (int j = 0; j < per_topic; ++j) {
            std::string para;
            for (int r = 0; r <= j % 4; ++r) para += topic + " ";
            para += "finding" + std::to_string(t) + "x" + std::to_string(j) + " evidence lorem" + std::to_string(j) +
                    " ipsum dolor sit amet";
            w.store.add(make_doc("t" + std::to_string(t) + "d" + std::to_string(j), para,
                                 static_cast<SourceKind>(j % 5), "20" + std::to_string(10 + j % 10) + "-05-01"));
        }
        ExamQuestion q;
        q.exam_id = w.exam.exam_id;
        q.specialty = w.exam.specialty;
        q.session = w.exam.session;
        q.question_no = t + 1;
        q.stem = "Which option fits " + topic + " best?";
        for (int c = 0; c < 5; ++c) q.choices.push_back({kChoiceLetters[c], "Option " + std::to_string(c + 1)});
        q.correct = kChoiceLetters[t % 5];
        w.exam.questions.push_back(std::move(q));
    }
    w.index = build_index(w.store, AnalyzerConfig{});
    return w;
}

std::vector<double> RecordingScorer::score(std::string_view query, std::span<const Passage> passages) const {
    ++calls_;
    std::vector<double> out;
    for (const auto& p : passages) out.push_back(lexical_overlap_score(query, p.text));
    std::lock_guard lock(mutex_);
    seen_.insert(seen_.end(), passages.begin(), passages.end());
    return out;
}

std::vector<Passage> RecordingScorer::seen() const {
    std::lock_guard lock(mutex_);
    return seen_;
}

std::string GhostCitingProvider::generate(const std::string& prompt, const GenParams& params) const {
    std::string body = inner_.generate(prompt, params);
    if (!prompt.starts_with("TASK: comment")) return body;
    std::vector<std::string> supplied;
    for (std::size_t pos = 0; (pos = prompt.find("\n[doc:", pos)) != std::string::npos;) {
        pos += 6;
        supplied.push_back(prompt.substr(pos, prompt.find(']', pos) - pos));
    }
    switch (style_) {
        case 0: return body + " See also [doc:ghost-zz].";
        case 1: return "The answer follows from [doc:ghost-zz].";
        case 2:
            for (const auto& id : corpus_ids_) {
                if (std::find(supplied.begin(), supplied.end(), id) == supplied.end()) {
                    return body + " Compare [doc:" + id + "].";
                }
            }
            return body + " [doc:none-left]";
        case 3: {
            std::string upper = supplied.at(0);
            for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return body + " [doc:" + upper + "]";
        }
        default: return body + " [doc:" + supplied.at(0) + "x]";
    }
}

FieldValue random_value_for(std::mt19937_64& rng, const FieldKey& key) {
    std::uniform_int_distribution<int> score(1, 4), label(0, 2);
    if (key.is_doc()) return static_cast<RelevanceLabel>(label(rng));
    if (std::get<Parameter>(key.which) == Parameter::Prioritization && std::bernoulli_distribution(0.3)(rng)) return Abstain{};
    return Score(score(rng));
}

namespace {

void set_field(AnnotationRecord& r, const FieldKey& key, const FieldValue& v) {
    if (key.is_doc()) {
        r.doc_labels[std::get<std::size_t>(key.which)] = std::get<RelevanceLabel>(v);
        return;
    }
    const auto* s = std::get_if<Score>(&v);
    switch (std::get<Parameter>(key.which)) {
        case Parameter::Sensitivity: r.sensitivity = s ? std::optional<Score>(*s) : std::nullopt; break;
        case Parameter::Specificity: r.specificity = s ? std::optional<Score>(*s) : std::nullopt; break;
        case Parameter::Credibility: r.credibility = *s; break;
        case Parameter::Accuracy: r.accuracy = *s; break;
        case Parameter::Logic: r.logic = *s; break;
        case Parameter::CompletenessDepth: r.completeness_depth = *s; break;
        case Parameter::Conciseness: r.conciseness = *s; break;
        case Parameter::Communicativeness: r.communicativeness = *s; break;
        case Parameter::Prioritization:
            if (s) {
                r.prioritization = *s;
            } else {
                r.prioritization = Abstain{};
            }
            break;
    }
}

}  // namespace

AnnotationRecord random_annotation(std::mt19937_64& rng, const std::string& question_id, const std::string& annotator) {
    AnnotationRecord r;
    r.question_id = question_id;
    r.annotator_id = annotator;
    std::bernoulli_distribution rated(0.5);
    for (const auto& key : all_fields()) {
        if ((key == FieldKey::param(Parameter::Sensitivity) || key == FieldKey::param(Parameter::Specificity)) &&
            !rated(rng)) {
            continue;
        }
        set_field(r, key, random_value_for(rng, key));
    }
    return r;
}

AnnotationRecord perturb(std::mt19937_64& rng, const AnnotationRecord& base, const std::string& annotator, double flip) {
    AnnotationRecord r = base;
    r.annotator_id = annotator;
    std::bernoulli_distribution change(flip);
    for (const auto& key : all_fields()) {
        if (!change(rng)) continue;
        // Optional scores keep their rated/unrated state so both sides stay comparable.
        if (std::holds_alternative<std::monostate>(field_value(r, key))) continue;
        FieldValue v = random_value_for(rng, key);
        if ((key == FieldKey::param(Parameter::Sensitivity) || key == FieldKey::param(Parameter::Specificity)) &&
            std::holds_alternative<Abstain>(v)) {
            continue;
        }
        set_field(r, key, v);
    }
    return r;
}

Course small_course(const std::string& course_id, int n) {
    ExamFile exam = synthetic_exam(course_id + "-exam", n, 99);
    for (auto& q : exam.questions) q.has_image = q.invalidated = false;
    std::vector<QuestionReport> reports;
    for (const auto& q : exam.questions) {
        QuestionReport r;
        r.question = q;
        r.query = {q.id(), "query " + q.id(), {}};
        for (int d = 0; d < 10; ++d) {
            const std::string id = q.id() + "-doc" + std::to_string(d);
            r.docs.push_back({make_doc(id, "Paragraph about " + q.id() + " number " + std::to_string(d)), 1.0, 0.5});
        }
        r.comment.question_id = q.id();
        r.comment.body = "Answer " + std::string(1, q.correct) + " per [doc:" + r.docs[0].doc.doc_id + "] and [doc:" +
                         r.docs[1].doc.doc_id + "].";
        r.comment.citations = extract_citations(r.comment.body);
        r.comment.provider_meta.model = "mock";
        reports.push_back(std::move(r));
    }
    return assemble_course(course_id, {exam}, reports);
}

}  // namespace fixtures
