#include "pescourse/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "pescourse/error.hpp"
#include "pescourse/genpipe.hpp"
#include "pescourse/simd/kernels.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const std::optional<Score>& optional_param(const AnnotationRecord& r, Parameter p) {
    return p == Parameter::Sensitivity ? r.sensitivity : r.specificity;
}

Score required_param(const AnnotationRecord& r, Parameter p) {
    switch (p) {
        case Parameter::Credibility: return r.credibility;
        case Parameter::Accuracy: return r.accuracy;
        case Parameter::Logic: return r.logic;
        case Parameter::CompletenessDepth: return r.completeness_depth;
        case Parameter::Conciseness: return r.conciseness;
        case Parameter::Communicativeness: return r.communicativeness;
        default: break;
    }
    throw Error("parameter is not a required score");
}

Score score_from_json(const json& v, const std::string& field) {
    if (!v.is_number_integer()) throw Error("field '" + field + "' must be an integer 1..4");
    try {
        return Score(v.get<int>());
    } catch (const DomainError&) {
        throw Error("field '" + field + "' must be an integer 1..4");
    }
}

json value_to_json(const FieldValue& v) {
    return std::visit(overloaded{[](std::monostate) { return json(nullptr); },
                                 [](Score s) { return json(s.value()); },
                                 [](Abstain) { return json("abstain"); },
                                 [](RelevanceLabel l) { return json(std::string(to_string(l))); }},
                      v);
}

FieldValue value_from_json(const json& v, const FieldKey& key) {
    const std::string name = key.name();
    if (key.is_doc()) {
        if (!v.is_string()) throw Error("field '" + name + "' must be a relevance label");
        auto label = relevance_label_from_string(v.get<std::string>());
        if (!label) throw Error("field '" + name + "' has an unknown relevance label");
        return *label;
    }
    if (std::get<Parameter>(key.which) == Parameter::Prioritization && v.is_string()) {
        if (v.get<std::string>() != "abstain") throw Error("field 'prioritization' must be 1..4 or \"abstain\"");
        return Abstain{};
    }
    return score_from_json(v, name);
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        out.emplace_back(text.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return out;
}

template <typename T, typename Fn>
std::vector<T> parse_jsonl(std::string_view text, const char* what, Fn&& parse_one) {
    std::vector<T> out;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(text)) {
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        try {
            out.push_back(parse_one(json::parse(line)));
        } catch (const std::exception& e) {
            throw ParseError(std::string(what) + " line " + std::to_string(line_no) + ": " + e.what(), line_no, true);
        }
    }
    return out;
}

bool is_valid_for(const FieldKey& key, const FieldValue& v) {
    if (key.is_doc()) return std::holds_alternative<RelevanceLabel>(v);
    if (std::get<Parameter>(key.which) == Parameter::Prioritization) {
        return std::holds_alternative<Score>(v) || std::holds_alternative<Abstain>(v);
    }
    return std::holds_alternative<Score>(v);
}

// Effective value of one side after a resolution replaced a disputed field.
const FieldValue& effective(const FieldOutcome& f, const FieldValue& side) {
    return f.resolution ? *f.resolution : side;
}

std::optional<double> merge_scores(const FieldValue& a, const FieldValue& b) {
    const auto* sa = std::get_if<Score>(&a);
    const auto* sb = std::get_if<Score>(&b);
    if (sa && sb) return (sa->value() + sb->value()) / 2.0;
    if (sa) return sa->value();
    if (sb) return sb->value();
    return std::nullopt;
}

Metric metric_for(Parameter p) {
    switch (p) {
        case Parameter::Sensitivity: return Metric::Sensitivity;
        case Parameter::Specificity: return Metric::Specificity;
        case Parameter::Credibility: return Metric::Credibility;
        case Parameter::Accuracy: return Metric::Accuracy;
        case Parameter::Logic: return Metric::Logic;
        case Parameter::CompletenessDepth: return Metric::CompletenessDepth;
        case Parameter::Conciseness: return Metric::Conciseness;
        case Parameter::Communicativeness: return Metric::Communicativeness;
        case Parameter::Prioritization: return Metric::Prioritization;
    }
    return Metric::Credibility;
}

void count(AgreementCounts& c, AgreementClass cls) {
    switch (cls) {
        case AgreementClass::TIAA: ++c.tiaa; break;
        case AgreementClass::PIAA: ++c.piaa; break;
        case AgreementClass::Discrepancy: ++c.discrepancy; break;
        case AgreementClass::NotApplicable: break;
    }
}

std::string percent(std::size_t num, std::size_t den) {
    if (den == 0) return "n/a";
    return std::to_string(display_percent(static_cast<double>(num) / static_cast<double>(den))) + "%";
}

}  // namespace

Score::Score(int value) : value_(value) {
    if (value < 1 || value > 4) throw DomainError("score must be in 1..4, got " + std::to_string(value));
}

std::string_view to_string(RelevanceLabel label) {
    switch (label) {
        case RelevanceLabel::Complete: return "Complete";
        case RelevanceLabel::Partial: return "Partial";
        case RelevanceLabel::Irrelevant: return "Irrelevant";
    }
    return "Irrelevant";
}

std::optional<RelevanceLabel> relevance_label_from_string(std::string_view s) {
    for (auto l : {RelevanceLabel::Complete, RelevanceLabel::Partial, RelevanceLabel::Irrelevant}) {
        if (to_string(l) == s) return l;
    }
    return std::nullopt;
}

std::string_view to_string(AgreementClass c) {
    switch (c) {
        case AgreementClass::TIAA: return "TIAA";
        case AgreementClass::PIAA: return "PIAA";
        case AgreementClass::Discrepancy: return "Discrepancy";
        case AgreementClass::NotApplicable: return "NotApplicable";
    }
    return "NotApplicable";
}

std::size_t AnnotationRecord::complete_count() const {
    return static_cast<std::size_t>(std::count(doc_labels.begin(), doc_labels.end(), RelevanceLabel::Complete));
}

std::size_t AnnotationRecord::partial_count() const {
    return static_cast<std::size_t>(std::count(doc_labels.begin(), doc_labels.end(), RelevanceLabel::Partial));
}

std::string_view parameter_key(Parameter p) {
    switch (p) {
        case Parameter::Sensitivity: return "sensitivity";
        case Parameter::Specificity: return "specificity";
        case Parameter::Credibility: return "credibility";
        case Parameter::Accuracy: return "accuracy";
        case Parameter::Logic: return "logic";
        case Parameter::CompletenessDepth: return "completeness_depth";
        case Parameter::Conciseness: return "conciseness";
        case Parameter::Communicativeness: return "communicativeness";
        case Parameter::Prioritization: return "prioritization";
    }
    return "";
}

std::optional<Parameter> parameter_from_key(std::string_view key) {
    for (auto p : kAllParameters) {
        if (parameter_key(p) == key) return p;
    }
    return std::nullopt;
}

std::string FieldKey::name() const {
    if (is_doc()) return "doc_" + std::to_string(std::get<std::size_t>(which) + 1);
    return std::string(parameter_key(std::get<Parameter>(which)));
}

std::optional<FieldKey> FieldKey::from_name(std::string_view name) {
    if (name.starts_with("doc_")) {
        auto digits = name.substr(4);
        std::size_t n = 0;
        if (digits.empty() || digits.size() > 2) return std::nullopt;
        for (char c : digits) {
            if (c < '0' || c > '9') return std::nullopt;
            n = n * 10 + static_cast<std::size_t>(c - '0');
        }
        if (n < 1 || n > kReportDocCount) return std::nullopt;
        return FieldKey::doc(n - 1);
    }
    if (auto p = parameter_from_key(name)) return FieldKey::param(*p);
    return std::nullopt;
}

json annotation_to_json(const AnnotationRecord& r) {
    json labels = json::array();
    for (auto l : r.doc_labels) labels.push_back(std::string(to_string(l)));
    json j{{"question_id", r.question_id},
           {"annotator_id", r.annotator_id},
           {"sensitivity", r.sensitivity ? json(r.sensitivity->value()) : json(nullptr)},
           {"specificity", r.specificity ? json(r.specificity->value()) : json(nullptr)},
           {"doc_labels", labels},
           {"credibility", r.credibility.value()},
           {"accuracy", r.accuracy.value()},
           {"logic", r.logic.value()},
           {"completeness_depth", r.completeness_depth.value()},
           {"conciseness", r.conciseness.value()},
           {"communicativeness", r.communicativeness.value()}};
    j["prioritization"] = value_to_json(std::visit([](auto v) -> FieldValue { return v; }, r.prioritization));
    return j;
}

AnnotationRecord annotation_from_json(const json& j) {
    if (!j.is_object()) throw Error("annotation must be a JSON object");
    AnnotationRecord r;
    auto str = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
            throw Error(std::string("field '") + key + "' must be a non-empty string");
        }
        return j[key].get<std::string>();
    };
    r.question_id = str("question_id");
    r.annotator_id = str("annotator_id");
    for (auto p : {Parameter::Sensitivity, Parameter::Specificity}) {
        const char* key = parameter_key(p).data();
        if (j.contains(key) && !j[key].is_null()) {
            (p == Parameter::Sensitivity ? r.sensitivity : r.specificity) = score_from_json(j[key], key);
        }
    }
    if (!j.contains("doc_labels") || !j["doc_labels"].is_array() || j["doc_labels"].size() != kReportDocCount) {
        throw Error("field 'doc_labels' must hold exactly 10 labels");
    }
    for (std::size_t i = 0; i < kReportDocCount; ++i) {
        r.doc_labels[i] = std::get<RelevanceLabel>(value_from_json(j["doc_labels"][i], FieldKey::doc(i)));
    }
    auto req = [&](Parameter p) {
        const std::string key(parameter_key(p));
        if (!j.contains(key)) throw Error("missing field '" + key + "'");
        return score_from_json(j[key], key);
    };
    r.credibility = req(Parameter::Credibility);
    r.accuracy = req(Parameter::Accuracy);
    r.logic = req(Parameter::Logic);
    r.completeness_depth = req(Parameter::CompletenessDepth);
    r.conciseness = req(Parameter::Conciseness);
    r.communicativeness = req(Parameter::Communicativeness);
    if (!j.contains("prioritization")) throw Error("missing field 'prioritization'");
    auto pv = value_from_json(j["prioritization"], FieldKey::param(Parameter::Prioritization));
    if (auto* s = std::get_if<Score>(&pv)) {
        r.prioritization = *s;
    } else {
        r.prioritization = Abstain{};
    }
    return r;
}

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl) {
    return parse_jsonl<AnnotationRecord>(jsonl, "annotation", [](const json& j) { return annotation_from_json(j); });
}

AgreementClass classify_score_pair(Score a, Score b) {
    if (a == b) return AgreementClass::TIAA;
    if (a.low() == b.low()) return AgreementClass::PIAA;
    return AgreementClass::Discrepancy;
}

AgreementClass classify_relevance_pair(RelevanceLabel a, RelevanceLabel b) {
    if (a == b) return AgreementClass::TIAA;
    if (a == RelevanceLabel::Irrelevant || b == RelevanceLabel::Irrelevant) return AgreementClass::Discrepancy;
    return AgreementClass::PIAA;
}

AgreementClass classify_prioritization_pair(const PrioritizationRating& a, const PrioritizationRating& b) {
    const bool a_abstains = std::holds_alternative<Abstain>(a);
    const bool b_abstains = std::holds_alternative<Abstain>(b);
    if (a_abstains && b_abstains) return AgreementClass::TIAA;
    if (a_abstains != b_abstains) return AgreementClass::Discrepancy;
    return classify_score_pair(std::get<Score>(a), std::get<Score>(b));
}

FieldValue field_value(const AnnotationRecord& r, const FieldKey& key) {
    if (key.is_doc()) return r.doc_labels.at(std::get<std::size_t>(key.which));
    const Parameter p = std::get<Parameter>(key.which);
    if (p == Parameter::Sensitivity || p == Parameter::Specificity) {
        const auto& opt = optional_param(r, p);
        return opt ? FieldValue(*opt) : FieldValue(std::monostate{});
    }
    if (p == Parameter::Prioritization) {
        return std::visit([](auto v) -> FieldValue { return v; }, r.prioritization);
    }
    return required_param(r, p);
}

std::string to_display(const FieldValue& v) { return value_to_json(v).dump(); }

std::vector<FieldKey> all_fields() {
    std::vector<FieldKey> keys;
    for (auto p : kAllParameters) keys.push_back(FieldKey::param(p));
    for (std::size_t i = 0; i < kReportDocCount; ++i) keys.push_back(FieldKey::doc(i));
    return keys;
}

AgreementClass classify_field(const FieldKey& key, const FieldValue& a, const FieldValue& b) {
    if (key.is_doc()) return classify_relevance_pair(std::get<RelevanceLabel>(a), std::get<RelevanceLabel>(b));
    const Parameter p = std::get<Parameter>(key.which);
    if (p == Parameter::Prioritization) {
        auto to_rating = [](const FieldValue& v) -> PrioritizationRating {
            if (const auto* s = std::get_if<Score>(&v)) return *s;
            return Abstain{};
        };
        return classify_prioritization_pair(to_rating(a), to_rating(b));
    }
    const auto* sa = std::get_if<Score>(&a);
    const auto* sb = std::get_if<Score>(&b);
    if (!sa || !sb) return AgreementClass::NotApplicable;
    return classify_score_pair(*sa, *sb);
}

json resolution_to_json(const Resolution& r) {
    json fields = json::object();
    for (const auto& [key, value] : r.choices) fields[key.name()] = value_to_json(value);
    return json{{"question_id", r.question_id}, {"resolver_id", r.resolver_id}, {"fields", fields}};
}

Resolution resolution_from_json(const json& j) {
    if (!j.is_object()) throw Error("resolution must be a JSON object");
    Resolution r;
    r.question_id = j.at("question_id").get<std::string>();
    r.resolver_id = j.at("resolver_id").get<std::string>();
    if (r.resolver_id.empty()) throw Error("resolver_id must be non-empty");
    for (auto& [name, value] : j.at("fields").items()) {
        auto key = FieldKey::from_name(name);
        if (!key) throw Error("unknown field '" + name + "'");
        r.choices[*key] = value_from_json(value, *key);
    }
    return r;
}

std::vector<Resolution> parse_resolutions(std::string_view jsonl) {
    return parse_jsonl<Resolution>(jsonl, "resolution", [](const json& j) { return resolution_from_json(j); });
}

const FieldOutcome& ResolvedRecord::field(const FieldKey& key) const {
    for (const auto& f : fields) {
        if (f.key == key) return f;
    }
    throw Error("no such field: " + key.name());
}

std::vector<FieldKey> ResolvedRecord::resolved_fields() const {
    std::vector<FieldKey> out;
    for (const auto& f : fields) {
        if (f.resolution) out.push_back(f.key);
    }
    return out;
}

std::vector<FieldKey> ResolvedRecord::unresolved_discrepancies() const {
    std::vector<FieldKey> out;
    for (const auto& f : fields) {
        if (f.agreement == AgreementClass::Discrepancy && !f.resolution) out.push_back(f.key);
    }
    return out;
}

FinalValues ResolvedRecord::final_values() const {
    FinalValues out;
    out.question_id = question_id;
    std::size_t complete_a = 0, complete_b = 0, partial_a = 0, partial_b = 0;
    for (const auto& f : fields) {
        const FieldValue& a = effective(f, f.a);
        const FieldValue& b = effective(f, f.b);
        if (f.key.is_doc()) {
            auto la = std::get<RelevanceLabel>(a);
            auto lb = std::get<RelevanceLabel>(b);
            complete_a += la == RelevanceLabel::Complete;
            complete_b += lb == RelevanceLabel::Complete;
            partial_a += la == RelevanceLabel::Partial;
            partial_b += lb == RelevanceLabel::Partial;
            continue;
        }
        if (auto merged = merge_scores(a, b)) out.params[std::get<Parameter>(f.key.which)] = *merged;
    }
    out.complete_docs = (complete_a + complete_b) / 2.0;
    out.partial_docs = (partial_a + partial_b) / 2.0;
    out.total_relevant = out.complete_docs + out.partial_docs;
    return out;
}

ResolvedRecord compare_annotations(const AnnotationRecord& a, const AnnotationRecord& b) {
    if (a.question_id != b.question_id) {
        throw ResolutionError(ResolutionError::Kind::Mismatch, "annotations are for different questions");
    }
    if (a.annotator_id == b.annotator_id) {
        throw ResolutionError(ResolutionError::Kind::Mismatch, "both annotations come from " + a.annotator_id);
    }
    ResolvedRecord out;
    out.question_id = a.question_id;
    out.annotator_a = a.annotator_id;
    out.annotator_b = b.annotator_id;
    for (const auto& key : all_fields()) {
        FieldOutcome f{key, AgreementClass::NotApplicable, field_value(a, key), field_value(b, key), std::nullopt};
        f.agreement = classify_field(key, f.a, f.b);
        out.fields.push_back(std::move(f));
    }
    return out;
}

ResolvedRecord resolve(const AnnotationRecord& a, const AnnotationRecord& b, const Resolution& resolution) {
    ResolvedRecord out = compare_annotations(a, b);
    if (resolution.resolver_id == a.annotator_id || resolution.resolver_id == b.annotator_id) {
        throw ResolutionError(ResolutionError::Kind::SelfResolve,
                              "resolver " + resolution.resolver_id + " already annotated this question");
    }
    if (!resolution.question_id.empty() && resolution.question_id != out.question_id) {
        throw ResolutionError(ResolutionError::Kind::Mismatch, "resolution is for a different question");
    }
    for (const auto& [key, value] : resolution.choices) {
        auto it = std::find_if(out.fields.begin(), out.fields.end(), [&](const FieldOutcome& f) { return f.key == key; });
        if (it == out.fields.end() || it->agreement != AgreementClass::Discrepancy) {
            throw ResolutionError(ResolutionError::Kind::NotInDispute, key.name() + " is not in dispute");
        }
        if (!is_valid_for(key, value)) {
            throw ResolutionError(ResolutionError::Kind::Mismatch, "invalid resolved value for " + key.name());
        }
        it->resolution = value;
    }
    out.resolver = resolution.resolver_id;
    return out;
}

ResolvedRecord resolve(const QuestionReport& report, const AnnotationRecord& a, const AnnotationRecord& b,
                       const Resolution& resolution) {
    if (a.question_id != report.question_id()) {
        throw ResolutionError(ResolutionError::Kind::Mismatch, "annotation does not belong to this report");
    }
    if (report.docs.size() != kReportDocCount) {
        throw ResolutionError(ResolutionError::Kind::Mismatch, "report does not hold exactly 10 documents");
    }
    return resolve(a, b, resolution);
}

FinalValues final_values(const AnnotationRecord& r) {
    FinalValues out;
    out.question_id = r.question_id;
    for (auto p : kAllParameters) {
        auto v = field_value(r, FieldKey::param(p));
        if (const auto* s = std::get_if<Score>(&v)) out.params[p] = s->value();
    }
    out.complete_docs = static_cast<double>(r.complete_count());
    out.partial_docs = static_cast<double>(r.partial_count());
    out.total_relevant = static_cast<double>(r.total_relevant());
    return out;
}

std::string_view metric_label(Metric m) {
    switch (m) {
        case Metric::Sensitivity: return "Sensitivity (1–4)";
        case Metric::Specificity: return "Specificity (1–4)";
        case Metric::CompleteDocs: return "Completely relevant docs (/10)";
        case Metric::PartialDocs: return "Partially relevant docs (/10)";
        case Metric::RelevantDocs: return "Total relevant docs (/10)";
        case Metric::Credibility: return "Credibility (1–4)";
        case Metric::Accuracy: return "Accuracy (1–4)";
        case Metric::Logic: return "Logic (1–4)";
        case Metric::CompletenessDepth: return "Completeness/Depth (1–4)";
        case Metric::Conciseness: return "Conciseness (1–4)";
        case Metric::Communicativeness: return "Communicativeness/Readability (1–4)";
        case Metric::Prioritization: return "Prioritization (1–4)";
    }
    return "";
}

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) throw AggregateError("cannot aggregate an empty series");
    const auto& k = simd::active_kernels();
    const double n = static_cast<double>(values.size());
    const double mean = k.sum(values) / n;
    return {mean, std::sqrt(k.sum_sq_dev(values, mean) / n), values.size()};
}

AggregateTable aggregate(const std::vector<FinalValues>& records) {
    if (records.empty()) throw AggregateError("no records to aggregate");
    std::map<Metric, std::vector<double>> series;
    for (const auto& r : records) {
        for (const auto& [p, v] : r.params) series[metric_for(p)].push_back(v);
        series[Metric::CompleteDocs].push_back(r.complete_docs);
        series[Metric::PartialDocs].push_back(r.partial_docs);
        series[Metric::RelevantDocs].push_back(r.total_relevant);
    }
    AggregateTable table;
    for (const auto& [m, values] : series) table.rows[m] = mean_std(values);
    return table;
}

double AgreementCounts::tiaa_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(tiaa) / static_cast<double>(total());
}
double AgreementCounts::piaa_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(piaa) / static_cast<double>(total());
}
double AgreementCounts::discrepancy_fraction() const {
    return total() == 0 ? 0.0 : static_cast<double>(discrepancy) / static_cast<double>(total());
}

IaaSummary iaa_summary(const std::vector<ResolvedRecord>& pairs) {
    IaaSummary out;
    out.question_pairs = pairs.size();
    for (const auto& rec : pairs) {
        for (const auto& f : rec.fields) {
            if (f.agreement == AgreementClass::NotApplicable) continue;
            const Metric m = f.key.is_doc() ? Metric::RelevantDocs : metric_for(std::get<Parameter>(f.key.which));
            count(out.rows[m], f.agreement);
        }
    }
    return out;
}

IaaSummary iaa_summary(const std::vector<AnnotationRecord>& first, const std::vector<AnnotationRecord>& second) {
    std::map<std::string, const AnnotationRecord*> by_question;
    for (const auto& r : second) {
        if (!by_question.emplace(r.question_id, &r).second) {
            throw IaaError("question " + r.question_id + " appears twice in the second annotation set");
        }
    }
    std::set<std::string> seen;
    std::vector<ResolvedRecord> pairs;
    for (const auto& r : first) {
        if (!seen.insert(r.question_id).second) {
            throw IaaError("question " + r.question_id + " appears twice in the first annotation set");
        }
        auto it = by_question.find(r.question_id);
        if (it == by_question.end()) throw IaaError("question " + r.question_id + " missing from the second set");
        try {
            pairs.push_back(compare_annotations(r, *it->second));
        } catch (const ResolutionError& e) {
            throw IaaError(std::string("cannot pair annotations: ") + e.what());
        }
    }
    if (seen.size() != by_question.size()) {
        for (const auto& [q, rec] : by_question) {
            if (!seen.contains(q)) throw IaaError("question " + q + " missing from the first set");
        }
    }
    return iaa_summary(pairs);
}

long display_percent(double fraction) { return std::lround(fraction * 100.0); }

std::string format_mean_std(const MeanStd& m) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", m.mean, m.stddev);
    return buf;
}

std::string render_evaluation_table(const std::vector<std::string>& column_names,
                                    const std::vector<AggregateTable>& columns) {
    if (column_names.size() != columns.size()) throw Error("column names and tables differ in count");
    std::string out = "| Parameter |";
    std::string rule = "|---|";
    for (const auto& name : column_names) {
        out += " " + name + " |";
        rule += "---|";
    }
    out += "\n" + rule + "\n";
    for (auto m : {Metric::Sensitivity, Metric::Specificity, Metric::CompleteDocs, Metric::PartialDocs,
                   Metric::RelevantDocs, Metric::Credibility, Metric::Accuracy, Metric::Logic,
                   Metric::CompletenessDepth, Metric::Conciseness, Metric::Communicativeness,
                   Metric::Prioritization}) {
        bool any = std::any_of(columns.begin(), columns.end(), [&](const AggregateTable& t) { return t.rows.contains(m); });
        if (!any) continue;
        out += "| " + std::string(metric_label(m)) + " |";
        for (const auto& t : columns) {
            auto it = t.rows.find(m);
            out += " " + (it == t.rows.end() ? std::string("n/a") : format_mean_std(it->second)) + " |";
        }
        out += "\n";
    }
    return out;
}

std::string render_validation_table(const AggregateTable& scores, const IaaSummary& agreement) {
    std::string out = "| Parameter | Score | TIAA | PIAA |\n|---|---|---|---|\n";
    for (auto m : {Metric::Sensitivity, Metric::Specificity, Metric::RelevantDocs, Metric::Credibility,
                   Metric::Accuracy, Metric::Logic, Metric::CompletenessDepth, Metric::Conciseness,
                   Metric::Communicativeness, Metric::Prioritization}) {
        auto score = scores.rows.find(m);
        auto agree = agreement.rows.find(m);
        if (score == scores.rows.end() && agree == agreement.rows.end()) continue;
        const std::string label = m == Metric::RelevantDocs ? "Relevant docs (/10)" : std::string(metric_label(m));
        const std::string score_text = score == scores.rows.end() ? "n/a" : format_mean_std(score->second);
        const AgreementCounts counts = agree == agreement.rows.end() ? AgreementCounts{} : agree->second;
        out += "| " + label + " | " + score_text + " | " + percent(counts.tiaa, counts.total()) + " | " +
               percent(counts.piaa, counts.total()) + " |\n";
    }
    return out;
}

}  // namespace pescourse
