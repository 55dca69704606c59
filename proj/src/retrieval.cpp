#include "pescourse/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pescourse/error.hpp"
#include "pescourse/simd/kernels.hpp"

namespace pescourse {

using json = nlohmann::json;

void Bm25Params::validate() const {
    if (!(k1 >= 0.0)) throw DomainError("BM25 k1 must be >= 0");
    if (!(b >= 0.0 && b <= 1.0)) throw DomainError("BM25 b must lie in [0, 1]");
}

double bm25_idf(std::size_t doc_count, std::size_t doc_freq) {
    const double n = static_cast<double>(doc_count);
    const double df = static_cast<double>(doc_freq);
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

const PostingList* InvertedIndex::postings(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

std::uint32_t InvertedIndex::doc_length(const std::string& doc_id) const {
    auto it = std::lower_bound(doc_ids_.begin(), doc_ids_.end(), doc_id);
    if (it == doc_ids_.end() || *it != doc_id) throw Error("doc_id not indexed: " + doc_id);
    return doc_lengths_[static_cast<std::size_t>(it - doc_ids_.begin())];
}

InvertedIndex build_index(const CorpusStore& store, const AnalyzerConfig& config) {
    InvertedIndex index;
    index.config_ = config;

    std::vector<const CorpusDocument*> ordered;
    ordered.reserve(store.size());
    for (const auto& doc : store) ordered.push_back(&doc);
    std::sort(ordered.begin(), ordered.end(),
              [](const CorpusDocument* a, const CorpusDocument* b) { return a->doc_id < b->doc_id; });

    std::uint64_t total_length = 0;
    for (std::uint32_t num = 0; num < ordered.size(); ++num) {
        const auto tokens = analyze(ordered[num]->paragraph, config);
        std::map<std::string, std::uint32_t> counts;
        for (const auto& t : tokens) ++counts[t];
        const auto length = static_cast<std::uint32_t>(tokens.size());
        index.doc_ids_.push_back(ordered[num]->doc_id);
        index.doc_lengths_.push_back(length);
        total_length += length;
        // Documents are visited in ascending order, so each list stays sorted.
        for (const auto& [term, tf] : counts) {
            auto& list = index.postings_[term];
            list.docs.push_back(num);
            list.tf.push_back(tf);
            list.lengths.push_back(length);
        }
    }
    index.avg_doc_length_ =
        index.doc_ids_.empty() ? 0.0 : static_cast<double>(total_length) / static_cast<double>(index.doc_ids_.size());
    return index;
}

std::vector<ScoredDoc> InvertedIndex::search(const WeightedTerms& query, std::size_t k,
                                             const Bm25Params& params) const {
    params.validate();
    if (k == 0) throw DomainError("search requires k >= 1");
    if (doc_ids_.empty() || query.empty()) return {};

    const auto& kernels = simd::active_kernels();
    // A corpus of empty paragraphs has no postings at all, so the average is
    // never used as a divisor in that case.
    const double avg = avg_doc_length_ > 0.0 ? avg_doc_length_ : 1.0;
    std::vector<double> acc(doc_ids_.size(), 0.0);
    std::vector<char> touched(doc_ids_.size(), 0);
    std::vector<double> weights;

    for (const auto& [term, weight] : query) {
        const PostingList* list = postings(term);
        if (list == nullptr || weight <= 0.0) continue;
        const double idf = bm25_idf(doc_ids_.size(), list->docs.size());
        weights.resize(list->docs.size());
        kernels.bm25_weights({params.k1, params.b, avg, weight * idf}, list->tf, list->lengths, weights);
        for (std::size_t i = 0; i < list->docs.size(); ++i) {
            acc[list->docs[i]] += weights[i];
            touched[list->docs[i]] = 1;
        }
    }

    std::vector<std::uint32_t> hits;
    for (std::uint32_t d = 0; d < acc.size(); ++d) {
        if (touched[d] && acc[d] > 0.0) hits.push_back(d);
    }
    auto better = [&](std::uint32_t a, std::uint32_t b) {
        if (acc[a] != acc[b]) return acc[a] > acc[b];
        return a < b;
    };
    const std::size_t take = std::min(k, hits.size());
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(take), hits.end(), better);

    std::vector<ScoredDoc> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back({doc_ids_[hits[i]], acc[hits[i]]});
    return out;
}

std::vector<ScoredDoc> InvertedIndex::search_text(std::string_view query_text, std::size_t k,
                                                  const Bm25Params& params) const {
    return search(expand_query(analyze(query_text, config_), config_.synonyms), k, params);
}

class IndexCodec {
  public:
    static json config_to_json(const AnalyzerConfig& c) {
        json syn = json::object();
        for (const auto& [canonical, members] : c.synonyms.classes) syn[canonical] = members;
        return json{{"lowercase", c.lowercase},
                    {"strip_punctuation", c.strip_punctuation},
                    {"preserve_diacritics", c.preserve_diacritics},
                    {"stopwords", c.stopwords},
                    {"synonyms", syn}};
    }

    static AnalyzerConfig config_from_json(const json& j) {
        AnalyzerConfig c;
        c.lowercase = j.at("lowercase").get<bool>();
        c.strip_punctuation = j.at("strip_punctuation").get<bool>();
        c.preserve_diacritics = j.at("preserve_diacritics").get<bool>();
        c.stopwords = j.at("stopwords").get<std::set<std::string>>();
        for (auto& [canonical, members] : j.at("synonyms").items()) {
            c.synonyms.classes[canonical] = members.get<std::set<std::string>>();
        }
        return c;
    }

    static json index_to_json(const InvertedIndex& index) {
        json postings = json::object();
        for (const auto& [term, list] : index.postings_) {
            postings[term] = json{{"docs", list.docs}, {"tf", list.tf}};
        }
        return json{{"doc_ids", index.doc_ids_}, {"doc_lengths", index.doc_lengths_}, {"postings", postings}};
    }

    static InvertedIndex index_from_json(const json& j, AnalyzerConfig config) {
        InvertedIndex index;
        index.config_ = std::move(config);
        index.doc_ids_ = j.at("doc_ids").get<std::vector<std::string>>();
        index.doc_lengths_ = j.at("doc_lengths").get<std::vector<std::uint32_t>>();
        if (index.doc_ids_.size() != index.doc_lengths_.size()) throw Error("index bundle: length table mismatch");
        if (!std::is_sorted(index.doc_ids_.begin(), index.doc_ids_.end())) {
            throw Error("index bundle: doc_ids not sorted");
        }
        std::uint64_t total = std::accumulate(index.doc_lengths_.begin(), index.doc_lengths_.end(), std::uint64_t{0});
        index.avg_doc_length_ = index.doc_ids_.empty() ? 0.0
                                                       : static_cast<double>(total) /
                                                             static_cast<double>(index.doc_ids_.size());
        for (auto& [term, value] : j.at("postings").items()) {
            PostingList list;
            list.docs = value.at("docs").get<std::vector<std::uint32_t>>();
            list.tf = value.at("tf").get<std::vector<std::uint32_t>>();
            if (list.docs.size() != list.tf.size()) throw Error("index bundle: posting list mismatch for " + term);
            for (auto d : list.docs) {
                if (d >= index.doc_ids_.size()) throw Error("index bundle: posting refers to unknown document");
                list.lengths.push_back(index.doc_lengths_[d]);
            }
            index.postings_.emplace(term, std::move(list));
        }
        return index;
    }
};

void save_index_bundle(const IndexBundle& bundle, const std::filesystem::path& path) {
    json docs = json::array();
    for (const auto& doc : bundle.corpus) docs.push_back(document_to_json(doc));
    json root{{"format", "pescourse-index"},
              {"version", 1},
              {"analyzer", IndexCodec::config_to_json(bundle.index.config())},
              {"documents", std::move(docs)},
              {"index", IndexCodec::index_to_json(bundle.index)}};
    write_file(path, root.dump());
}

IndexBundle load_index_bundle(const std::filesystem::path& path) {
    json root;
    try {
        root = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what(), e.byte);
    }
    if (root.value("format", "") != "pescourse-index") throw Error(path.string() + " is not an index bundle");
    IndexBundle bundle;
    try {
        for (const auto& doc : root.at("documents")) bundle.corpus.add(document_from_json(doc));
        bundle.index = IndexCodec::index_from_json(root.at("index"), IndexCodec::config_from_json(root.at("analyzer")));
    } catch (const json::exception& e) {
        throw Error(path.string() + ": malformed index bundle: " + e.what());
    }
    if (bundle.index.doc_count() != bundle.corpus.size()) throw Error("index bundle: document count mismatch");
    return bundle;
}

}  // namespace pescourse
