#include "pescourse/rerank.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "http_util.hpp"
#include "pescourse/error.hpp"
#include "pescourse/simd/kernels.hpp"

namespace pescourse {

using json = nlohmann::json;

std::string_view to_string(RerankVariant v) { return v == RerankVariant::Base ? "base" : "refined"; }

std::string_view to_string(RerankContext c) { return c == RerankContext::Snippet ? "snippet" : "paragraph"; }

std::optional<RerankVariant> rerank_variant_from_string(std::string_view s) {
    if (s == "base") return RerankVariant::Base;
    if (s == "refined") return RerankVariant::Refined;
    return std::nullopt;
}

RerankMode RerankMode::base() { return {RerankVariant::Base, 100, RerankContext::Snippet}; }

RerankMode RerankMode::refined() { return {RerankVariant::Refined, 200, RerankContext::FullParagraph}; }

RerankMode RerankMode::for_variant(RerankVariant v) { return v == RerankVariant::Base ? base() : refined(); }

double lexical_overlap_score(std::string_view query, std::string_view passage, const AnalyzerConfig& config) {
    const auto q_tokens = analyze(query, config);
    const auto p_tokens = analyze(passage, config);
    if (q_tokens.empty() || p_tokens.empty()) return 0.0;

    std::unordered_map<std::string_view, std::size_t> vocab;
    for (const auto& t : q_tokens) vocab.emplace(t, vocab.size());
    for (const auto& t : p_tokens) vocab.emplace(t, vocab.size());
    std::vector<double> qv(vocab.size(), 0.0);
    std::vector<double> pv(vocab.size(), 0.0);
    for (const auto& t : q_tokens) qv[vocab.at(t)] += 1.0;
    for (const auto& t : p_tokens) pv[vocab.at(t)] += 1.0;

    const auto& k = simd::active_kernels();
    const double dot = k.dot(qv, pv);
    if (dot <= 0.0) return 0.0;
    const double norms = k.dot(qv, qv) * k.dot(pv, pv);
    // sqrt(x*x) == x in IEEE arithmetic, so identical vectors give exactly 1.
    return std::clamp(dot / std::sqrt(norms), 0.0, 1.0);
}

double LexicalOverlapScorer::score_pair(std::string_view query, std::string_view passage) const {
    return lexical_overlap_score(query, passage, config_);
}

std::vector<double> LexicalOverlapScorer::score(std::string_view query, std::span<const Passage> passages) const {
    std::vector<double> out;
    out.reserve(passages.size());
    for (const auto& p : passages) out.push_back(score_pair(query, p.text));
    return out;
}

ScoreTransport make_http_score_transport(const RemoteScorerConfig& config) {
    auto ep = detail::parse_endpoint(config.endpoint);
    auto timeout = config.timeout;
    return [ep, timeout](const std::string& body) { return detail::http_post_json(ep, "/score", body, timeout); };
}

RemoteScorer::RemoteScorer(RemoteScorerConfig config)
    : config_(std::move(config)), transport_(make_http_score_transport(config_)) {}

RemoteScorer::RemoteScorer(RemoteScorerConfig config, ScoreTransport transport)
    : config_(std::move(config)), transport_(std::move(transport)) {}

std::size_t RemoteScorer::cache_size() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

void RemoteScorer::clear_cache() {
    std::lock_guard lock(mutex_);
    cache_.clear();
}

std::vector<double> RemoteScorer::fetch(std::string_view query, std::span<const Passage> passages) const {
    json req{{"query", query}, {"passages", json::array()}};
    for (const auto& p : passages) req["passages"].push_back({{"id", p.id}, {"text", p.text}});
    const std::string body = req.dump();
    const std::string first_id = passages.empty() ? std::string{} : passages.front().id;

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        std::string response;
        try {
            response = transport_(body);
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;
        }
        // A reply that arrives but breaks the wire contract is not retried.
        json res;
        try {
            res = json::parse(response);
        } catch (const json::parse_error& e) {
            throw RerankError(std::string("scoring service sent malformed JSON: ") + e.what(), first_id);
        }
        std::unordered_map<std::string, double> by_id;
        if (!res.contains("scores") || !res["scores"].is_array()) {
            throw RerankError("scoring service reply lacks a scores array", first_id);
        }
        for (const auto& s : res["scores"]) {
            if (!s.contains("id") || !s.contains("score") || !s["score"].is_number()) {
                throw RerankError("scoring service reply has a malformed score entry", first_id);
            }
            by_id[s["id"].get<std::string>()] = s["score"].get<double>();
        }
        std::vector<double> out;
        for (const auto& p : passages) {
            auto it = by_id.find(p.id);
            if (it == by_id.end()) throw RerankError("scoring service omitted a passage", p.id);
            out.push_back(it->second);
        }
        return out;
    }
    throw RerankError("scoring service unavailable after " + std::to_string(config_.retries) +
                          " retries: " + last_error,
                      first_id);
}

std::vector<double> RemoteScorer::score(std::string_view query, std::span<const Passage> passages) const {
    std::vector<double> out(passages.size(), 0.0);
    std::vector<Passage> missing;
    std::vector<std::size_t> missing_pos;
    {
        std::lock_guard lock(mutex_);
        for (std::size_t i = 0; i < passages.size(); ++i) {
            auto it = cache_.find({std::string(query), passages[i].id});
            if (it != cache_.end()) {
                out[i] = it->second;
            } else {
                missing.push_back(passages[i]);
                missing_pos.push_back(i);
            }
        }
    }
    if (missing.empty()) return out;
    auto fetched = fetch(query, missing);
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < missing.size(); ++k) {
        out[missing_pos[k]] = fetched[k];
        cache_.emplace(std::pair{std::string(query), missing[k].id}, fetched[k]);
    }
    return out;
}

std::vector<RerankedDoc> rerank(const std::vector<ScoredDoc>& candidates, const RerankMode& mode,
                                const RelevanceScorer& scorer, std::string_view query_text,
                                const CorpusStore& store, const RerankOptions& options) {
    const std::size_t n = std::min(mode.candidate_cap, candidates.size());
    std::vector<Passage> passages;
    passages.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const CorpusDocument* doc = store.find(candidates[i].doc_id);
        if (doc == nullptr) throw RerankError("candidate is not in the corpus", candidates[i].doc_id);
        passages.push_back(
            {doc->doc_id, mode.context == RerankContext::Snippet ? doc->snippet : doc->paragraph});
    }

    const std::size_t batch = std::max<std::size_t>(1, options.batch_size);
    const std::size_t chunks = (n + batch - 1) / batch;
    std::vector<double> scores(n, 0.0);
    std::vector<std::optional<RerankError>> failures(chunks);

    auto run_chunk = [&](std::size_t c) {
        const std::size_t begin = c * batch;
        const std::size_t len = std::min(batch, n - begin);
        std::span<const Passage> slice(passages.data() + begin, len);
        try {
            auto got = scorer.score(query_text, slice);
            if (got.size() != len) throw RerankError("scorer returned the wrong number of scores", slice[0].id);
            for (std::size_t i = 0; i < len; ++i) {
                if (!(got[i] >= 0.0 && got[i] <= 1.0)) {
                    throw RerankError("scorer returned a score outside [0, 1]", slice[i].id);
                }
                scores[begin + i] = got[i];
            }
        } catch (const RerankError& e) {
            failures[c] = e;
        } catch (const std::exception& e) {
            failures[c] = RerankError(std::string("scorer failed: ") + e.what(), slice[0].id);
        }
    };

    const std::size_t workers = std::min(std::max<std::size_t>(1, options.parallelism), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t c = next++; c < chunks; c = next++) run_chunk(c);
            });
        }
    }
    for (auto& f : failures) {
        if (f) throw *f;
    }

    std::vector<RerankedDoc> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back({candidates[i].doc_id, candidates[i].score, i, scores[i]});
    std::stable_sort(out.begin(), out.end(),
                     [](const RerankedDoc& a, const RerankedDoc& b) { return a.rerank_score > b.rerank_score; });
    return out;
}

}  // namespace pescourse
