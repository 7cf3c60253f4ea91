// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smog/bm25.hpp"
#include "smog/embedding.hpp"
#include "smog/error.hpp"
#include "smog/text.hpp"

namespace smog {

struct HybridWeights {
    double lexical = 0.4;
    double semantic = 0.6;
};

/// One candidate's lexical and semantic evidence.
/// `total == lexical * bm25_norm + semantic * emb`; `emb` is `cosine` mapped to [0,1].
struct HybridScore {
    double bm25_raw = 0.0;
    double bm25_norm = 0.0;
    double cosine = 0.0;
    double emb = 0.0;
    double total = 0.0;
};

/// Weighted sum of two already-normalized scores.
inline double hybrid(double bm25_norm, double emb_norm, const HybridWeights& w = {})
{
    if (!(bm25_norm >= 0.0 && bm25_norm <= 1.0) || !(emb_norm >= 0.0 && emb_norm <= 1.0))
        throw ContractError("hybrid: inputs must lie in [0,1]");
    return w.lexical * bm25_norm + w.semantic * emb_norm;
}

/// Min-max over the candidate set. A set with no spread maps every positive
/// raw score to 1 and zeros to 0.
inline std::vector<double> min_max_normalize(std::span<const double> raw)
{
    std::vector<double> out(raw.size(), 0.0);
    if (raw.empty()) return out;
    auto [lo, hi] = std::minmax_element(raw.begin(), raw.end());
    const double min = *lo, max = *hi;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (max > min)
            out[i] = (raw[i] - min) / (max - min);
        else
            out[i] = raw[i] > 0.0 ? 1.0 : 0.0;
    }
    return out;
}

struct RankOptions {
    Bm25Params bm25;
    HybridWeights weights;
    const Stopwords* stopwords = &Stopwords::english();
};

/// Scores a batch of documents against one query text: BM25 over the batch
/// as corpus, cosine against the query embedding, both mixed by `hybrid`.
inline std::vector<HybridScore> score_batch(std::string_view query,
                                            std::span<const std::string> documents,
                                            const EmbeddingProvider& provider,
                                            const RankOptions& options = {})
{
    const auto query_tokens = tokenize_filter(query, *options.stopwords);
    std::vector<TokenSet> docs;
    docs.reserve(documents.size());
    for (const auto& d : documents) docs.push_back(tokenize_filter(d, *options.stopwords));
    const CorpusStats stats(docs);

    std::vector<double> raw;
    raw.reserve(docs.size());
    for (const auto& d : docs) raw.push_back(bm25(query_tokens, d, stats, options.bm25));
    const auto norm = min_max_normalize(raw);

    const auto query_vec = provider.embed(query);
    std::vector<HybridScore> out(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto c = cosine(query_vec, provider.embed(documents[i])).value;
        out[i].bm25_raw = raw[i];
        out[i].bm25_norm = norm[i];
        out[i].cosine = c;
        out[i].emb = cosine_to_unit(c);
        out[i].total = hybrid(out[i].bm25_norm, out[i].emb, options.weights);
    }
    return out;
}

struct ScoredKeyword {
    std::string token;
    HybridScore score;
};

/// Distinct description tokens ranked by hybrid score: BM25 of the token
/// against the description as a one-document corpus, cosine between token
/// and description embeddings. Ties go to the lexicographically smaller token.
inline std::vector<ScoredKeyword> score_keywords(std::string_view description,
                                                 const EmbeddingProvider& provider,
                                                 const RankOptions& options = {})
{
    const auto doc = tokenize_filter(description, *options.stopwords);
    std::vector<std::string> distinct;
    std::set<std::string_view> seen;
    for (const auto& t : doc.tokens)
        if (seen.insert(t).second) distinct.push_back(t);
    if (distinct.empty()) return {};

    const CorpusStats stats(std::span<const TokenSet>(&doc, 1));
    std::vector<double> raw;
    for (const auto& t : distinct) raw.push_back(bm25(TokenSet{{t}, t}, doc, stats, options.bm25));
    const auto norm = min_max_normalize(raw);

    const auto description_vec = provider.embed(description);
    std::vector<ScoredKeyword> out;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
        HybridScore s;
        s.bm25_raw = raw[i];
        s.bm25_norm = norm[i];
        s.cosine = cosine(provider.embed(distinct[i]), description_vec).value;
        s.emb = cosine_to_unit(s.cosine);
        s.total = hybrid(s.bm25_norm, s.emb, options.weights);
        out.push_back({distinct[i], s});
    }
    std::sort(out.begin(), out.end(), [](const ScoredKeyword& a, const ScoredKeyword& b) {
        if (a.score.total != b.score.total) return a.score.total > b.score.total;
        return a.token < b.token;
    });
    return out;
}

inline std::vector<std::string> top_k_keywords(std::string_view description, std::size_t k,
                                               const EmbeddingProvider& provider,
                                               const RankOptions& options = {})
{
    if (k == 0) throw ContractError("top_k_keywords: K must be >= 1");
    auto scored = score_keywords(description, provider, options);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(scored[i].token);
    return out;
}

}  // namespace smog
