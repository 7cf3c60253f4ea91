// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smog/embedding.hpp"
#include "smog/error.hpp"
#include "smog/kg.hpp"
#include "smog/oracle.hpp"
#include "smog/rank.hpp"

namespace smog {

enum class SchemaSide { Source, Target };

constexpr std::string_view to_string(SchemaSide s) noexcept
{
    return s == SchemaSide::Source ? "source" : "target";
}

struct AttributeSpec {
    SchemaSide schema_side = SchemaSide::Source;
    std::string table_name;
    std::string attribute_name;
    std::string description;
};

inline constexpr std::string_view kFullTextSeparator = " \xE2\x80\x94 ";

struct ScoredCandidate {
    EntityRef entity;
    std::string full_text;
    HybridScore stage3_score;
};

inline std::string full_text(const EntityRef& e)
{
    return e.label + std::string(kFullTextSeparator) + e.description;
}

struct TeeOptions {
    std::size_t keyword_count = 5;
    std::size_t search_limit = 5;
    std::size_t rerank_keep = 5;
    bool name_fallback = true;  // empty description: use the attribute name
    RankOptions rank;
};

/// Outcome of one attribute. `chosen` empty means no topic entity.
struct TopicSelection {
    std::optional<EntityRef> chosen;
    std::string text;  // the description actually used
    std::vector<std::string> keywords;
    std::size_t retrieved = 0;  // candidates after dedup, before rerank
    std::vector<ScoredCandidate> candidates;
    std::optional<HybridScore> tee_score;  // the chosen candidate's score
    std::vector<std::string> flags;

    bool found() const { return chosen.has_value(); }
};

/// Up to `limit` search hits per keyword, unioned in first-seen order and
/// deduplicated by id.
inline std::vector<ScoredCandidate> retrieve_candidates(std::span<const std::string> keywords,
                                                        const KnowledgeGraph& kg,
                                                        std::size_t limit = 5)
{
    if (keywords.empty()) throw ContractError("retrieve_candidates: no keywords");
    std::vector<ScoredCandidate> out;
    std::set<std::string> seen;
    for (const auto& kw : keywords) {
        for (auto& e : kg.search_entities(kw, limit)) {
            if (!seen.insert(e.id).second) continue;
            ScoredCandidate c;
            c.full_text = full_text(e);
            c.entity = std::move(e);
            out.push_back(std::move(c));
        }
    }
    return out;
}

inline bool candidate_before(const ScoredCandidate& a, const ScoredCandidate& b)
{
    if (a.stage3_score.total != b.stage3_score.total) return a.stage3_score.total > b.stage3_score.total;
    return a.entity.id < b.entity.id;
}

/// Hybrid score of each candidate's full text against the description, best
/// `keep` first.
inline std::vector<ScoredCandidate> rerank_candidates(std::string_view description,
                                                      std::vector<ScoredCandidate> candidates,
                                                      const EmbeddingProvider& provider,
                                                      std::size_t keep = 5,
                                                      const RankOptions& options = {})
{
    if (candidates.empty()) throw ContractError("rerank_candidates: no candidates");
    if (keep == 0) throw ContractError("rerank_candidates: K must be >= 1");
    std::vector<std::string> texts;
    texts.reserve(candidates.size());
    for (const auto& c : candidates) texts.push_back(c.full_text);
    auto scores = score_batch(description, texts, provider, options);
    for (std::size_t i = 0; i < candidates.size(); ++i) candidates[i].stage3_score = scores[i];
    std::sort(candidates.begin(), candidates.end(), candidate_before);
    if (candidates.size() > keep) candidates.resize(keep);
    return candidates;
}

struct Disambiguation {
    std::size_t index = 0;  // into the candidate list
    std::vector<std::string> flags;
};

/// Asks the oracle to pick one candidate. An answer outside the list gets one
/// retry; after that the top-ranked candidate is taken and flagged.
inline Disambiguation disambiguate(std::string_view description,
                                   std::span<const ScoredCandidate> candidates, Oracle& oracle)
{
    if (candidates.empty() || candidates.size() > 5)
        throw ContractError("disambiguate: expected 1 to 5 candidates");
    std::vector<OracleCandidate> shown;
    for (const auto& c : candidates) shown.push_back({c.entity, c.stage3_score.total});

    Disambiguation out;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto pick = oracle.disambiguate(description, shown, attempt);
        if (candidates.size() == 1) {
            if (!pick || *pick != candidates[0].entity.id) out.flags.push_back("forced_single");
            return out;
        }
        for (std::size_t i = 0; pick && i < candidates.size(); ++i) {
            if (candidates[i].entity.id == *pick) {
                out.index = i;
                if (attempt > 0) out.flags.push_back("retried");
                return out;
            }
        }
        out.flags.push_back(pick ? "invalid_choice:" + *pick : "unparseable_choice");
    }
    out.flags.push_back("fallback_top_ranked");
    out.index = 0;
    return out;
}

/// Keywords, search, rerank and oracle choice for one attribute.
inline TopicSelection extract_topic_entity(const AttributeSpec& attr, const KnowledgeGraph& kg,
                                           const EmbeddingProvider& provider, Oracle& oracle,
                                           const TeeOptions& options = {})
{
    TopicSelection sel;
    sel.text = attr.description;
    if (detail::trim(sel.text).empty()) {
        sel.flags.push_back("empty_description");
        if (!options.name_fallback) return sel;
        sel.text = attr.attribute_name;
        for (auto& ch : sel.text)
            if (ch == '_') ch = ' ';
    }
    sel.keywords = top_k_keywords(sel.text, options.keyword_count, provider, options.rank);
    if (sel.keywords.empty()) {
        sel.flags.push_back("no_keywords");
        return sel;
    }
    auto pool = retrieve_candidates(sel.keywords, kg, options.search_limit);
    sel.retrieved = pool.size();
    if (pool.empty()) {
        sel.flags.push_back("no_candidates");
        return sel;
    }
    sel.candidates = rerank_candidates(sel.text, std::move(pool), provider,
                                       std::min<std::size_t>(options.rerank_keep, 5), options.rank);
    auto pick = disambiguate(sel.text, sel.candidates, oracle);
    sel.chosen = sel.candidates[pick.index].entity;
    sel.tee_score = sel.candidates[pick.index].stage3_score;
    sel.flags.insert(sel.flags.end(), pick.flags.begin(), pick.flags.end());
    return sel;
}

}  // namespace smog
