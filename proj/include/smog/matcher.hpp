// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "smog/dataset.hpp"
#include "smog/embedding.hpp"
#include "smog/explore.hpp"
#include "smog/kg.hpp"
#include "smog/mock_oracle.hpp"
#include "smog/oracle.hpp"
#include "smog/tee.hpp"

namespace smog {

enum class StopMode { AnswerFound, HalfStop, NoPaths, NoTopicEntity };

constexpr std::string_view to_string(StopMode s) noexcept
{
    switch (s) {
    case StopMode::AnswerFound: return "AnswerFound";
    case StopMode::HalfStop: return "HalfStop";
    case StopMode::NoPaths: return "NoPaths";
    case StopMode::NoTopicEntity: return "NoTopicEntity";
    }
    return "?";
}

inline StopMode parse_stop_mode(std::string_view s)
{
    for (auto m : {StopMode::AnswerFound, StopMode::HalfStop, StopMode::NoPaths, StopMode::NoTopicEntity})
        if (to_string(m) == s) return m;
    throw DataError("unknown stop mode '" + std::string(s) + "'");
}

struct MatchConfig {
    TeeOptions tee;
    BeamConfig beam;
};

struct MatchDecision {
    AttributePair pair;
    std::size_t occurrence = 0;  // index among pairs sharing the same key
    std::string question;
    bool predicted = false;
    StopMode stop_mode = StopMode::NoTopicEntity;
    std::vector<ReasoningPath> chains;
    TopicSelection tee_source;
    TopicSelection tee_target;
    std::optional<ExplorationResult> exploration;
    FinalVerdict verdict;
    std::string rationale;
};

namespace detail {

inline std::string describe(const AttributeSpec& a)
{
    return a.description.empty() ? std::string("(none)") : sanitize(a.description);
}

}  // namespace detail

/// The yes/no matching question for a pair.
inline std::string build_question(const AttributePair& pair)
{
    const auto& s = pair.source;
    const auto& t = pair.target;
    return "Do these two database attributes refer to the same concept?\n"
           "Source attribute: " + detail::sanitize(s.table_name) + "." + detail::sanitize(s.attribute_name) +
           "\nSource description: " + detail::describe(s) +
           "\nTarget attribute: " + detail::sanitize(t.table_name) + "." + detail::sanitize(t.attribute_name) +
           "\nTarget description: " + detail::describe(t);
}

/// The question plus one anchor line per side that has a topic entity.
inline std::string exploration_question(const AttributePair& pair, const TopicSelection& source,
                                        const TopicSelection& target)
{
    auto q = build_question(pair);
    if (source.chosen) q += "\n" + std::string(kSourceAnchor) + detail::entity_text(*source.chosen);
    if (target.chosen) q += "\n" + std::string(kTargetAnchor) + detail::entity_text(*target.chosen);
    return q;
}

/// Topic entities for both attributes, one exploration seeded with both,
/// then the final verdict over the surviving chains.
inline MatchDecision match_pair(const AttributePair& pair, const KnowledgeGraph& kg, Oracle& oracle,
                                const EmbeddingProvider& provider, const MatchConfig& cfg = {})
{
    MatchDecision d;
    d.pair = pair;
    d.tee_source = extract_topic_entity(pair.source, kg, provider, oracle, cfg.tee);
    d.tee_target = extract_topic_entity(pair.target, kg, provider, oracle, cfg.tee);
    d.question = exploration_question(pair, d.tee_source, d.tee_target);

    std::vector<EntityRef> topics;
    if (d.tee_source.chosen) topics.push_back(*d.tee_source.chosen);
    if (d.tee_target.chosen) topics.push_back(*d.tee_target.chosen);
    if (topics.empty()) {
        d.stop_mode = StopMode::NoTopicEntity;
        d.verdict.flags.push_back("no_topic_entity");
        d.verdict.rationale = "no topic entity for either attribute";
        d.rationale = d.verdict.rationale;
        return d;
    }

    d.exploration = explore(topics, d.question, kg, oracle, cfg.beam);
    d.chains = d.exploration->chains;
    switch (d.exploration->stop_mode) {
    case ExploreStop::AnswerFound: d.stop_mode = StopMode::AnswerFound; break;
    case ExploreStop::HalfStop: d.stop_mode = StopMode::HalfStop; break;
    case ExploreStop::NoPaths: d.stop_mode = StopMode::NoPaths; break;
    }
    d.verdict = oracle.final_answer(d.question, aggregate_chains(d.chains), d.chains.size(),
                                    d.stop_mode == StopMode::HalfStop);
    d.predicted = d.verdict.is_match;
    d.rationale = d.verdict.rationale;
    return d;
}

/// Occurrence index of every pair among pairs with the same key.
inline std::vector<std::size_t> occurrences(const std::vector<AttributePair>& pairs)
{
    std::map<std::string, std::size_t> seen;
    std::vector<std::size_t> out;
    for (const auto& p : pairs) out.push_back(seen[pair_key(p)]++);
    return out;
}

/// Matches every pair on a bounded pool of `workers` threads. `emit` sees
/// decisions in input order, one at a time, as soon as each prefix is done.
/// The first worker exception stops new work and is rethrown.
inline void match_dataset(const std::vector<AttributePair>& pairs, const KnowledgeGraph& kg,
                          Oracle& oracle, const EmbeddingProvider& provider, const MatchConfig& cfg,
                          std::size_t workers, const std::function<void(const MatchDecision&)>& emit)
{
    cfg.beam.validate();
    const auto occ = occurrences(pairs);
    std::vector<std::optional<MatchDecision>> slots(pairs.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex mutex;
    std::size_t emitted = 0;

    auto work = [&] {
        for (;;) {
            if (failed) return;
            const auto i = next++;
            if (i >= pairs.size()) return;
            try {
                auto d = match_pair(pairs[i], kg, oracle, provider, cfg);
                d.occurrence = occ[i];
                std::lock_guard lock(mutex);
                slots[i] = std::move(d);
                while (emitted < slots.size() && slots[emitted]) {
                    emit(*slots[emitted]);
                    slots[emitted].reset();
                    ++emitted;
                }
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!error) error = std::current_exception();
                failed = true;
                return;
            }
        }
    };

    const auto n = std::max<std::size_t>(1, std::min(workers, pairs.size()));
    if (n == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

inline std::vector<MatchDecision> match_all(const std::vector<AttributePair>& pairs,
                                            const KnowledgeGraph& kg, Oracle& oracle,
                                            const EmbeddingProvider& provider,
                                            const MatchConfig& cfg = {}, std::size_t workers = 1)
{
    std::vector<MatchDecision> out;
    match_dataset(pairs, kg, oracle, provider, cfg, workers,
                  [&](const MatchDecision& d) { out.push_back(d); });
    return out;
}

}  // namespace smog
