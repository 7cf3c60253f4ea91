// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "smog/dataset.hpp"
#include "smog/eval.hpp"
#include "smog/explore.hpp"
#include "smog/matcher.hpp"
#include "smog/tee.hpp"

namespace smog {

inline constexpr std::string_view kDecisionSchema = "smog.decision/1";

using json = nlohmann::json;

inline json to_json(const EntityRef& e)
{
    return {{"id", e.id}, {"label", e.label}, {"description", e.description}};
}

inline json to_json(const HybridScore& s)
{
    return {{"bm25_raw", s.bm25_raw}, {"bm25_norm", s.bm25_norm}, {"cosine", s.cosine},
            {"emb", s.emb},           {"total", s.total}};
}

inline HybridScore hybrid_score_from_json(const json& j)
{
    return {j.at("bm25_raw").get<double>(), j.at("bm25_norm").get<double>(), j.at("cosine").get<double>(),
            j.at("emb").get<double>(), j.at("total").get<double>()};
}

inline json to_json(const AttributeSpec& a)
{
    return {{"side", to_string(a.schema_side)},
            {"table", a.table_name},
            {"attribute", a.attribute_name},
            {"description", a.description}};
}

inline json to_json(const TopicSelection& t)
{
    json candidates = json::array();
    for (const auto& c : t.candidates)
        candidates.push_back({{"entity", to_json(c.entity)}, {"full_text", c.full_text},
                              {"score", to_json(c.stage3_score)}});
    return {{"chosen", t.chosen ? to_json(*t.chosen) : json(nullptr)},
            {"text", t.text},
            {"keywords", t.keywords},
            {"retrieved", t.retrieved},
            {"candidates", candidates},
            {"tee_score", t.tee_score ? to_json(*t.tee_score) : json(nullptr)},
            {"flags", t.flags}};
}

inline json to_json(const ReasoningPath& p)
{
    json hops = json::array();
    for (const auto& h : p.hops)
        hops.push_back({{"from", h.from.id},
                        {"relation", {{"id", h.relation.id}, {"label", h.relation.label}}},
                        {"direction", to_string(h.direction)},
                        {"to", to_json(h.to)},
                        {"s_rel", h.s_rel},
                        {"s_ent", h.s_ent}});
    return {{"root", to_json(p.root)}, {"depth", p.depth()}, {"s_path", p.s_path}, {"hops", hops}};
}

inline json to_json(const std::vector<ScoredId>& v)
{
    json out = json::array();
    for (const auto& s : v) out.push_back({{"id", s.id}, {"score", s.score}});
    return out;
}

inline json to_json(const SufficiencyVerdict& v)
{
    return {{"sufficient", v.sufficient}, {"answer", v.answer}, {"flags", v.flags}};
}

inline json to_json(const ExplorationResult& r)
{
    json rounds = json::array();
    for (const auto& rt : r.trace) {
        json expansions = json::array();
        for (const auto& e : rt.expansions)
            expansions.push_back({{"path", e.path},
                                  {"relations_retrieved", e.relations_retrieved},
                                  {"relations_kept", e.relations_kept},
                                  {"relation_scores", to_json(e.relation_scores)},
                                  {"relations_selected", e.relations_selected},
                                  {"entity_scores", to_json(e.entity_scores)},
                                  {"extensions", e.extensions},
                                  {"flags", e.flags}});
        rounds.push_back({{"round", rt.round},
                          {"expansions", expansions},
                          {"beam", to_json(rt.beam)},
                          {"verdict", rt.verdict ? to_json(*rt.verdict) : json(nullptr)}});
    }
    return {{"stop_mode", to_string(r.stop_mode)},
            {"rounds", r.rounds},
            {"stats",
             {{"expand_calls", r.stats.expand_calls},
              {"scoring_calls", r.stats.scoring_calls},
              {"sufficiency_calls", r.stats.sufficiency_calls}}},
            {"trace", rounds}};
}

/// One line of the decision trace file.
inline json to_json(const MatchDecision& d)
{
    json chains = json::array();
    for (const auto& c : d.chains) chains.push_back(to_json(c));
    return {{"schema", kDecisionSchema},
            {"key", pair_key(d.pair)},
            {"occurrence", d.occurrence},
            {"source", to_json(d.pair.source)},
            {"target", to_json(d.pair.target)},
            {"gold", d.pair.gold_label ? json(*d.pair.gold_label) : json(nullptr)},
            {"predicted", d.predicted},
            {"stop_mode", to_string(d.stop_mode)},
            {"question", d.question},
            {"tee", {{"source", to_json(d.tee_source)}, {"target", to_json(d.tee_target)}}},
            {"exploration", d.exploration ? to_json(*d.exploration) : json(nullptr)},
            {"chains", chains},
            {"verdict",
             {{"is_match", d.verdict.is_match},
              {"rationale", d.verdict.rationale},
              {"cited_chains", d.verdict.cited_chain_indices},
              {"half_stop", d.verdict.half_stop},
              {"flags", d.verdict.flags}}}};
}

inline DecisionRecord record_of(const MatchDecision& d)
{
    DecisionRecord r;
    r.key = pair_key(d.pair);
    r.occurrence = d.occurrence;
    r.gold = d.pair.gold_label;
    r.predicted = d.predicted;
    for (const auto& c : d.chains) r.chain_depths.push_back(c.depth());
    r.tee_source = d.tee_source.tee_score;
    r.tee_target = d.tee_target.tee_score;
    return r;
}

inline DecisionRecord record_from_json(const json& j)
{
    if (j.value("schema", "") != kDecisionSchema)
        throw DataError("unsupported decision schema '" + j.value("schema", "") + "'");
    DecisionRecord r;
    r.key = j.at("key").get<std::string>();
    r.occurrence = j.value("occurrence", std::size_t{0});
    if (!j.at("gold").is_null()) r.gold = j.at("gold").get<bool>();
    r.predicted = j.at("predicted").get<bool>();
    for (const auto& c : j.at("chains")) r.chain_depths.push_back(c.at("depth").get<std::size_t>());
    const auto& tee = j.at("tee");
    if (auto s = tee.at("source").at("tee_score"); !s.is_null()) r.tee_source = hybrid_score_from_json(s);
    if (auto s = tee.at("target").at("tee_score"); !s.is_null()) r.tee_target = hybrid_score_from_json(s);
    return r;
}

/// Decision records from a JSONL trace. Errors name the line.
inline std::vector<DecisionRecord> read_decision_records(std::istream& in)
{
    std::vector<DecisionRecord> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (detail::trim(line).empty()) continue;
        try {
            out.push_back(record_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw DataError(std::string("bad decision record: ") + e.what(), n);
        } catch (const DataError& e) {
            throw DataError(e.what(), n);
        }
    }
    return out;
}

/// Replaces each record's gold label with the one from the pair file.
/// Records and pairs must correspond one to one by (key, occurrence).
inline void align_with_gold(std::vector<DecisionRecord>& records,
                            const std::vector<AttributePair>& gold)
{
    std::map<std::pair<std::string, std::size_t>, std::optional<bool>> labels;
    const auto occ = occurrences(gold);
    for (std::size_t i = 0; i < gold.size(); ++i) labels[{pair_key(gold[i]), occ[i]}] = gold[i].gold_label;

    std::vector<std::string> problems;
    std::set<std::pair<std::string, std::size_t>> used;
    for (auto& r : records) {
        auto id = std::make_pair(r.key, r.occurrence);
        auto it = labels.find(id);
        if (it == labels.end()) {
            problems.push_back("not in gold file: " + r.key + " #" + std::to_string(r.occurrence));
            continue;
        }
        if (!used.insert(id).second) {
            problems.push_back("duplicate decision: " + r.key + " #" + std::to_string(r.occurrence));
            continue;
        }
        if (!it->second) problems.push_back("gold pair without label: " + r.key);
        r.gold = it->second;
    }
    for (const auto& [id, label] : labels)
        if (!used.contains(id)) problems.push_back("no decision for: " + id.first + " #" + std::to_string(id.second));
    if (!problems.empty()) {
        std::string msg = "decision trace and gold file disagree on pair identity:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw DataError(msg);
    }
}

}  // namespace smog
