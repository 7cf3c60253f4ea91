// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "smog/error.hpp"
#include "smog/kg.hpp"
#include "smog/oracle.hpp"

namespace smog {

inline constexpr std::array<std::string_view, 26> kDefaultRelationBlocklist = {
    "P31",   "P18",   "P41",   "P94",   "P154",  "P213",  "P214",  "P227",  "P244",
    "P373",  "P646",  "P854",  "P856",  "P910",  "P935",  "P973",  "P1151", "P1324",
    "P1417", "P1581", "P1628", "P1709", "P2671", "P2699", "P2888", "P6366",
};

inline std::set<std::string> default_relation_blocklist()
{
    return {kDefaultRelationBlocklist.begin(), kDefaultRelationBlocklist.end()};
}

/// One id per line; blank lines and `#` comments ignored.
inline std::set<std::string> load_relation_blocklist(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read relation blocklist " + path.string());
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        auto v = detail::trim(line);
        if (v.empty() || v.front() == '#') continue;
        out.emplace(v);
    }
    return out;
}

struct Hop {
    EntityRef from;
    RelationRef relation;
    Direction direction = Direction::Forward;
    EntityRef to;
    double s_rel = 0.0;
    double s_ent = 0.0;
};

struct ReasoningPath {
    EntityRef root;
    std::vector<Hop> hops;
    double s_path = 1.0;
    bool expanded = false;

    std::size_t depth() const { return hops.size(); }
    const EntityRef& leaf() const { return hops.empty() ? root : hops.back().to; }

    bool visits(std::string_view id) const
    {
        if (root.id == id) return true;
        return std::any_of(hops.begin(), hops.end(), [&](const Hop& h) { return h.to.id == id; });
    }

    /// Unique text key: root, then `relation>entity` per hop, `^` marking
    /// backward hops.
    std::string signature() const
    {
        std::string s = root.id;
        for (const auto& h : hops)
            s += (h.direction == Direction::Backward ? "|^" : "|") + h.relation.id + ">" + h.to.id;
        return s;
    }
};

/// Scoring id of a relation as the oracle sees it: `P21` or `^P21`.
inline std::string relation_item_id(const RelationRef& r, Direction d)
{
    return (d == Direction::Backward ? "^" : "") + r.id;
}

struct BeamConfig {
    std::size_t w = 3;
    std::size_t d_max = 3;
    std::size_t k = 5;
    double relation_floor = 0.2;
    std::size_t max_relations = 5;
    std::set<std::string> relation_blocklist = default_relation_blocklist();

    void validate() const
    {
        if (w < 1) throw ConfigError("beam width must be >= 1");
        if (d_max < 1) throw ConfigError("maximum depth must be >= 1");
        if (k < 1) throw ConfigError("entity cap k must be >= 1");
        if (max_relations < 1) throw ConfigError("max_relations must be >= 1");
        if (!(relation_floor >= 0.0 && relation_floor <= 1.0))
            throw ConfigError("relation_floor must lie in [0,1]");
    }
};

enum class ExploreStop { AnswerFound, HalfStop, NoPaths };

constexpr std::string_view to_string(ExploreStop s) noexcept
{
    switch (s) {
    case ExploreStop::AnswerFound: return "AnswerFound";
    case ExploreStop::HalfStop: return "HalfStop";
    case ExploreStop::NoPaths: return "NoPaths";
    }
    return "?";
}

struct ScoredId {
    std::string id;
    double score = 0.0;
};

/// What one expansion saw and decided.
struct ExpansionTrace {
    std::string path;  // signature of the expanded path
    std::size_t relations_retrieved = 0;
    std::size_t relations_kept = 0;  // after the blocklist
    std::vector<ScoredId> relation_scores;
    std::vector<std::string> relations_selected;
    std::vector<ScoredId> entity_scores;
    std::size_t extensions = 0;
    std::vector<std::string> flags;
};

struct RoundTrace {
    std::size_t round = 0;
    std::vector<ExpansionTrace> expansions;
    std::vector<ScoredId> beam;  // signature and s_path after pruning
    std::optional<SufficiencyVerdict> verdict;
};

struct ExplorationStats {
    std::size_t expand_calls = 0;
    std::size_t scoring_calls = 0;
    std::size_t sufficiency_calls = 0;
};

struct ExplorationResult {
    std::vector<ReasoningPath> chains;
    ExploreStop stop_mode = ExploreStop::NoPaths;
    std::size_t rounds = 0;
    std::vector<SufficiencyVerdict> sufficiency_verdicts;
    std::vector<RoundTrace> trace;
    ExplorationStats stats;
};

inline std::vector<RelationRef> filter_relations(std::span<const RelationRef> relations,
                                                 const std::set<std::string>& blocklist)
{
    std::vector<RelationRef> out;
    for (const auto& r : relations)
        if (!blocklist.contains(r.id)) out.push_back(r);
    return out;
}

namespace detail {

inline std::string entity_text(const EntityRef& e) { return e.id + " (" + sanitize(e.label) + ")"; }

inline std::string hop_text(const Hop& h)
{
    const auto rel = h.relation.id + ": " + sanitize(h.relation.label);
    if (h.direction == Direction::Forward) return entity_text(h.from) + " -[" + rel + "]-> " + entity_text(h.to);
    return entity_text(h.from) + " <-[" + rel + "]- " + entity_text(h.to);
}

inline std::string path_context(const ReasoningPath& p)
{
    std::string s = entity_text(p.leaf());
    if (!p.hops.empty()) {
        s += "\nReached by:";
        for (const auto& h : p.hops) s += "\n  " + hop_text(h);
    }
    return s;
}

}  // namespace detail

/// Numbered chain listing shared by the sufficiency and final-answer prompts.
inline std::string aggregate_chains(std::span<const ReasoningPath> chains)
{
    std::string out;
    for (std::size_t i = 0; i < chains.size(); ++i) {
        char head[64];
        std::snprintf(head, sizeof head, "Chain %zu (path score %.6f):", i + 1, chains[i].s_path);
        if (!out.empty()) out += '\n';
        out += head;
        if (chains[i].hops.empty()) out += "\n  " + detail::entity_text(chains[i].root);
        for (const auto& h : chains[i].hops) out += "\n  " + detail::hop_text(h);
    }
    return out;
}

/// One-hop extensions of `path`: relations scored and thresholded, up to k
/// neighbours per kept relation, neighbours scored, cycles skipped.
inline std::vector<ReasoningPath> expand(const ReasoningPath& path, const KnowledgeGraph& kg,
                                         Oracle& oracle, std::string_view question,
                                         const BeamConfig& cfg, ExpansionTrace* trace = nullptr,
                                         ExplorationStats* stats = nullptr)
{
    if (path.depth() >= cfg.d_max) throw ContractError("expand: path already at maximum depth");
    ExpansionTrace local;
    ExpansionTrace& t = trace ? *trace : local;
    t.path = path.signature();
    if (stats) ++stats->expand_calls;

    const auto& leaf = path.leaf();
    struct Rel {
        RelationRef ref;
        Direction dir;
        std::string item;
    };
    std::vector<Rel> rels;
    for (auto dir : {Direction::Forward, Direction::Backward}) {
        auto all = kg.adjacent_relations(leaf.id, dir);
        t.relations_retrieved += all.size();
        for (auto& r : filter_relations(all, cfg.relation_blocklist)) {
            auto item = relation_item_id(r, dir);
            rels.push_back({std::move(r), dir, std::move(item)});
        }
    }
    t.relations_kept = rels.size();
    if (rels.empty()) return {};

    std::vector<ScoreItem> items;
    for (const auto& r : rels)
        items.push_back({r.item, r.ref.label + (r.dir == Direction::Backward ? " (incoming)" : "")});
    const auto context = detail::path_context(path);
    auto rel_scores = oracle.score_items(OracleKind::ScoreRelations, question, context, items);
    if (stats) ++stats->scoring_calls;
    for (const auto& f : rel_scores.flags) t.flags.push_back("relations:" + f);
    for (const auto& r : rels) t.relation_scores.push_back({r.item, rel_scores.at(r.item)});

    std::vector<const Rel*> selected;
    for (const auto& r : rels)
        if (rel_scores.at(r.item) >= cfg.relation_floor) selected.push_back(&r);
    std::stable_sort(selected.begin(), selected.end(), [&](const Rel* a, const Rel* b) {
        auto sa = rel_scores.at(a->item), sb = rel_scores.at(b->item);
        if (sa != sb) return sa > sb;
        return a->item < b->item;
    });
    if (selected.size() > cfg.max_relations) selected.resize(cfg.max_relations);

    std::vector<std::pair<const Rel*, EntityRef>> reached;
    std::vector<ScoreItem> entity_items;
    std::set<std::string> listed;
    for (const auto* r : selected) {
        t.relations_selected.push_back(r->item);
        for (auto& e : kg.linked_entities(leaf.id, r->ref.id, r->dir, cfg.k)) {
            if (path.visits(e.id)) continue;
            if (listed.insert(e.id).second) entity_items.push_back({e.id, e.label});
            reached.emplace_back(r, std::move(e));
        }
    }
    if (reached.empty()) return {};

    auto ent_scores = oracle.score_items(OracleKind::ScoreEntities, question, context, entity_items);
    if (stats) ++stats->scoring_calls;
    for (const auto& f : ent_scores.flags) t.flags.push_back("entities:" + f);
    for (const auto& item : entity_items) t.entity_scores.push_back({item.id, ent_scores.at(item.id)});

    std::vector<ReasoningPath> out;
    for (auto& [r, e] : reached) {
        Hop h{leaf, r->ref, r->dir, e, rel_scores.at(r->item), ent_scores.at(e.id)};
        ReasoningPath next{path.root, path.hops, path.s_path * (h.s_rel * h.s_ent), false};
        next.hops.push_back(std::move(h));
        out.push_back(std::move(next));
    }
    t.extensions = out.size();
    return out;
}

/// Higher s_path first; ties go to the shorter path, then the smaller leaf
/// id, then the smaller signature.
inline bool path_before(const ReasoningPath& a, const ReasoningPath& b)
{
    if (a.s_path != b.s_path) return a.s_path > b.s_path;
    if (a.depth() != b.depth()) return a.depth() < b.depth();
    if (a.leaf().id != b.leaf().id) return a.leaf().id < b.leaf().id;
    return a.signature() < b.signature();
}

inline std::vector<ReasoningPath> prune_beam(std::vector<ReasoningPath> candidates, std::size_t w)
{
    if (w < 1) throw ContractError("prune_beam: w must be >= 1");
    std::sort(candidates.begin(), candidates.end(), path_before);
    if (candidates.size() > w) candidates.resize(w);
    return candidates;
}

inline SufficiencyVerdict check_sufficiency(std::string_view question,
                                            std::span<const ReasoningPath> chains, Oracle& oracle)
{
    if (chains.empty()) throw ContractError("check_sufficiency: no chains");
    return oracle.judge_sufficiency(question, aggregate_chains(chains));
}

/// Beam search from the topic entities. Every round expands the beam paths
/// not yet expanded; already expanded paths stay in contention, so a short
/// chain is not displaced merely for being short.
inline ExplorationResult explore(std::span<const EntityRef> topics, std::string_view question,
                                 const KnowledgeGraph& kg, Oracle& oracle, const BeamConfig& cfg)
{
    cfg.validate();
    if (topics.empty()) throw ContractError("explore: no topic entities");

    std::vector<ReasoningPath> beam;
    std::set<std::string> seeded;
    for (const auto& t : topics)
        if (seeded.insert(t.id).second) beam.push_back(ReasoningPath{t, {}, 1.0, false});
    beam = prune_beam(std::move(beam), cfg.w);

    ExplorationResult result;
    for (std::size_t round = 1; round <= cfg.d_max; ++round) {
        RoundTrace rt;
        rt.round = round;
        std::vector<ReasoningPath> candidates;
        for (auto& p : beam) {
            if (!p.expanded) {
                rt.expansions.emplace_back();
                auto ext = expand(p, kg, oracle, question, cfg, &rt.expansions.back(), &result.stats);
                for (auto& e : ext) candidates.push_back(std::move(e));
                p.expanded = true;
            }
            if (p.depth() >= 1) candidates.push_back(p);
        }
        beam = prune_beam(std::move(candidates), cfg.w);
        for (const auto& p : beam) rt.beam.push_back({p.signature(), p.s_path});
        result.rounds = round;

        if (beam.empty()) {
            result.trace.push_back(std::move(rt));
            result.stop_mode = ExploreStop::NoPaths;
            break;
        }
        auto verdict = check_sufficiency(question, beam, oracle);
        ++result.stats.sufficiency_calls;
        result.sufficiency_verdicts.push_back(verdict);
        rt.verdict = verdict;
        result.trace.push_back(std::move(rt));

        const bool frontier = std::any_of(beam.begin(), beam.end(), [](const ReasoningPath& p) {
            return !p.expanded;
        });
        if (verdict.sufficient) {
            result.stop_mode = ExploreStop::AnswerFound;
            break;
        }
        if (round == cfg.d_max || !frontier) {
            result.stop_mode = ExploreStop::HalfStop;
            break;
        }
    }
    result.chains = std::move(beam);
    return result;
}

}  // namespace smog
