// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "smog/error.hpp"
#include "smog/rank.hpp"

namespace smog {

/// The slice of a match decision that evaluation needs.
struct DecisionRecord {
    std::string key;
    std::size_t occurrence = 0;
    std::optional<bool> gold;
    bool predicted = false;
    std::vector<std::size_t> chain_depths;
    std::optional<HybridScore> tee_source;
    std::optional<HybridScore> tee_target;
};

enum class Group { TP, TN, FN, FP };

inline constexpr std::array<Group, 4> kGroups = {Group::TP, Group::TN, Group::FN, Group::FP};

constexpr std::string_view to_string(Group g) noexcept
{
    switch (g) {
    case Group::TP: return "TP";
    case Group::TN: return "TN";
    case Group::FN: return "FN";
    case Group::FP: return "FP";
    }
    return "?";
}

constexpr Group group_of(bool gold, bool predicted) noexcept
{
    if (gold) return predicted ? Group::TP : Group::FN;
    return predicted ? Group::FP : Group::TN;
}

inline Group group_of(const DecisionRecord& r)
{
    if (!r.gold) throw ContractError("decision " + r.key + " has no gold label");
    return group_of(*r.gold, r.predicted);
}

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::vector<std::string> flags;  // ratios that were undefined and reported as 0
};

inline Metrics metrics_from_counts(const ConfusionCounts& c)
{
    Metrics m;
    if (c.tp + c.fp == 0)
        m.flags.push_back("precision_undefined");
    else
        m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn == 0)
        m.flags.push_back("recall_undefined");
    else
        m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (m.precision + m.recall == 0.0)
        m.flags.push_back("f1_undefined");
    else
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

inline ConfusionCounts count_groups(std::span<const DecisionRecord> records)
{
    ConfusionCounts c;
    for (const auto& r : records) {
        switch (group_of(r)) {
        case Group::TP: ++c.tp; break;
        case Group::TN: ++c.tn; break;
        case Group::FN: ++c.fn; break;
        case Group::FP: ++c.fp; break;
        }
    }
    return c;
}

inline Metrics compute_metrics(std::span<const DecisionRecord> records)
{
    return metrics_from_counts(count_groups(records));
}

struct DepthGroup {
    std::size_t count = 0;
    double mean_depth = 0.0;
    std::size_t empty_chain_decisions = 0;  // counted with depth 0
};

/// Each decision contributes the mean depth of its chains (0 without chains);
/// a group's value is the mean of those. All four groups are present.
inline std::map<Group, DepthGroup> depth_analysis(std::span<const DecisionRecord> records)
{
    std::map<Group, DepthGroup> out;
    std::map<Group, double> sums;
    for (auto g : kGroups) out[g] = {};
    for (const auto& r : records) {
        auto& grp = out[group_of(r)];
        ++grp.count;
        double depth = 0.0;
        if (r.chain_depths.empty()) {
            ++grp.empty_chain_decisions;
        } else {
            for (auto d : r.chain_depths) depth += static_cast<double>(d);
            depth /= static_cast<double>(r.chain_depths.size());
        }
        sums[group_of(r)] += depth;
    }
    for (auto& [g, grp] : out)
        if (grp.count > 0) grp.mean_depth = sums[g] / static_cast<double>(grp.count);
    return out;
}

struct ScoreMeans {
    std::size_t count = 0;  // decisions with a score on this side
    double bm25_raw = 0.0;
    double bm25_norm = 0.0;
    double cosine = 0.0;
    double emb = 0.0;
    double total = 0.0;
};

struct TeeGroup {
    std::size_t members = 0;
    ScoreMeans source;
    ScoreMeans target;
};

/// Means of the chosen candidates' TEE scores per group and side. Groups
/// without members are absent.
inline std::map<Group, TeeGroup> tee_score_analysis(std::span<const DecisionRecord> records)
{
    std::map<Group, TeeGroup> out;
    auto add = [](ScoreMeans& m, const std::optional<HybridScore>& s) {
        if (!s) return;
        ++m.count;
        m.bm25_raw += s->bm25_raw;
        m.bm25_norm += s->bm25_norm;
        m.cosine += s->cosine;
        m.emb += s->emb;
        m.total += s->total;
    };
    auto finish = [](ScoreMeans& m) {
        if (m.count == 0) return;
        const auto n = static_cast<double>(m.count);
        m.bm25_raw /= n;
        m.bm25_norm /= n;
        m.cosine /= n;
        m.emb /= n;
        m.total /= n;
    };
    for (const auto& r : records) {
        auto& g = out[group_of(r)];
        ++g.members;
        add(g.source, r.tee_source);
        add(g.target, r.tee_target);
    }
    for (auto& [g, grp] : out) {
        finish(grp.source);
        finish(grp.target);
    }
    return out;
}

struct EvalReport {
    ConfusionCounts counts;
    Metrics metrics;
    std::map<Group, DepthGroup> depth_by_group;
    std::map<Group, TeeGroup> tee_by_group;
    std::vector<std::string> flags;
};

inline EvalReport evaluate(std::span<const DecisionRecord> records)
{
    EvalReport r;
    r.counts = count_groups(records);
    r.metrics = metrics_from_counts(r.counts);
    r.depth_by_group = depth_analysis(records);
    r.tee_by_group = tee_score_analysis(records);
    if (records.empty()) r.flags.push_back("no_decisions");
    for (const auto& f : r.metrics.flags) r.flags.push_back(f);
    return r;
}

inline std::string fixed2(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

inline std::string percent2(double ratio) { return fixed2(ratio * 100.0) + "%"; }

inline std::string render_text(const EvalReport& r)
{
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "Pairs evaluated: %zu\nConfusion: TP=%zu FP=%zu FN=%zu TN=%zu\n",
                  r.counts.total(), r.counts.tp, r.counts.fp, r.counts.fn, r.counts.tn);
    out += line;
    out += "Precision: " + percent2(r.metrics.precision) + "\n";
    out += "Recall: " + percent2(r.metrics.recall) + "\n";
    out += "F1: " + percent2(r.metrics.f1) + "\n";
    if (!r.flags.empty()) {
        out += "Flags:";
        for (const auto& f : r.flags) out += " " + f;
        out += "\n";
    }

    out += "\nReasoning chain depth by group\n";
    std::snprintf(line, sizeof line, "%-6s %8s %11s %10s\n", "Group", "Count", "Mean depth", "No chains");
    out += line;
    for (auto g : kGroups) {
        const auto& d = r.depth_by_group.at(g);
        std::snprintf(line, sizeof line, "%-6s %8zu %11s %10zu\n", std::string(to_string(g)).c_str(),
                      d.count, fixed2(d.mean_depth).c_str(), d.empty_chain_decisions);
        out += line;
    }

    out += "\nTEE scores by group (means of the chosen candidate)\n";
    std::snprintf(line, sizeof line, "%-6s %8s | %8s %8s %8s | %8s %8s %8s\n", "Group", "Members",
                  "T.BM25", "T.Emb", "T.Score", "S.BM25", "S.Emb", "S.Score");
    out += line;
    for (auto g : kGroups) {
        auto it = r.tee_by_group.find(g);
        if (it == r.tee_by_group.end()) continue;
        const auto& t = it->second;
        std::snprintf(line, sizeof line, "%-6s %8zu | %8s %8s %8s | %8s %8s %8s\n",
                      std::string(to_string(g)).c_str(), t.members, fixed2(t.target.bm25_raw).c_str(),
                      fixed2(t.target.cosine).c_str(), fixed2(t.target.total).c_str(),
                      fixed2(t.source.bm25_raw).c_str(), fixed2(t.source.cosine).c_str(),
                      fixed2(t.source.total).c_str());
        out += line;
    }
    return out;
}

inline nlohmann::json to_json(const ScoreMeans& m)
{
    return {{"count", m.count},   {"bm25_raw", m.bm25_raw}, {"bm25_norm", m.bm25_norm},
            {"cosine", m.cosine}, {"emb", m.emb},           {"total", m.total}};
}

inline nlohmann::json to_json(const EvalReport& r)
{
    nlohmann::json depth = nlohmann::json::object();
    for (const auto& [g, d] : r.depth_by_group)
        depth[std::string(to_string(g))] = {{"count", d.count},
                                            {"mean_depth", d.mean_depth},
                                            {"mean_depth_2dp", fixed2(d.mean_depth)},
                                            {"empty_chain_decisions", d.empty_chain_decisions}};
    nlohmann::json tee = nlohmann::json::object();
    for (const auto& [g, t] : r.tee_by_group)
        tee[std::string(to_string(g))] = {
            {"members", t.members}, {"source", to_json(t.source)}, {"target", to_json(t.target)}};
    return {
        {"schema", "smog.report/1"},
        {"counts", {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn}, {"tn", r.counts.tn}}},
        {"metrics",
         {{"precision", r.metrics.precision},
          {"recall", r.metrics.recall},
          {"f1", r.metrics.f1},
          {"precision_pct", fixed2(r.metrics.precision * 100.0)},
          {"recall_pct", fixed2(r.metrics.recall * 100.0)},
          {"f1_pct", fixed2(r.metrics.f1 * 100.0)}}},
        {"depth_by_group", depth},
        {"tee_by_group", tee},
        {"flags", r.flags},
    };
}

}  // namespace smog
