// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "smog/config.hpp"
#include "smog/dataset.hpp"
#include "smog/eval.hpp"
#include "smog/explore.hpp"
#include "smog/matcher.hpp"
#include "smog/tee.hpp"
#include "smog/trace_json.hpp"

namespace smog::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;
inline constexpr int kExitData = 4;

/// Flag values that override the config file.
struct Overrides {
    std::optional<std::size_t> depth;
    std::optional<std::size_t> beam_width;
    std::optional<std::string> backend;
    std::optional<std::string> oracle;
    std::optional<std::size_t> workers;
};

inline RunConfig load_with_overrides(const std::string& path, const Overrides& o)
{
    if (path.empty()) throw ConfigError("--config is required");
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path);
    auto c = config_from_json([&] {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file " + path);
        try {
            return nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config " + path + " is not valid JSON: " + e.what());
        }
    }(), std::filesystem::path(path).parent_path().empty() ? std::filesystem::path(".")
                                                          : std::filesystem::path(path).parent_path());
    if (o.depth) c.beam.depth = *o.depth;
    if (o.beam_width) c.beam.width = *o.beam_width;
    if (o.backend) c.kg.backend = *o.backend;
    if (o.oracle) c.oracle.backend = *o.oracle;
    if (o.workers) c.workers = *o.workers;
    validate(c);
    return c;
}

inline std::string fmt4(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

inline void print_selection(std::ostream& out, const AttributeSpec& a, const TopicSelection& s)
{
    out << "Attribute: " << a.table_name << "." << a.attribute_name << " (" << to_string(a.schema_side) << ")\n";
    out << "Text: " << s.text << "\n";
    out << "Keywords:";
    for (const auto& k : s.keywords) out << " " << k;
    out << "\nRetrieved: " << s.retrieved << " candidate(s)\n";
    out << "Reranked:\n";
    for (std::size_t i = 0; i < s.candidates.size(); ++i) {
        const auto& c = s.candidates[i];
        out << "  " << i + 1 << ". " << c.entity.id << " " << c.entity.label << "  total=" << fmt4(c.stage3_score.total)
            << " bm25=" << fmt4(c.stage3_score.bm25_raw) << " bm25_norm=" << fmt4(c.stage3_score.bm25_norm)
            << " emb=" << fmt4(c.stage3_score.emb) << "\n";
    }
    if (s.chosen)
        out << "Chosen: " << s.chosen->id << " (" << s.chosen->label << ")\n";
    else
        out << "Chosen: none (NoTopicEntity)\n";
    if (!s.flags.empty()) {
        out << "Flags:";
        for (const auto& f : s.flags) out << " " << f;
        out << "\n";
    }
}

inline void print_exploration(std::ostream& out, const ExplorationResult& r)
{
    for (const auto& rt : r.trace) {
        out << "Round " << rt.round << ": expanded " << rt.expansions.size() << " path(s)\n";
        for (const auto& e : rt.expansions) {
            out << "  " << e.path << ": " << e.relations_retrieved << " relation(s), " << e.relations_kept
                << " after blocklist; selected";
            for (const auto& s : e.relations_selected) out << " " << s;
            out << "; " << e.extensions << " extension(s)\n";
        }
        for (const auto& b : rt.beam) out << "  beam " << fmt4(b.score) << " " << b.id << "\n";
        if (rt.verdict) out << "  verdict: " << (rt.verdict->sufficient ? "SUFFICIENT" : "INSUFFICIENT") << "\n";
    }
    out << "Stop mode: " << to_string(r.stop_mode) << " after " << r.rounds << " round(s)\n";
    if (!r.chains.empty()) out << aggregate_chains(r.chains) << "\n";
}

inline int cmd_match(const std::string& config_path, const std::string& pairs_path, const std::string& out_path,
                     const Overrides& o, std::ostream& out)
{
    auto c = load_with_overrides(config_path, o);
    if (pairs_path.empty()) throw ConfigError("--pairs is required for match");
    auto pairs = load_pairs(pairs_path, c.columns, false);
    auto rt = build_runtime(c);
    const std::filesystem::path trace_path = out_path.empty() ? c.resolve(c.output.trace) : std::filesystem::path(out_path);
    if (trace_path.has_parent_path()) std::filesystem::create_directories(trace_path.parent_path());
    std::ofstream trace(trace_path, std::ios::binary | std::ios::trunc);
    if (!trace) throw DataError("cannot write trace file " + trace_path.string());

    std::size_t n = 0, positive = 0;
    match_dataset(pairs, *rt.kg, *rt.oracle, *rt.provider, rt.match, c.workers, [&](const MatchDecision& d) {
        trace << to_json(d).dump() << '\n';
        ++n;
        positive += d.predicted ? 1 : 0;
        out << pair_key(d.pair) << '\t' << (d.predicted ? "match" : "no_match") << '\t' << to_string(d.stop_mode);
        if (d.pair.gold_label) out << "\tgold=" << (*d.pair.gold_label ? 1 : 0);
        out << '\n';
    });
    trace.flush();
    if (!trace) throw DataError("failed writing trace file " + trace_path.string());
    out << "Matched " << n << " pair(s), " << positive << " predicted match(es); trace: " << trace_path.string() << "\n";
    return kExitOk;
}

inline int cmd_eval(const std::string& config_path, const std::string& trace_path, const std::string& pairs_path,
                    const std::string& out_dir, std::ostream& out)
{
    PairColumns columns;
    std::filesystem::path report_dir = out_dir;
    if (!config_path.empty()) {
        auto c = load_with_overrides(config_path, {});
        columns = c.columns;
        if (report_dir.empty()) report_dir = c.resolve(c.output.report_dir);
    }
    if (trace_path.empty()) throw ConfigError("--trace is required for eval");
    std::ifstream in(trace_path, std::ios::binary);
    if (!in) throw DataError("cannot read trace file " + trace_path);
    auto records = read_decision_records(in);
    if (!pairs_path.empty() && !records.empty()) align_with_gold(records, load_pairs(pairs_path, columns, true));
    for (const auto& r : records)
        if (!r.gold) throw DataError("decision " + r.key + " has no gold label; pass --pairs");

    const auto report = evaluate(records);
    const auto text = render_text(report);
    out << text;
    if (!report_dir.empty()) {
        std::filesystem::create_directories(report_dir);
        std::ofstream(report_dir / "report.txt", std::ios::binary) << text;
        std::ofstream(report_dir / "report.json", std::ios::binary) << to_json(report).dump(2) << '\n';
        out << "Reports written to " << report_dir.string() << "\n";
    }
    return kExitOk;
}

inline int cmd_tee(const std::string& config_path, const AttributeSpec& attr, const Overrides& o, std::ostream& out)
{
    auto c = load_with_overrides(config_path, o);
    auto rt = build_runtime(c);
    auto sel = extract_topic_entity(attr, *rt.kg, *rt.provider, *rt.oracle, rt.match.tee);
    print_selection(out, attr, sel);
    return kExitOk;
}

inline int cmd_explore(const std::string& config_path, const std::vector<std::string>& entities,
                       const std::string& question, const Overrides& o, std::ostream& out)
{
    auto c = load_with_overrides(config_path, o);
    if (entities.empty()) throw ConfigError("--entity is required for explore");
    auto rt = build_runtime(c);
    auto labels = rt.kg->fetch_labels(entities);
    std::vector<EntityRef> topics;
    for (const auto& id : entities) {
        auto it = labels.find(id);
        topics.push_back({id, it == labels.end() ? id : it->second, {}});
    }
    std::string q = question;
    if (q.empty()) {
        q = "Which knowledge graph facts connect these entities?";
        for (std::size_t i = 0; i < topics.size() && i < 2; ++i)
            q += "\n" + std::string(i == 0 ? kSourceAnchor : kTargetAnchor) + detail::entity_text(topics[i]);
    }
    auto result = explore(topics, q, *rt.kg, *rt.oracle, rt.match.beam);
    print_exploration(out, result);
    return kExitOk;
}

/// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Schema matching over a knowledge graph", "smog"};
    app.require_subcommand(1);

    std::string config, pairs, out_path, trace, description, attribute, table, side = "source", question;
    std::vector<std::string> entities;
    Overrides o;
    std::size_t depth = 0, width = 0, workers = 0;
    std::string backend, oracle;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config, "Run configuration (JSON)");
        sub->add_option("--depth", depth, "Override maximum exploration depth")->check(CLI::PositiveNumber);
        sub->add_option("--beam-width", width, "Override beam width")->check(CLI::PositiveNumber);
        sub->add_option("--backend", backend, "Knowledge graph backend")->check(CLI::IsMember({"local", "remote"}));
        sub->add_option("--oracle", oracle, "Oracle backend")->check(CLI::IsMember({"mock", "remote"}));
        sub->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
    };

    auto* match = app.add_subcommand("match", "Match attribute pairs and write a decision trace");
    add_common(match);
    match->add_option("--pairs", pairs, "Pair file (CSV)");
    match->add_option("--out", out_path, "Decision trace output (JSONL)");

    auto* eval = app.add_subcommand("eval", "Evaluate a decision trace");
    eval->add_option("--config", config, "Run configuration (JSON), for column names and report directory");
    eval->add_option("--trace", trace, "Decision trace (JSONL)");
    eval->add_option("--pairs", pairs, "Gold pair file (CSV)");
    eval->add_option("--out", out_path, "Report directory");

    auto* tee = app.add_subcommand("tee", "Run topic entity extraction for one attribute");
    add_common(tee);
    tee->add_option("--description", description, "Attribute description");
    tee->add_option("--attribute", attribute, "Attribute name")->required();
    tee->add_option("--table", table, "Table name");
    tee->add_option("--side", side, "Schema side")->check(CLI::IsMember({"source", "target"}));

    auto* exp = app.add_subcommand("explore", "Run graph exploration from entities");
    add_common(exp);
    exp->add_option("--entity", entities, "Topic entity id (repeatable)");
    exp->add_option("--question", question, "Question text");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "smog: " << e.what() << "\n";
        return kExitConfig;
    }
    if (depth) o.depth = depth;
    if (width) o.beam_width = width;
    if (!backend.empty()) o.backend = backend;
    if (!oracle.empty()) o.oracle = oracle;
    if (workers) o.workers = workers;

    try {
        if (*match) return cmd_match(config, pairs, out_path, o, out);
        if (*eval) return cmd_eval(config, trace, pairs, out_path, out);
        if (*tee) {
            AttributeSpec a{side == "target" ? SchemaSide::Target : SchemaSide::Source, table, attribute, description};
            return cmd_tee(config, a, o, out);
        }
        if (*exp) return cmd_explore(config, entities, question, o, out);
    } catch (const ConfigError& e) {
        err << "smog: configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const BackendError& e) {
        err << "smog: backend error: " << e.what() << "\n";
        return kExitBackend;
    } catch (const DataError& e) {
        err << "smog: data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "smog: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

}  // namespace smog::cli
