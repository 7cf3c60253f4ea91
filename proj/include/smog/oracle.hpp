// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smog/chat_model.hpp"
#include "smog/kg.hpp"
#include "smog/prompts.hpp"

namespace smog {

/// Scoring runs a little warm; every yes/no judgment runs at temperature 0.
struct OracleTemperatures {
    double scoring = 0.3;
    double judgment = 0.0;
};

struct ScoreItem {
    std::string id;
    std::string label;
};

/// Oracle confidences in [0,1] for exactly the requested ids.
struct ScoreMap {
    std::map<std::string, double> scores;
    std::vector<std::string> flags;
    bool unparseable = false;

    double at(const std::string& id) const
    {
        auto it = scores.find(id);
        return it == scores.end() ? 0.0 : it->second;
    }
};

struct OracleCandidate {
    EntityRef entity;
    double score = 0.0;
};

struct SufficiencyVerdict {
    bool sufficient = false;
    std::string answer;
    std::vector<std::string> flags;
};

struct FinalVerdict {
    bool is_match = false;
    std::string rationale;
    std::vector<std::size_t> cited_chain_indices;  // 0-based
    bool half_stop = false;
    std::vector<std::string> flags;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> reply_lines(std::string_view reply)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start <= reply.size()) {
        auto nl = reply.find('\n', start);
        auto line = trim(reply.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start));
        if (!line.empty() && !line.starts_with("```")) out.push_back(line);
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }
    return out;
}

/// Value of the first `KEY:` line, trimmed.
inline std::optional<std::string_view> field(std::string_view reply, std::string_view key)
{
    for (auto line : reply_lines(reply)) {
        if (line.size() > key.size() && line.starts_with(key) && line[key.size()] == ':')
            return trim(line.substr(key.size() + 1));
    }
    return std::nullopt;
}

inline std::optional<double> parse_number(std::string_view s)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

/// Keeps prompt lines single-line and tab-free.
inline std::string sanitize(std::string_view s)
{
    std::string out(s);
    std::replace_if(out.begin(), out.end(), [](char c) { return c == '\n' || c == '\t' || c == '\r'; }, ' ');
    return out;
}

inline std::string format_score(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace detail

inline std::optional<std::string> parse_choice(std::string_view reply)
{
    auto v = detail::field(reply, "CHOICE");
    if (!v || v->empty()) return std::nullopt;
    auto id = v->substr(0, v->find_first_of(" \t"));
    return std::string(id);
}

/// Parses `id<TAB>score` lines and repairs them against the requested ids:
/// out-of-range values are clamped, missing ids score 0, unknown ids are
/// dropped. Each repair leaves a flag. No usable line at all marks the map
/// unparseable.
inline ScoreMap parse_scores(std::string_view reply, std::span<const ScoreItem> items)
{
    std::set<std::string, std::less<>> wanted;
    for (const auto& item : items) wanted.insert(item.id);

    ScoreMap out;
    std::size_t parsed = 0;
    for (auto line : detail::reply_lines(reply)) {
        auto split = line.find('\t');
        if (split == std::string_view::npos) split = line.find_last_of(' ');
        if (split == std::string_view::npos) continue;
        auto id = detail::trim(line.substr(0, split));
        auto value = detail::parse_number(detail::trim(line.substr(split + 1)));
        if (!value || id.empty()) continue;
        ++parsed;
        if (!wanted.contains(id)) {
            out.flags.push_back("unknown:" + std::string(id));
            continue;
        }
        if (out.scores.contains(std::string(id))) {
            out.flags.push_back("duplicate:" + std::string(id));
            continue;
        }
        double v = *value;
        if (!std::isfinite(v)) {
            out.flags.push_back("non_finite:" + std::string(id));
            v = 0.0;
        } else if (v < 0.0 || v > 1.0) {
            out.flags.push_back("clamped:" + std::string(id));
            v = std::clamp(v, 0.0, 1.0);
        }
        out.scores.emplace(std::string(id), v);
    }
    if (parsed == 0) {
        out.unparseable = true;
        out.scores.clear();
    }
    for (const auto& item : items) {
        if (!out.scores.contains(item.id)) {
            out.scores.emplace(item.id, 0.0);
            if (!out.unparseable) out.flags.push_back("missing:" + item.id);
        }
    }
    return out;
}

inline std::optional<SufficiencyVerdict> parse_sufficiency(std::string_view reply)
{
    auto verdict = detail::field(reply, "VERDICT");
    if (!verdict) return std::nullopt;
    SufficiencyVerdict out;
    if (*verdict == "SUFFICIENT")
        out.sufficient = true;
    else if (*verdict != "INSUFFICIENT")
        return std::nullopt;
    if (auto answer = detail::field(reply, "ANSWER")) out.answer = std::string(*answer);
    return out;
}

/// Citations are 1-based in the reply and 0-based in the result; numbers
/// outside [1, chain_count] are dropped with a flag.
inline std::optional<FinalVerdict> parse_final(std::string_view reply, std::size_t chain_count)
{
    auto verdict = detail::field(reply, "VERDICT");
    if (!verdict) return std::nullopt;
    FinalVerdict out;
    if (*verdict == "MATCH")
        out.is_match = true;
    else if (*verdict != "NO_MATCH")
        return std::nullopt;
    if (auto rationale = detail::field(reply, "RATIONALE")) out.rationale = std::string(*rationale);
    if (auto evidence = detail::field(reply, "EVIDENCE"); evidence && *evidence != "none") {
        std::size_t start = 0;
        while (start <= evidence->size()) {
            auto comma = evidence->find(',', start);
            auto tok = detail::trim(evidence->substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
            std::size_t n = 0;
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), n);
            if (!tok.empty()) {
                if (ec == std::errc() && ptr == tok.data() + tok.size() && n >= 1 && n <= chain_count)
                    out.cited_chain_indices.push_back(n - 1);
                else
                    out.flags.push_back("invalid_citation:" + std::string(tok));
            }
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
    }
    return out;
}

/// The four judgments the pipeline asks of a language model. Renders the
/// prompt, calls the model, parses strictly and applies the documented
/// fallback when parsing fails; callers never see raw model text.
class Oracle {
  public:
    explicit Oracle(std::shared_ptr<ChatModel> model, OracleTemperatures temperatures = {})
        : model_(std::move(model)), temperatures_(temperatures)
    {
        if (!model_) throw ContractError("Oracle needs a chat model");
        if (temperatures_.scoring < 0 || temperatures_.judgment < 0)
            throw ContractError("temperatures must be >= 0");
    }

    const OracleTemperatures& temperatures() const { return temperatures_; }

    static std::string render_candidates(std::span<const OracleCandidate> candidates)
    {
        std::string out;
        for (const auto& c : candidates) {
            if (!out.empty()) out += '\n';
            out += c.entity.id + '\t' + detail::sanitize(c.entity.label) + '\t' +
                   detail::sanitize(c.entity.description) + '\t' + detail::format_score(c.score);
        }
        return out;
    }

    static std::string render_items(std::span<const ScoreItem> items)
    {
        std::string out;
        for (const auto& item : items) {
            if (!out.empty()) out += '\n';
            out += item.id + '\t' + detail::sanitize(item.label);
        }
        return out;
    }

    /// The id the model picked, or nullopt when the reply has no CHOICE line.
    /// Membership is the caller's check.
    std::optional<std::string> disambiguate(std::string_view description,
                                            std::span<const OracleCandidate> candidates,
                                            int attempt = 0)
    {
        if (candidates.empty()) throw ContractError("disambiguate: no candidates");
        auto prompt = render_prompt(prompt_template(OracleKind::Disambiguate),
                                    {{"description", std::string(description)},
                                     {"candidates", render_candidates(candidates)}});
        return parse_choice(ask(OracleKind::Disambiguate, std::move(prompt), attempt));
    }

    /// Unparseable replies get one retry, then an all-zero map flagged
    /// "unparseable".
    ScoreMap score_items(OracleKind kind, std::string_view question, std::string_view context,
                         std::span<const ScoreItem> items)
    {
        if (kind != OracleKind::ScoreRelations && kind != OracleKind::ScoreEntities)
            throw ContractError("score_items: kind must be a scoring kind");
        if (items.empty()) throw ContractError("score_items: no items");
        std::set<std::string_view> ids;
        for (const auto& item : items)
            if (!ids.insert(item.id).second) throw ContractError("score_items: duplicate id " + item.id);

        auto prompt = render_prompt(prompt_template(kind), {{"question", std::string(question)},
                                                            {"context", std::string(context)},
                                                            {"items", render_items(items)}});
        auto result = parse_scores(ask(kind, prompt, 0), items);
        if (result.unparseable) {
            result = parse_scores(ask(kind, prompt, 1), items);
            result.flags.insert(result.flags.begin(), "retried");
            if (result.unparseable) result.flags.push_back("unparseable");
        }
        return result;
    }

    /// Malformed replies count as Insufficient.
    SufficiencyVerdict judge_sufficiency(std::string_view question, std::string_view chains)
    {
        if (detail::trim(chains).empty()) throw ContractError("judge_sufficiency: no chains");
        auto prompt = render_prompt(prompt_template(OracleKind::JudgeSufficiency),
                                    {{"question", std::string(question)}, {"chains", std::string(chains)}});
        if (auto v = parse_sufficiency(ask(OracleKind::JudgeSufficiency, std::move(prompt), 0))) return *v;
        return SufficiencyVerdict{false, {}, {"malformed"}};
    }

    /// Always yields a verdict. No chains means no evidence and no model call;
    /// a reply that stays malformed after one retry is a non-match.
    FinalVerdict final_answer(std::string_view question, std::string_view chains,
                              std::size_t chain_count, bool half_stop)
    {
        if (chain_count == 0 || detail::trim(chains).empty()) {
            FinalVerdict v;
            v.half_stop = half_stop;
            v.rationale = "no reasoning chains to support a match";
            v.flags.push_back("no_evidence");
            return v;
        }
        auto prompt = render_prompt(prompt_template(OracleKind::FinalAnswer),
                                    {{"question", std::string(question)},
                                     {"chains", std::string(chains)},
                                     {"half_stop", half_stop ? "yes" : "no"}});
        for (int attempt = 0; attempt < 2; ++attempt) {
            if (auto v = parse_final(ask(OracleKind::FinalAnswer, prompt, attempt), chain_count)) {
                v->half_stop = half_stop;
                if (attempt > 0) v->flags.insert(v->flags.begin(), "retried");
                return *v;
            }
        }
        FinalVerdict v;
        v.half_stop = half_stop;
        v.rationale = "oracle reply could not be parsed";
        v.flags = {"retried", "unparseable"};
        return v;
    }

    std::size_t calls(OracleKind kind) const { return counters_[static_cast<std::size_t>(kind)].load(); }

    std::size_t total_calls() const
    {
        std::size_t n = 0;
        for (const auto& c : counters_) n += c.load();
        return n;
    }

  private:
    std::string ask(OracleKind kind, std::string prompt, int attempt)
    {
        ++counters_[static_cast<std::size_t>(kind)];
        OracleRequest request;
        request.kind = kind;
        request.prompt = std::move(prompt);
        request.temperature = (kind == OracleKind::ScoreRelations || kind == OracleKind::ScoreEntities)
                                  ? temperatures_.scoring
                                  : temperatures_.judgment;
        request.attempt = attempt;
        return model_->complete(request);
    }

    std::shared_ptr<ChatModel> model_;
    OracleTemperatures temperatures_;
    std::array<std::atomic<std::size_t>, 5> counters_{};
};

}  // namespace smog
