// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <charconv>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "smog/chat_model.hpp"
#include "smog/embedding.hpp"
#include "smog/oracle.hpp"

namespace smog {

struct MockPolicy {
    enum class Scoring { Cosine, Uniform };
    enum class Sufficiency { Rule, Never, Always };

    Scoring scoring = Scoring::Cosine;
    Sufficiency sufficiency = Sufficiency::Rule;
    double uniform_score = 1.0;
    std::set<std::string> target_labels;  // a chain ending on one of these is enough
    std::set<OracleKind> malformed;       // kinds that get a garbage reply
};

/// Topic anchors carried in the exploration question.
struct TopicAnchors {
    std::optional<std::string> source;
    std::optional<std::string> target;
};

inline constexpr std::string_view kSourceAnchor = "Source topic entity: ";
inline constexpr std::string_view kTargetAnchor = "Target topic entity: ";

inline TopicAnchors parse_anchors(std::string_view question)
{
    TopicAnchors out;
    for (auto line : detail::reply_lines(question)) {
        auto take = [&](std::string_view prefix, std::optional<std::string>& slot) {
            if (!line.starts_with(prefix)) return;
            auto rest = line.substr(prefix.size());
            slot = std::string(rest.substr(0, rest.find(' ')));
        };
        take(kSourceAnchor, out.source);
        take(kTargetAnchor, out.target);
    }
    return out;
}

/// Ids and leaf label of one chain, recovered from the aggregated text.
struct ParsedChain {
    std::set<std::string> ids;
    std::string leaf_label;
};

inline std::vector<ParsedChain> parse_chain_text(std::string_view chains)
{
    std::vector<ParsedChain> out;
    for (auto line : detail::reply_lines(chains)) {
        if (line.starts_with("Chain ")) {
            out.emplace_back();
            continue;
        }
        if (out.empty()) continue;
        out.back().ids.insert(std::string(line.substr(0, line.find(' '))));
        auto arrow = line.rfind("]-> ");
        std::size_t skip = 4;
        if (auto back = line.rfind("]- "); back != std::string_view::npos &&
                                            (arrow == std::string_view::npos || back > arrow)) {
            arrow = back;
            skip = 3;
        }
        if (arrow == std::string_view::npos) continue;
        auto to = line.substr(arrow + skip);
        auto space = to.find(' ');
        out.back().ids.insert(std::string(to.substr(0, space)));
        if (space != std::string_view::npos) {
            auto label = to.substr(space + 1);
            if (label.size() >= 2 && label.front() == '(' && label.back() == ')')
                label = label.substr(1, label.size() - 2);
            out.back().leaf_label = std::string(label);
        }
    }
    return out;
}

/// Deterministic stand-in for a language model: a pure function of the
/// request kind and prompt under a fixed policy.
///   disambiguate  highest listed retrieval score, ties to the smaller id
///   scoring       (cos(question, label) + 1) / 2 under the offline embedding
///   sufficiency   the two topic anchors are linked by one chain, or a chain
///                 leaf label is a target label
///   final answer  MATCH iff the topic anchors are linked
class MockChatModel final : public ChatModel {
  public:
    explicit MockChatModel(MockPolicy policy = {},
                           std::shared_ptr<const EmbeddingProvider> provider = nullptr)
        : policy_(std::move(policy)), provider_(provider ? std::move(provider)
                                                         : std::make_shared<HashedNgramEmbedding>())
    {}

    const MockPolicy& policy() const { return policy_; }

    std::string complete(const OracleRequest& request) override
    {
        if (policy_.malformed.contains(request.kind)) return "I am not sure.";
        switch (request.kind) {
        case OracleKind::Disambiguate: return choose(request.prompt);
        case OracleKind::ScoreRelations:
        case OracleKind::ScoreEntities: return score(request.prompt);
        case OracleKind::JudgeSufficiency: return sufficiency(request.prompt);
        case OracleKind::FinalAnswer: return final_answer(request.prompt);
        }
        return {};
    }

    /// Indices (0-based) of chains that link the two anchors.
    static std::vector<std::size_t> linking_chains(const TopicAnchors& anchors,
                                                   const std::vector<ParsedChain>& chains)
    {
        std::vector<std::size_t> out;
        if (!anchors.source || !anchors.target) return out;
        for (std::size_t i = 0; i < chains.size(); ++i)
            if (chains[i].ids.contains(*anchors.source) && chains[i].ids.contains(*anchors.target))
                out.push_back(i);
        return out;
    }

  private:
    static std::vector<std::vector<std::string_view>> rows(std::string_view section)
    {
        std::vector<std::vector<std::string_view>> out;
        for (auto line : detail::reply_lines(section)) {
            std::vector<std::string_view> cols;
            std::size_t start = 0;
            for (;;) {
                auto tab = line.find('\t', start);
                cols.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
                if (tab == std::string_view::npos) break;
                start = tab + 1;
            }
            out.push_back(std::move(cols));
        }
        return out;
    }

    std::string choose(const std::string& prompt) const
    {
        std::optional<std::string_view> best;
        double best_score = 0.0;
        const auto section = prompt_section(prompt, "Candidates");
        for (const auto& cols : rows(section)) {
            if (cols.size() < 4) continue;
            auto s = detail::parse_number(cols[3]).value_or(0.0);
            if (!best || s > best_score || (s == best_score && cols[0] < *best)) {
                best = cols[0];
                best_score = s;
            }
        }
        return best ? "CHOICE: " + std::string(*best) : "CHOICE: none";
    }

    std::string score(const std::string& prompt) const
    {
        const auto question = provider_->embed(prompt_section(prompt, "Question"));
        const auto section = prompt_section(prompt, "Candidates");
        std::string out;
        for (const auto& cols : rows(section)) {
            double s = policy_.uniform_score;
            if (policy_.scoring == MockPolicy::Scoring::Cosine) {
                auto label = cols.size() > 1 ? cols[1] : std::string_view{};
                s = cosine_to_unit(cosine(question, provider_->embed(label)).value);
            }
            char buf[64];
            auto [end, ec] = std::to_chars(buf, buf + sizeof buf, s);
            out += std::string(cols[0]) + '\t' + std::string(buf, end) + '\n';
        }
        return out;
    }

    bool linked(const TopicAnchors& anchors, const std::vector<ParsedChain>& chains) const
    {
        if (anchors.source && anchors.target && *anchors.source == *anchors.target) return true;
        return !linking_chains(anchors, chains).empty();
    }

    std::string sufficiency(const std::string& prompt) const
    {
        if (policy_.sufficiency == MockPolicy::Sufficiency::Never) return "VERDICT: INSUFFICIENT";
        if (policy_.sufficiency == MockPolicy::Sufficiency::Always)
            return "VERDICT: SUFFICIENT\nANSWER: forced";
        const auto anchors = parse_anchors(prompt_section(prompt, "Question"));
        const auto chains = parse_chain_text(prompt_section(prompt, "Reasoning chains"));
        if (linked(anchors, chains)) return "VERDICT: SUFFICIENT\nANSWER: the topic entities are connected";
        for (const auto& c : chains)
            if (policy_.target_labels.contains(c.leaf_label))
                return "VERDICT: SUFFICIENT\nANSWER: reached " + c.leaf_label;
        return "VERDICT: INSUFFICIENT";
    }

    std::string final_answer(const std::string& prompt) const
    {
        const auto anchors = parse_anchors(prompt_section(prompt, "Question"));
        const auto chains = parse_chain_text(prompt_section(prompt, "Reasoning chains"));
        std::vector<std::size_t> cited;
        if (anchors.source && anchors.target && *anchors.source == *anchors.target) {
            for (std::size_t i = 0; i < chains.size(); ++i)
                if (chains[i].ids.contains(*anchors.source)) cited.push_back(i);
        } else {
            cited = linking_chains(anchors, chains);
        }
        if (!linked(anchors, chains))
            return "VERDICT: NO_MATCH\nEVIDENCE: none\nRATIONALE: no chain connects the two topic entities";
        std::string evidence;
        for (auto i : cited) evidence += (evidence.empty() ? "" : ",") + std::to_string(i + 1);
        if (evidence.empty()) evidence = "none";
        return "VERDICT: MATCH\nEVIDENCE: " + evidence +
               "\nRATIONALE: the topic entities are connected in the graph";
    }

    MockPolicy policy_;
    std::shared_ptr<const EmbeddingProvider> provider_;
};

}  // namespace smog
