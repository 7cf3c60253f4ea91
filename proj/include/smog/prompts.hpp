// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "smog/error.hpp"

namespace smog {

enum class OracleKind { Disambiguate, ScoreRelations, ScoreEntities, JudgeSufficiency, FinalAnswer };

constexpr std::string_view to_string(OracleKind k) noexcept
{
    switch (k) {
    case OracleKind::Disambiguate: return "disambiguate";
    case OracleKind::ScoreRelations: return "score_relations";
    case OracleKind::ScoreEntities: return "score_entities";
    case OracleKind::JudgeSufficiency: return "judge_sufficiency";
    case OracleKind::FinalAnswer: return "final_answer";
    }
    return "";
}

// Copies of prompts/*.v1.txt; a test keeps them byte-identical.
inline constexpr std::string_view kDisambiguatePrompt = R"(You link a database attribute description to exactly one knowledge-graph entity.
Pick the candidate whose meaning best matches the description.

## Description
{{description}}

## Candidates
{{candidates}}

## Response format
Candidates are listed as id<TAB>label<TAB>description<TAB>retrieval score.
Reply with a single line: CHOICE: <id>
)";

inline constexpr std::string_view kScoreRelationsPrompt = R"(You are exploring a knowledge graph one hop at a time to answer a schema matching question.
Rate each candidate relation of the current entity by how likely following it leads to the evidence needed.

## Question
{{question}}

## Current entity
{{context}}

## Candidates
{{items}}

## Response format
Candidates are listed as id<TAB>label. Ids starting with ^ are incoming relations.
Reply with one line per candidate: id<TAB>score, where score is a confidence between 0 and 1.
Output nothing else.
)";

inline constexpr std::string_view kScoreEntitiesPrompt = R"(You are exploring a knowledge graph one hop at a time to answer a schema matching question.
Rate each candidate entity reached from the current entity by how likely it is the answer or close to it.

## Question
{{question}}

## Current entity
{{context}}

## Candidates
{{items}}

## Response format
Candidates are listed as id<TAB>label.
Reply with one line per candidate: id<TAB>score, where score is a confidence between 0 and 1.
Output nothing else.
)";

inline constexpr std::string_view kJudgeSufficiencyPrompt = R"(You check whether knowledge-graph evidence is enough to answer a schema matching question.
Use only the reasoning chains below.

## Question
{{question}}

## Reasoning chains
{{chains}}

## Response format
First line: VERDICT: SUFFICIENT or VERDICT: INSUFFICIENT
If sufficient, second line: ANSWER: <one sentence>
)";

inline constexpr std::string_view kFinalAnswerPrompt = R"(You decide whether two database attributes refer to the same concept.
Base the decision only on the knowledge-graph evidence below.

## Question
{{question}}

## Reasoning chains
{{chains}}

## Exploration status
Depth limit reached without a sufficiency verdict: {{half_stop}}

## Response format
VERDICT: MATCH or VERDICT: NO_MATCH
EVIDENCE: comma-separated numbers of the chains you relied on, or none
RATIONALE: <one sentence>
)";

struct PromptTemplate {
    std::string_view name;
    std::string_view text;
    std::set<std::string> fields;
};

inline const PromptTemplate& prompt_template(OracleKind kind)
{
    static const std::map<OracleKind, PromptTemplate> templates{
        {OracleKind::Disambiguate, {"disambiguate.v1", kDisambiguatePrompt, {"description", "candidates"}}},
        {OracleKind::ScoreRelations,
         {"score_relations.v1", kScoreRelationsPrompt, {"question", "context", "items"}}},
        {OracleKind::ScoreEntities,
         {"score_entities.v1", kScoreEntitiesPrompt, {"question", "context", "items"}}},
        {OracleKind::JudgeSufficiency,
         {"judge_sufficiency.v1", kJudgeSufficiencyPrompt, {"question", "chains"}}},
        {OracleKind::FinalAnswer,
         {"final_answer.v1", kFinalAnswerPrompt, {"question", "chains", "half_stop"}}},
    };
    return templates.at(kind);
}

/// Names of every `{{name}}` placeholder in `text`.
inline std::set<std::string> placeholders(std::string_view text)
{
    std::set<std::string> out;
    for (auto pos = text.find("{{"); pos != std::string_view::npos; pos = text.find("{{", pos)) {
        auto end = text.find("}}", pos);
        if (end == std::string_view::npos) break;
        out.emplace(text.substr(pos + 2, end - pos - 2));
        pos = end + 2;
    }
    return out;
}

/// Substitutes every placeholder. `values` must name exactly the template's
/// fields. A value line starting with "## " is indented so it cannot open a
/// new section.
inline std::string render_prompt(const PromptTemplate& tpl,
                                 const std::map<std::string, std::string>& values)
{
    std::set<std::string> given;
    for (const auto& [k, _] : values) given.insert(k);
    if (given != tpl.fields)
        throw ContractError("prompt " + std::string(tpl.name) + ": field set mismatch");

    std::string out;
    std::string_view text = tpl.text;
    std::size_t pos = 0;
    while (true) {
        auto open = text.find("{{", pos);
        if (open == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        auto close = text.find("}}", open);
        out.append(text.substr(pos, open - pos));
        std::string value = values.at(std::string(text.substr(open + 2, close - open - 2)));
        for (auto p = value.find("\n## "); p != std::string::npos; p = value.find("\n## ", p + 2))
            value.insert(p + 1, " ");
        if (value.starts_with("## ")) value.insert(0, " ");
        out.append(value);
        pos = close + 2;
    }
    return out;
}

/// Body of the `## name` section of a rendered prompt, without the trailing
/// blank line. Empty when the section is absent.
inline std::string prompt_section(std::string_view prompt, std::string_view name)
{
    const std::string header = "## " + std::string(name) + "\n";
    std::size_t start;
    if (prompt.starts_with(header))
        start = header.size();
    else {
        auto at = prompt.find("\n" + header);
        if (at == std::string_view::npos) return {};
        start = at + 1 + header.size();
    }
    auto end = prompt.find("\n\n## ", start);
    auto body = prompt.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    while (!body.empty() && body.back() == '\n') body.remove_suffix(1);
    return std::string(body);
}

}  // namespace smog
