// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace smog;
using Catch::Approx;

namespace {

/// Search backend returning fixed hit lists per keyword, duplicates included.
class CannedSearch final : public KnowledgeGraph {
  public:
    std::map<std::string, std::vector<EntityRef>, std::less<>> hits;

  protected:
    std::vector<EntityRef> do_search_entities(std::string_view q, std::size_t limit) const override
    {
        auto it = hits.find(q);
        if (it == hits.end()) return {};
        auto out = it->second;
        if (out.size() > limit) out.resize(limit);
        return out;
    }
    std::vector<RelationRef> do_adjacent_relations(std::string_view, Direction) const override { return {}; }
    std::vector<EntityRef> do_linked_entities(std::string_view, std::string_view, Direction,
                                              std::size_t) const override
    {
        return {};
    }
    std::map<std::string, std::string> do_fetch_labels(std::span<const std::string>) const override { return {}; }
};

ScoredCandidate candidate(std::string id, std::string label, std::string description)
{
    EntityRef e{std::move(id), std::move(label), std::move(description)};
    return {e, full_text(e), {}};
}

std::shared_ptr<Oracle> scripted(std::vector<std::string> replies)
{
    auto queue = std::make_shared<std::vector<std::string>>(std::move(replies));
    auto next = std::make_shared<std::size_t>(0);
    return std::make_shared<Oracle>(std::make_shared<FunctionChatModel>([queue, next](const OracleRequest&) {
        const auto i = (*next)++;
        return (*queue)[std::min(i, queue->size() - 1)];
    }));
}

// Hybrid scores computed from scratch for each candidate: textbook BM25 over
// the candidate texts with the description as query, then the 0.4/0.6 mix.
std::vector<double> reference_totals(const std::string& description, const std::vector<std::string>& texts)
{
    const auto q = tokenize_filter(description).tokens;
    std::vector<std::vector<std::string>> docs;
    double total_len = 0;
    for (const auto& t : texts) {
        docs.push_back(tokenize_filter(t).tokens);
        total_len += static_cast<double>(docs.back().size());
    }
    const double avgdl = total_len / static_cast<double>(docs.size());
    const double n = static_cast<double>(docs.size());
    std::vector<double> raw;
    for (const auto& d : docs) {
        double s = 0;
        std::set<std::string> terms(q.begin(), q.end());
        for (const auto& term : terms) {
            double df = 0;
            for (const auto& other : docs) df += std::count(other.begin(), other.end(), term) > 0;
            const double f = static_cast<double>(std::count(d.begin(), d.end(), term));
            if (f == 0) continue;
            s += std::log(1 + (n - df + 0.5) / (df + 0.5)) * f * 2.2 /
                 (f + 1.2 * (0.25 + 0.75 * static_cast<double>(d.size()) / avgdl));
        }
        raw.push_back(s);
    }
    const double lo = *std::min_element(raw.begin(), raw.end());
    const double hi = *std::max_element(raw.begin(), raw.end());
    const auto qv = fixture::embedding().embed(description);
    std::vector<double> out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        const double norm = hi > lo ? (raw[i] - lo) / (hi - lo) : (raw[i] > 0 ? 1.0 : 0.0);
        const auto dv = fixture::embedding().embed(texts[i]);
        double dot = 0, na = 0, nb = 0;
        for (std::size_t j = 0; j < dv.size(); ++j) {
            dot += qv[j] * dv[j];
            na += qv[j] * qv[j];
            nb += dv[j] * dv[j];
        }
        const double cos = (na == 0 || nb == 0) ? 0.0 : dot / std::sqrt(na * nb);
        out.push_back(0.4 * norm + 0.6 * (cos + 1) / 2);
    }
    return out;
}

}  // namespace

TEST_CASE("retrieval unions keyword hits", "[tee]")
{
    std::vector<std::string> kw{"pressure", "blood"};
    auto c = retrieve_candidates(kw, fixture::store(), 5);
    CHECK(c.size() == 10);
    for (const auto& x : c) CHECK(x.full_text == x.entity.label + " \xE2\x80\x94 " + x.entity.description);
    CHECK_THROWS_AS(retrieve_candidates(std::vector<std::string>{}, fixture::store()), ContractError);
    std::vector<std::string> none{"zzzz"};
    CHECK(retrieve_candidates(none, fixture::store()).empty());
}

TEST_CASE("retrieval deduplicates by id", "[tee]")
{
    CannedSearch kg;
    kg.hits["a"] = {{"Q1", "one", ""}, {"Q2", "two", ""}, {"Q1", "one", ""}};
    kg.hits["b"] = {{"Q2", "two", ""}, {"Q3", "three", ""}};
    std::vector<std::string> kw{"a", "b", "a"};
    auto c = retrieve_candidates(kw, kg);
    std::vector<std::string> ids;
    for (const auto& x : c) ids.push_back(x.entity.id);
    CHECK(ids == std::vector<std::string>{"Q1", "Q2", "Q3"});

    std::vector<std::string> kw2{"pressure", "pressure", "atmospheric"};
    auto fixture_hits = retrieve_candidates(kw2, fixture::store());
    std::set<std::string> unique;
    for (const auto& x : fixture_hits) unique.insert(x.entity.id);
    CHECK(unique.size() == fixture_hits.size());
}

TEST_CASE("rerank agrees with brute-force scoring", "[tee]")
{
    std::vector<std::string> kw{"pressure", "blood"};
    const std::string description = "blood pressure measured at the arm";
    auto pool = retrieve_candidates(kw, fixture::store());
    std::vector<std::string> texts;
    for (const auto& c : pool) texts.push_back(c.full_text);
    auto expected = reference_totals(description, texts);

    std::vector<std::pair<double, std::string>> order;
    for (std::size_t i = 0; i < pool.size(); ++i) order.emplace_back(-expected[i], pool[i].entity.id);
    std::sort(order.begin(), order.end());

    auto ranked = rerank_candidates(description, pool, fixture::embedding(), 5);
    REQUIRE(ranked.size() == 5);
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        CHECK(ranked[i].entity.id == order[i].second);
        CHECK(ranked[i].stage3_score.total == Approx(-order[i].first).margin(1e-12));
        const auto& s = ranked[i].stage3_score;
        CHECK(s.total == Approx(0.4 * s.bm25_norm + 0.6 * s.emb));
        CHECK(s.total >= 0.0);
        CHECK(s.total <= 1.0);
    }
}

TEST_CASE("rerank edge cases", "[tee]")
{
    std::vector<ScoredCandidate> pool{candidate("Q9", "postal code", "code for mail"),
                                      candidate("Q2", "blood type", "classification of blood"),
                                      candidate("Q5", "postal code", "code for mail")};
    auto all = rerank_candidates("postal code", pool, fixture::embedding(), 10);
    REQUIRE(all.size() == 3);
    CHECK(all[0].entity.id == "Q5");  // equal totals, smaller id first
    CHECK(all[1].entity.id == "Q9");
    CHECK(all[0].stage3_score.total == all[1].stage3_score.total);

    // A candidate whose full text is the description itself comes first.
    auto exact = candidate("Q7", "mail code", "code for mail");
    pool.push_back(exact);
    CHECK(rerank_candidates(exact.full_text, pool, fixture::embedding(), 1)[0].entity.id == "Q7");

    CHECK_THROWS_AS(rerank_candidates("x", {}, fixture::embedding()), ContractError);
    CHECK_THROWS_AS(rerank_candidates("x", pool, fixture::embedding(), 0), ContractError);
}

TEST_CASE("disambiguation", "[tee]")
{
    std::vector<ScoredCandidate> c{candidate("Q1", "one", ""), candidate("Q2", "two", "")};
    c[0].stage3_score.total = 0.9;
    c[1].stage3_score.total = 0.4;

    SECTION("single candidate is forced")
    {
        auto o = scripted({"CHOICE: Q77"});
        auto d = disambiguate("x", std::span(c).first(1), *o);
        CHECK(d.index == 0);
        CHECK(d.flags == std::vector<std::string>{"forced_single"});
        CHECK(o->calls(OracleKind::Disambiguate) == 1);
    }
    SECTION("mock picks the top-ranked candidate")
    {
        auto o = fixture::mock_oracle();
        CHECK(disambiguate("x", c, *o).index == 0);
        std::swap(c[0].stage3_score, c[1].stage3_score);
        CHECK(disambiguate("x", c, *o).index == 1);
    }
    SECTION("oracle may pick a lower-ranked candidate")
    {
        auto o = scripted({"CHOICE: Q2"});
        auto d = disambiguate("x", c, *o);
        CHECK(d.index == 1);
        CHECK(d.flags.empty());
    }
    SECTION("one bad answer, then a good one")
    {
        auto o = scripted({"CHOICE: Q99", "CHOICE: Q2"});
        auto d = disambiguate("x", c, *o);
        CHECK(d.index == 1);
        CHECK(d.flags == std::vector<std::string>{"invalid_choice:Q99", "retried"});
    }
    SECTION("garbage twice falls back to the top-ranked candidate")
    {
        auto o = scripted({"CHOICE: Q99", "no idea"});
        auto d = disambiguate("x", c, *o);
        CHECK(d.index == 0);
        CHECK(d.flags == std::vector<std::string>{"invalid_choice:Q99", "unparseable_choice", "fallback_top_ranked"});
        CHECK(o->calls(OracleKind::Disambiguate) == 2);
    }
    std::vector<ScoredCandidate> six(6, c[0]);
    auto o = fixture::mock_oracle();
    CHECK_THROWS_AS(disambiguate("x", six, *o), ContractError);
    CHECK_THROWS_AS(disambiguate("x", std::span<const ScoredCandidate>{}, *o), ContractError);
}

TEST_CASE("topic entity for an ICD description", "[tee]")
{
    auto o = fixture::mock_oracle();
    AttributeSpec a{SchemaSide::Source, "claims", "icd_dgns_cd", "international classification of diseases code"};
    auto sel = extract_topic_entity(a, fixture::store(), fixture::embedding(), *o);
    REQUIRE(sel.found());
    CHECK(sel.chosen->id == "Q131");
    CHECK(sel.chosen->label == "ICD");
    CHECK(sel.tee_score.has_value());
    CHECK_FALSE(sel.keywords.empty());
}

TEST_CASE("empty descriptions", "[tee][degenerate]")
{
    auto o = fixture::mock_oracle();
    AttributeSpec blank{SchemaSide::Target, "t", "zz_flag", "   "};
    auto sel = extract_topic_entity(blank, fixture::store(), fixture::embedding(), *o);
    CHECK_FALSE(sel.found());
    CHECK(sel.flags == std::vector<std::string>{"empty_description", "no_candidates"});

    AttributeSpec named{SchemaSide::Target, "t", "postal_code", ""};
    auto fallback = extract_topic_entity(named, fixture::store(), fixture::embedding(), *o);
    CHECK(fallback.found());
    CHECK(fallback.text == "postal code");
    CHECK(fallback.flags.front() == "empty_description");

    TeeOptions strict;
    strict.name_fallback = false;
    auto none = extract_topic_entity(named, fixture::store(), fixture::embedding(), *o, strict);
    CHECK_FALSE(none.found());
    CHECK(none.candidates.empty());

    AttributeSpec stop{SchemaSide::Target, "t", "x", "the of and"};
    auto nokw = extract_topic_entity(stop, fixture::store(), fixture::embedding(), *o);
    CHECK_FALSE(nokw.found());
    CHECK(nokw.flags == std::vector<std::string>{"no_keywords"});
}

TEST_CASE("funnel over the fixture attributes", "[tee][property]")
{
    auto o = fixture::mock_oracle();
    const auto attrs = fixture::attributes();
    REQUIRE(attrs.size() == 50);
    std::size_t chosen = 0;
    for (const auto& a : attrs) {
        INFO(a.table_name << "." << a.attribute_name);
        auto sel = extract_topic_entity(a, fixture::store(), fixture::embedding(), *o);
        REQUIRE(sel.found());
        ++chosen;
        CHECK(sel.candidates.size() <= 5);
        CHECK(sel.candidates.size() <= sel.retrieved);
        if (sel.retrieved >= 5) CHECK(sel.candidates.size() == 5);
        CHECK(std::any_of(sel.candidates.begin(), sel.candidates.end(),
                          [&](const ScoredCandidate& c) { return c.entity.id == sel.chosen->id; }));
        for (const auto& c : sel.candidates) {
            CHECK(c.stage3_score.total == Approx(0.4 * c.stage3_score.bm25_norm + 0.6 * c.stage3_score.emb));
            CHECK(c.stage3_score.total >= 0.0);
            CHECK(c.stage3_score.total <= 1.0);
        }
        for (std::size_t i = 1; i < sel.candidates.size(); ++i)
            CHECK_FALSE(candidate_before(sel.candidates[i], sel.candidates[i - 1]));
    }
    CHECK(chosen == attrs.size());
}

TEST_CASE("topic extraction is deterministic", "[tee]")
{
    auto o1 = fixture::mock_oracle();
    auto o2 = fixture::mock_oracle();
    for (const auto& a : fixture::attributes()) {
        auto x = extract_topic_entity(a, fixture::store(), fixture::embedding(), *o1);
        auto y = extract_topic_entity(a, fixture::store(), fixture::embedding(), *o2);
        CHECK(to_json(x) == to_json(y));
    }
}
