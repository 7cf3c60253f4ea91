// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "support.hpp"

using namespace smog;

namespace {

const AttributePair& find_pair(const std::vector<AttributePair>& pairs, std::string_view src, std::string_view tgt)
{
    for (const auto& p : pairs)
        if (p.source.attribute_name == src && p.target.attribute_name == tgt) return p;
    throw std::runtime_error("no fixture pair " + std::string(src) + "/" + std::string(tgt));
}

MatchDecision run(const AttributePair& p, MockPolicy policy = {}, MatchConfig cfg = {})
{
    auto oracle = fixture::mock_oracle(std::move(policy));
    return match_pair(p, fixture::store(), *oracle, fixture::embedding(), cfg);
}

std::string dump(const std::vector<MatchDecision>& ds)
{
    std::string out;
    for (const auto& d : ds) out += to_json(d).dump() + "\n";
    return out;
}

}  // namespace

TEST_CASE("matching question", "[matcher]")
{
    const auto pairs = fixture::pairs();
    const auto& p = pairs.front();
    CHECK(build_question(p) == build_question(p));
    CHECK(fixture::matches_golden("question_gender.txt", build_question(p)));

    AttributePair swapped{p.target, p.source, p.gold_label};
    const auto q = build_question(p);
    const auto s = build_question(swapped);
    CHECK(q != s);
    CHECK(s.find("Source attribute: person.sex_concept_id") != std::string::npos);
    CHECK(q.find("Source attribute: beneficiary.gender_code") != std::string::npos);
    CHECK(s.substr(0, s.find('\n')) == q.substr(0, q.find('\n')));

    AttributePair bare = p;
    bare.source.description.clear();
    CHECK(build_question(bare).find("Source description: (none)") != std::string::npos);
}

TEST_CASE("linked pair is matched through one relation", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto d = run(find_pair(pairs, "gender_code", "sex_concept_id"));
    CHECK(d.predicted);
    CHECK(d.stop_mode == StopMode::AnswerFound);
    REQUIRE_FALSE(d.chains.empty());
    CHECK(d.chains.front().depth() == 1);
    REQUIRE(d.tee_source.chosen);
    REQUIRE(d.tee_target.chosen);
    CHECK(d.question.find(std::string(kSourceAnchor) + d.tee_source.chosen->id) != std::string::npos);
    CHECK(d.question.find(std::string(kTargetAnchor) + d.tee_target.chosen->id) != std::string::npos);
}

TEST_CASE("unrelated pair ends in a half stop", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto d = run(find_pair(pairs, "race_code", "drug_concept_id"));
    CHECK_FALSE(d.predicted);
    CHECK(d.stop_mode == StopMode::HalfStop);
    CHECK(d.tee_source.found());
    CHECK(d.tee_target.found());
    CHECK_FALSE(d.chains.empty());
    CHECK(d.verdict.flags.empty());
}

TEST_CASE("isolated topic entities leave no paths", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto d = run(find_pair(pairs, "smoking_cd", "marital_status"));
    CHECK_FALSE(d.predicted);
    CHECK(d.stop_mode == StopMode::NoPaths);
    CHECK(d.tee_source.found());
    CHECK(d.tee_target.found());
    CHECK(d.chains.empty());
}

TEST_CASE("no topic entity on either side", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto d = run(find_pair(pairs, "zz_flag", "qq_value"));
    CHECK_FALSE(d.predicted);
    CHECK(d.stop_mode == StopMode::NoTopicEntity);
    CHECK(d.chains.empty());
    CHECK_FALSE(d.exploration);
    CHECK(d.verdict.flags == std::vector<std::string>{"no_topic_entity"});
}

TEST_CASE("one missing side still explores from the other", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto d = run(find_pair(pairs, "qqq_field", "sex_concept_id"));
    CHECK_FALSE(d.tee_source.found());
    CHECK(d.tee_target.found());
    CHECK(d.stop_mode != StopMode::NoTopicEntity);
    CHECK(d.exploration);
    CHECK_FALSE(d.predicted);
}

TEST_CASE("every fixture pair is decided correctly by the mock", "[matcher]")
{
    const auto pairs = fixture::pairs();
    auto oracle = fixture::mock_oracle();
    const auto ds = match_all(pairs, fixture::store(), *oracle, fixture::embedding());
    REQUIRE(ds.size() == pairs.size());
    for (const auto& d : ds) {
        INFO(pair_key(d.pair));
        CHECK(d.predicted == *d.pair.gold_label);
    }
    auto m = compute_metrics([&] {
        std::vector<DecisionRecord> r;
        for (const auto& d : ds) r.push_back(record_of(d));
        return r;
    }());
    CHECK(m.f1 == 1.0);
}

TEST_CASE("decisions are reproducible and independent of worker count", "[matcher][property]")
{
    const auto pairs = fixture::pairs();
    auto o1 = fixture::mock_oracle();
    auto o2 = fixture::mock_oracle();
    auto o3 = fixture::mock_oracle();
    const auto seq = dump(match_all(pairs, fixture::store(), *o1, fixture::embedding()));
    CHECK(seq == dump(match_all(pairs, fixture::store(), *o2, fixture::embedding())));

    std::vector<std::string> order;
    std::string par;
    match_dataset(pairs, fixture::store(), *o3, fixture::embedding(), {}, 4, [&](const MatchDecision& d) {
        order.push_back(pair_key(d.pair));
        par += to_json(d).dump() + "\n";
    });
    CHECK(par == seq);
    REQUIRE(order.size() == pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) CHECK(order[i] == pair_key(pairs[i]));
}

TEST_CASE("worker exceptions propagate", "[matcher]")
{
    auto pairs = fixture::pairs();
    auto model = std::make_shared<FunctionChatModel>([](const OracleRequest&) -> std::string {
        throw TransientError("backend down");
    });
    Oracle oracle(model);
    CHECK_THROWS_AS(match_all(pairs, fixture::store(), oracle, fixture::embedding(), {}, 3), TransientError);
}

TEST_CASE("failure branches never predict a match", "[matcher][property]")
{
    const auto pairs = fixture::pairs();
    const std::vector<std::set<OracleKind>> broken{
        {OracleKind::Disambiguate},
        {OracleKind::ScoreRelations},
        {OracleKind::ScoreEntities},
        {OracleKind::JudgeSufficiency},
        {OracleKind::FinalAnswer},
        {OracleKind::ScoreRelations, OracleKind::ScoreEntities, OracleKind::JudgeSufficiency, OracleKind::FinalAnswer},
    };
    for (const auto& kinds : broken) {
        MockPolicy policy;
        policy.malformed = kinds;
        auto oracle = fixture::mock_oracle(policy);
        for (const auto& d : match_all(pairs, fixture::store(), *oracle, fixture::embedding())) {
            INFO(pair_key(d.pair));
            if (!*d.pair.gold_label) CHECK_FALSE(d.predicted);
            if (kinds.contains(OracleKind::FinalAnswer)) CHECK_FALSE(d.predicted);
        }
    }
}

TEST_CASE("chains are empty exactly when nothing survived", "[matcher][property]")
{
    const auto pairs = fixture::pairs();
    for (auto sufficiency : {MockPolicy::Sufficiency::Rule, MockPolicy::Sufficiency::Never}) {
        for (std::size_t d_max : {1u, 2u, 3u}) {
            MockPolicy policy;
            policy.sufficiency = sufficiency;
            MatchConfig cfg;
            cfg.beam.d_max = d_max;
            auto oracle = fixture::mock_oracle(policy);
            for (const auto& d : match_all(pairs, fixture::store(), *oracle, fixture::embedding(), cfg)) {
                INFO(pair_key(d.pair));
                const bool nothing = d.stop_mode == StopMode::NoPaths || d.stop_mode == StopMode::NoTopicEntity;
                CHECK(d.chains.empty() == nothing);
                for (const auto& c : d.chains) CHECK(c.depth() <= d_max);
            }
        }
    }
}

TEST_CASE("the trace is enough to replay scores and funnel sizes", "[matcher][property]")
{
    const auto pairs = fixture::pairs();
    auto oracle = fixture::mock_oracle();
    for (const auto& d : match_all(pairs, fixture::store(), *oracle, fixture::embedding())) {
        INFO(pair_key(d.pair));
        for (const auto& c : d.chains) {
            double s = 1.0;
            for (const auto& h : c.hops) s = s * (h.s_rel * h.s_ent);
            CHECK(s == c.s_path);
        }
        for (const auto* side : {&d.tee_source, &d.tee_target}) {
            CHECK(side->candidates.size() <= 5);
            CHECK(side->candidates.size() <= side->retrieved);
            CHECK(side->retrieved <= 5 * side->keywords.size());
            if (side->chosen) {
                REQUIRE(side->tee_score);
                CHECK(std::any_of(side->candidates.begin(), side->candidates.end(),
                                  [&](const ScoredCandidate& c) { return c.entity.id == side->chosen->id; }));
            }
        }
        if (d.exploration) {
            const auto& ex = *d.exploration;
            CHECK(ex.trace.size() == ex.rounds);
            for (const auto& round : ex.trace) {
                CHECK(round.beam.size() <= 3);
                for (const auto& e : round.expansions) {
                    CHECK(e.relations_kept <= e.relations_retrieved);
                    CHECK(e.relations_selected.size() <= 5);
                    CHECK(e.extensions <= e.relations_selected.size() * 5);
                }
            }
        }
        auto j = to_json(d);
        auto back = record_from_json(j);
        CHECK(back.key == pair_key(d.pair));
        CHECK(back.chain_depths == record_of(d).chain_depths);
    }
}

TEST_CASE("decision trace files", "[matcher][data]")
{
    const auto pairs = fixture::pairs();
    auto oracle = fixture::mock_oracle();
    auto ds = match_all(pairs, fixture::store(), *oracle, fixture::embedding());
    std::istringstream in(dump(ds));
    auto records = read_decision_records(in);
    REQUIRE(records.size() == pairs.size());
    for (auto& r : records) r.gold.reset();
    align_with_gold(records, pairs);
    CHECK(compute_metrics(records).f1 == 1.0);

    auto partial = records;
    partial.push_back(partial.front());
    CHECK_THROWS_AS(align_with_gold(partial, pairs), DataError);

    auto missing = records;
    missing.front().key = "nowhere";
    CHECK_THROWS_AS(align_with_gold(missing, pairs), DataError);

    std::istringstream broken(to_json(ds[0]).dump() + "\n{not json\n");
    try {
        read_decision_records(broken);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.line() == 2);
    }

    auto j = to_json(ds[0]);
    j["schema"] = "smog.decision/0";
    std::istringstream old(j.dump() + "\n");
    CHECK_THROWS_AS(read_decision_records(old), DataError);

    std::vector<AttributePair> twice{pairs[0], pairs[0]};
    CHECK(occurrences(twice) == std::vector<std::size_t>{0, 1});
}

TEST_CASE("stop mode names", "[matcher]")
{
    for (auto m : {StopMode::AnswerFound, StopMode::HalfStop, StopMode::NoPaths, StopMode::NoTopicEntity})
        CHECK(parse_stop_mode(to_string(m)) == m);
    CHECK_THROWS(parse_stop_mode("Whatever"));
}
