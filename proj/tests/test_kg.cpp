// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <sstream>

#include "support.hpp"

using namespace smog;

namespace {

const std::vector<Triple> kTriples = {
    {"Q1", "P1", "Q2"}, {"Q1", "P1", "Q3"}, {"Q1", "P2", "Q3"}, {"Q2", "P2", "Q3"},
    {"Q3", "P1", "\"plain text\""}, {"Q4", "P2", "Q1"}, {"Q1", "P1", "Q2"},
};

const std::map<std::string, LocalStore::Label> kLabels = {
    {"Q1", {"alpha", "first letter", {}}}, {"Q2", {"beta", "second letter", {}}},
    {"Q3", {"gamma", "third letter", {}}}, {"Q4", {"alpha beta", "a pair", {}}},
    {"P1", {"links to", "", {}}},         {"P2", {"related to", "", {}}},
};

const std::string kIri = "http://www.wikidata.org/entity/";

nlohmann::json uri(const std::string& id) { return {{"type", "uri"}, {"value", kIri + id}}; }
nlohmann::json lit(const std::string& s) { return {{"type", "literal"}, {"value", s}}; }

nlohmann::json sparql_body(const nlohmann::json& rows)
{
    return {{"head", {{"vars", nlohmann::json::array()}}}, {"results", {{"bindings", rows}}}};
}

/// Wikidata-shaped recordings of the small graph above, answered by the
/// in-memory store so both backends face identical data.
std::shared_ptr<RecordedTransport> recorded_graph()
{
    auto t = std::make_shared<RecordedTransport>();
    const RemoteKgOptions o;
    const LocalStore local(kTriples, kLabels);
    auto rec = [&](SparqlTemplate tpl, const std::string& e, const std::string& r, const nlohmann::json& rows) {
        t->record(RemoteKnowledgeGraph::sparql_request(o, render_sparql(tpl, e, r)),
                  {200, sparql_body(rows).dump()});
    };
    rec(SparqlTemplate::ForwardTails, "Q1", "P9", nlohmann::json::array());
    for (std::string e : {"Q1", "Q2", "Q3", "Q4", "Q999"}) {
        for (auto dir : {Direction::Forward, Direction::Backward}) {
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : local.adjacent_relations(e, dir)) {
                rows.push_back({{"r", uri(r.id)}, {"rLabel", lit(r.label)}});
                nlohmann::json tails = nlohmann::json::array();
                for (const auto& n : local.linked_entities(e, r.id, dir, kUnbounded)) {
                    if (is_literal_id(n.id))
                        tails.push_back({{"o", lit(n.label)}});
                    else
                        tails.push_back({{"o", uri(n.id)}, {"oLabel", lit(n.label)}, {"oDescription", lit(n.description)}});
                }
                rec(dir == Direction::Forward ? SparqlTemplate::ForwardTails : SparqlTemplate::BackwardTails, e,
                    r.id, tails);
            }
            rec(dir == Direction::Forward ? SparqlTemplate::ForwardRelations : SparqlTemplate::BackwardRelations, e,
                "", rows);
        }
        nlohmann::json label = nlohmann::json::array();
        if (auto it = kLabels.find(e); it != kLabels.end()) label.push_back({{"label", lit(it->second.label)}});
        rec(SparqlTemplate::Label, e, "", label);
    }
    for (std::string q : {"alpha", "beta", "zzz"}) {
        for (std::size_t limit : {1, 5}) {
            nlohmann::json hits = nlohmann::json::array();
            for (const auto& h : local.search_entities(q, limit))
                hits.push_back({{"id", h.id}, {"label", h.label}, {"description", h.description}});
            t->record(RemoteKnowledgeGraph::search_request(o, q, limit), {200, nlohmann::json{{"search", hits}}.dump()});
        }
    }
    return t;
}

struct LocalBackend {
    static std::shared_ptr<KnowledgeGraph> make() { return std::make_shared<LocalStore>(kTriples, kLabels); }
};

struct RemoteBackend {
    static std::shared_ptr<KnowledgeGraph> make()
    {
        RemoteKgOptions o;
        o.rate_limit = 0;
        return std::make_shared<RemoteKnowledgeGraph>(recorded_graph(), o);
    }
};

std::vector<std::string> ids(const std::vector<EntityRef>& v)
{
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.id);
    return out;
}

std::vector<std::string> ids(const std::vector<RelationRef>& v)
{
    std::vector<std::string> out;
    for (const auto& e : v) out.push_back(e.id);
    return out;
}

}  // namespace

TEMPLATE_TEST_CASE("kg contract: adjacency", "[kg]", LocalBackend, RemoteBackend)
{
    auto kg = TestType::make();
    CHECK(ids(kg->adjacent_relations("Q1", Direction::Forward)) == std::vector<std::string>{"P1", "P2"});
    CHECK(ids(kg->adjacent_relations("Q1", Direction::Backward)) == std::vector<std::string>{"P2"});
    CHECK(ids(kg->adjacent_relations("Q3", Direction::Backward)) == std::vector<std::string>{"P1", "P2"});
    CHECK(kg->adjacent_relations("Q999", Direction::Forward).empty());
    CHECK(kg->adjacent_relations("Q1", Direction::Forward)[0].label == "links to");
}

TEMPLATE_TEST_CASE("kg contract: linked entities", "[kg]", LocalBackend, RemoteBackend)
{
    auto kg = TestType::make();
    CHECK(ids(kg->linked_entities("Q1", "P1", Direction::Forward, 10)) == std::vector<std::string>{"Q2", "Q3"});
    CHECK(ids(kg->linked_entities("Q1", "P1", Direction::Forward, 1)) == std::vector<std::string>{"Q2"});
    CHECK(ids(kg->linked_entities("Q3", "P2", Direction::Backward, 10)) == std::vector<std::string>{"Q1", "Q2"});
    CHECK(kg->linked_entities("Q1", "P9", Direction::Forward, 10).empty());

    auto lits = kg->linked_entities("Q3", "P1", Direction::Forward, 10);
    REQUIRE(lits.size() == 1);
    CHECK(is_literal_id(lits[0].id));
    CHECK(lits[0].label == "plain text");
    CHECK(lits[0].id == literal_entity("plain text").id);

    auto beta = kg->linked_entities("Q1", "P1", Direction::Forward, 1);
    CHECK(beta[0].label == "beta");
    CHECK(beta[0].description == "second letter");
}

TEMPLATE_TEST_CASE("kg contract: preconditions", "[kg]", LocalBackend, RemoteBackend)
{
    auto kg = TestType::make();
    CHECK_THROWS_AS(kg->search_entities("", 5), ContractError);
    CHECK_THROWS_AS(kg->search_entities("alpha", 0), ContractError);
    CHECK_THROWS_AS(kg->linked_entities("Q1", "P1", Direction::Forward, 0), ContractError);
    CHECK_THROWS_AS(kg->linked_entities("", "P1", Direction::Forward, 1), ContractError);
    CHECK_THROWS_AS(kg->adjacent_relations("", Direction::Forward), ContractError);
}

TEMPLATE_TEST_CASE("kg contract: search and labels", "[kg]", LocalBackend, RemoteBackend)
{
    auto kg = TestType::make();
    auto hits = kg->search_entities("alpha", 5);
    CHECK(ids(hits) == std::vector<std::string>{"Q1", "Q4"});
    CHECK(kg->search_entities("alpha", 1).size() == 1);
    CHECK(kg->search_entities("zzz", 5).empty());

    std::vector<std::string> want{"Q1", "Q2", "Q999"};
    auto labels = kg->fetch_labels(want);
    CHECK(labels == std::map<std::string, std::string>{{"Q1", "alpha"}, {"Q2", "beta"}});
    CHECK(kg->fetch_labels(std::vector<std::string>{}).empty());
}

TEST_CASE("local store: loading", "[kg][local]")
{
    std::istringstream triples("# comment\nQ1\tP1\tQ2\r\nQ2\tP1\t\"x\"\n");
    std::istringstream labels("Q1\tone\tfirst\tuno|eins\nQ2\ttwo\nP1\trel\n");
    auto kg = LocalStore::parse(triples, labels);
    CHECK(kg.edge_count() == 2);
    CHECK(ids(kg.search_entities("eins", 5)) == std::vector<std::string>{"Q1"});
    CHECK(kg.search_entities("rel", 5).empty());  // relations are not entities

    std::istringstream bad_triples("Q1\tP1\n");
    std::istringstream ok_labels("");
    try {
        LocalStore::parse(bad_triples, ok_labels);
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(e.line() == 1);
    }
    CHECK_THROWS_AS(LocalStore::load("/nonexistent/t.tsv", "/nonexistent/l.tsv"), DataError);
    CHECK_THROWS_AS(LocalStore::load(fixture::data_dir(), fixture::data_dir() / "kg_labels.tsv"), DataError);
}

TEST_CASE("local store: search ranking", "[kg][local]")
{
    const auto& kg = fixture::store();
    auto hits = kg.search_entities("pressure", 5);
    REQUIRE(hits.size() == 5);
    CHECK(hits[0].label == "pressure");  // exact label first
    CHECK(ids(kg.search_entities("ICD", 5))[0] == "Q131");
    CHECK(ids(kg.search_entities("international classification", 5)) == std::vector<std::string>{"Q131"});
    CHECK(kg.linked_entities("Q400", "P527", Direction::Forward, kUnbounded).size() == 50);
}

TEST_CASE("remote kg: caching avoids repeat requests", "[kg][remote]")
{
    fixture::TempDir dir;
    auto transport = recorded_graph();
    RemoteKgOptions o;
    o.rate_limit = 0;
    auto cache = std::make_shared<DiskCache>(dir.path);
    RemoteKnowledgeGraph kg(transport, o, cache);
    auto first = kg.adjacent_relations("Q1", Direction::Forward);
    const auto calls = transport->calls();
    RemoteKnowledgeGraph again(transport, o, cache);
    CHECK(ids(again.adjacent_relations("Q1", Direction::Forward)) == ids(first));
    CHECK(transport->calls() == calls);
}

TEST_CASE("remote kg: transport failures", "[kg][remote]")
{
    struct Flaky final : HttpTransport {
        int failures;
        int calls = 0;
        explicit Flaky(int f) : failures(f) {}
        HttpResponse send(const HttpRequest&) override
        {
            ++calls;
            if (calls <= failures) return {503, "busy"};
            return {200, sparql_body(nlohmann::json::array({{{"r", uri("P5")}, {"rLabel", lit("five")}}})).dump()};
        }
    };
    RemoteKgOptions o;
    o.rate_limit = 0;
    std::vector<std::chrono::milliseconds> sleeps;
    o.retry.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };

    auto ok = std::make_shared<Flaky>(2);
    RemoteKnowledgeGraph kg(ok, o);
    CHECK(ids(kg.adjacent_relations("Q1", Direction::Forward)) == std::vector<std::string>{"P5"});
    CHECK(ok->calls == 3);
    CHECK(sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250), std::chrono::milliseconds(500)});

    auto dead = std::make_shared<Flaky>(10);
    RemoteKnowledgeGraph down(dead, o);
    CHECK_THROWS_AS(down.adjacent_relations("Q1", Direction::Forward), TransientError);
    CHECK(dead->calls == 3);

    RemoteKnowledgeGraph missing(std::make_shared<RecordedTransport>(), o);
    CHECK_THROWS_AS(missing.adjacent_relations("Q1", Direction::Forward), ProtocolError);

    auto garbage = std::make_shared<RecordedTransport>();
    garbage->record(RemoteKnowledgeGraph::sparql_request(o, render_sparql(SparqlTemplate::ForwardRelations, "Q1")),
                    {200, "{not json"});
    RemoteKnowledgeGraph broken(garbage, o);
    CHECK_THROWS_AS(broken.adjacent_relations("Q1", Direction::Forward), ProtocolError);
}

TEST_CASE("sparql templates reject unsafe ids", "[kg][remote]")
{
    CHECK_THROWS_AS(render_sparql(SparqlTemplate::ForwardRelations, "Q1 } DROP"), ContractError);
    CHECK_THROWS_AS(render_sparql(SparqlTemplate::ForwardTails, "Q1", "P1>"), ContractError);
    auto q = render_sparql(SparqlTemplate::BackwardTails, "Q42", "P21");
    CHECK(q.find("wdt:P21 wd:Q42") != std::string::npos);
}

TEST_CASE("real transport refuses when networking is disabled", "[kg][net]")
{
    ::setenv("SMOG_NO_NETWORK", "1", 1);
    const auto before = net::connection_attempts().load();
    HttplibTransport t;
    HttpRequest r;
    r.url = "https://query.wikidata.org/sparql";
    CHECK_THROWS_AS(t.send(r), TransientError);
    CHECK(net::connection_attempts().load() == before);
}
