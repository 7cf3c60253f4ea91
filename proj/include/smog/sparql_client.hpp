// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "smog/cache.hpp"
#include "smog/http.hpp"
#include "smog/kg.hpp"

namespace smog {

/// Fixed 1-hop query shapes. Each substitutes one entity id and, for the
/// tail queries, one relation id. Nothing else is ever generated.
enum class SparqlTemplate { ForwardRelations, BackwardRelations, ForwardTails, BackwardTails, Label };

constexpr std::string_view template_name(SparqlTemplate t) noexcept
{
    switch (t) {
    case SparqlTemplate::ForwardRelations: return "forward_relations";
    case SparqlTemplate::BackwardRelations: return "backward_relations";
    case SparqlTemplate::ForwardTails: return "forward_tails";
    case SparqlTemplate::BackwardTails: return "backward_tails";
    case SparqlTemplate::Label: return "label";
    }
    return "";
}

constexpr std::string_view template_text(SparqlTemplate t) noexcept
{
    // External-id, URL and media properties are dropped server side; the
    // explicit relation blocklist handles the rest.
    switch (t) {
    case SparqlTemplate::ForwardRelations:
        return "SELECT DISTINCT ?r ?rLabel WHERE { wd:{entity} ?p ?o . ?r wikibase:directClaim ?p . "
               "?r wikibase:propertyType ?t . "
               "FILTER(?t NOT IN (wikibase:ExternalId, wikibase:Url, wikibase:CommonsMedia)) "
               "SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". } }";
    case SparqlTemplate::BackwardRelations:
        return "SELECT DISTINCT ?r ?rLabel WHERE { ?s ?p wd:{entity} . ?r wikibase:directClaim ?p . "
               "SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". } }";
    case SparqlTemplate::ForwardTails:
        return "SELECT DISTINCT ?o ?oLabel ?oDescription WHERE { wd:{entity} wdt:{relation} ?o . "
               "SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". } } LIMIT 500";
    case SparqlTemplate::BackwardTails:
        return "SELECT DISTINCT ?o ?oLabel ?oDescription WHERE { ?o wdt:{relation} wd:{entity} . "
               "SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". } } LIMIT 500";
    case SparqlTemplate::Label:
        return "SELECT ?label WHERE { wd:{entity} rdfs:label ?label . "
               "FILTER(LANG(?label) = \"en\") } LIMIT 1";
    }
    return "";
}

/// Wikidata ids are plain word characters; anything else could alter the query.
inline bool is_safe_kg_id(std::string_view id) noexcept
{
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_';
    });
}

inline std::string render_sparql(SparqlTemplate t, std::string_view entity,
                                 std::string_view relation = {})
{
    if (!is_safe_kg_id(entity)) throw ContractError("unsafe entity id '" + std::string(entity) + "'");
    const bool needs_relation = t == SparqlTemplate::ForwardTails || t == SparqlTemplate::BackwardTails;
    if (needs_relation && !is_safe_kg_id(relation))
        throw ContractError("unsafe relation id '" + std::string(relation) + "'");
    std::string out(template_text(t));
    auto replace = [&out](std::string_view placeholder, std::string_view value) {
        auto pos = out.find(placeholder);
        out.replace(pos, placeholder.size(), value);
    };
    replace("{entity}", entity);
    if (needs_relation) replace("{relation}", relation);
    return out;
}

struct RemoteKgOptions {
    std::string sparql_endpoint = "https://query.wikidata.org/sparql";
    std::string search_endpoint = "https://www.wikidata.org/w/api.php";
    std::string entity_iri_prefix = "http://www.wikidata.org/entity/";
    double rate_limit = 5.0;  // requests per second, <= 0 disables
    RetryPolicy retry;
};

/// SPARQL endpoint plus `wbsearchentities`, with caching, rate limiting and
/// bounded retries. Safe for concurrent use.
class RemoteKnowledgeGraph final : public KnowledgeGraph {
  public:
    RemoteKnowledgeGraph(std::shared_ptr<HttpTransport> transport, RemoteKgOptions options = {},
                         std::shared_ptr<DiskCache> cache = nullptr)
        : transport_(std::move(transport)),
          options_(std::move(options)),
          cache_(std::move(cache)),
          limiter_(options_.rate_limit)
    {}

    static HttpRequest sparql_request(const RemoteKgOptions& options, const std::string& query)
    {
        HttpRequest r;
        r.url = options.sparql_endpoint;
        r.params = {{"query", query}, {"format", "json"}};
        r.headers = {{"Accept", "application/sparql-results+json"}};
        return r;
    }

    static HttpRequest search_request(const RemoteKgOptions& options, std::string_view query,
                                      std::size_t limit)
    {
        HttpRequest r;
        r.url = options.search_endpoint;
        r.params = {{"action", "wbsearchentities"}, {"search", std::string(query)},
                    {"language", "en"},            {"uselang", "en"},
                    {"type", "item"},              {"format", "json"},
                    {"limit", std::to_string(std::min<std::size_t>(limit, 50))}};
        return r;
    }

  protected:
    std::vector<EntityRef> do_search_entities(std::string_view query,
                                              std::size_t limit) const override
    {
        auto body = fetch("search\x1f" + std::string(query) + "\x1f" + std::to_string(limit),
                          search_request(options_, query, limit), [](const nlohmann::json& doc) {
                              if (doc.contains("error")) throw ProtocolError("search API error");
                              if (!doc.at("search").is_array()) throw ProtocolError("search not an array");
                          });
        return guarded([&] {
            std::vector<EntityRef> out;
            const auto doc = parse(body);
            for (const auto& hit : doc.at("search")) {
                if (out.size() == limit) break;
                out.push_back(EntityRef{hit.at("id").get<std::string>(), hit.value("label", ""),
                                        hit.value("description", "")});
            }
            return out;
        });
    }

    std::vector<RelationRef> do_adjacent_relations(std::string_view entity,
                                                   Direction direction) const override
    {
        if (!is_safe_kg_id(entity)) return {};
        auto t = direction == Direction::Forward ? SparqlTemplate::ForwardRelations
                                                 : SparqlTemplate::BackwardRelations;
        auto rows = bindings(t, entity, {});
        auto out = guarded([&] {
            std::vector<RelationRef> refs;
            for (const auto& b : rows) {
                auto id = strip_iri(b.at("r").at("value").get<std::string>());
                auto label = b.contains("rLabel") ? b.at("rLabel").at("value").get<std::string>() : id;
                refs.push_back(RelationRef{id, label});
            }
            return refs;
        });
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const auto& a, const auto& b) { return a.id == b.id; }),
                  out.end());
        return out;
    }

    std::vector<EntityRef> do_linked_entities(std::string_view entity, std::string_view relation,
                                              Direction direction, std::size_t cap) const override
    {
        if (!is_safe_kg_id(entity) || !is_safe_kg_id(relation)) return {};
        auto t = direction == Direction::Forward ? SparqlTemplate::ForwardTails
                                                 : SparqlTemplate::BackwardTails;
        auto rows = bindings(t, entity, relation);
        auto out = guarded([&] {
            std::vector<EntityRef> refs;
            for (const auto& b : rows) {
                const auto& o = b.at("o");
                const auto value = o.at("value").get<std::string>();
                if (o.at("type") == "uri" && value.starts_with(options_.entity_iri_prefix)) {
                    auto id = strip_iri(value);
                    auto text = [&b, &id](const char* var) {
                        return b.contains(var) ? b.at(var).at("value").get<std::string>() : id;
                    };
                    refs.push_back(EntityRef{id, text("oLabel"),
                                             b.contains("oDescription") ? text("oDescription") : ""});
                } else {
                    auto lit = literal_entity(value);
                    remember_literal(lit);
                    refs.push_back(std::move(lit));
                }
            }
            return refs;
        });
        // The endpoint gives no order; sort by id for reproducible traces.
        std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        out.erase(std::unique(out.begin(), out.end(),
                              [](const auto& a, const auto& b) { return a.id == b.id; }),
                  out.end());
        if (out.size() > cap) out.resize(cap);
        return out;
    }

    std::map<std::string, std::string> do_fetch_labels(
        std::span<const std::string> ids) const override
    {
        std::map<std::string, std::string> out;
        for (const auto& id : ids) {
            if (is_literal_id(id)) {
                std::lock_guard lock(literal_mutex_);
                if (auto it = literals_.find(id); it != literals_.end()) out.emplace(id, it->second);
                continue;
            }
            if (!is_safe_kg_id(id)) continue;
            auto rows = bindings(SparqlTemplate::Label, id, {});
            if (!rows.empty())
                out.emplace(id, guarded([&] { return rows.front().at("label").at("value").get<std::string>(); }));
        }
        return out;
    }

  private:
    template <typename Fn>
    static auto guarded(Fn&& fn) -> decltype(fn())
    {
        try {
            return fn();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("unexpected response shape: ") + e.what());
        }
    }

    static nlohmann::json parse(const std::string& body)
    {
        try {
            return nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed JSON response: ") + e.what());
        }
    }

    template <typename Validate>
    std::string fetch(const std::string& key, const HttpRequest& request, Validate validate) const
    {
        if (cache_) {
            if (auto hit = cache_->get(key)) return *hit;
        }
        auto body = with_retries(options_.retry, [&] {
            limiter_.acquire();
            return check_status(transport_->send(request), request.url).body;
        });
        guarded([&] { validate(parse(body)); });
        if (cache_) cache_->put(key, body);
        return body;
    }

    nlohmann::json bindings(SparqlTemplate t, std::string_view entity,
                            std::string_view relation) const
    {
        auto query = render_sparql(t, entity, relation);
        auto key = "sparql\x1f" + std::string(template_name(t)) + "\x1f" + std::string(entity) +
                   "\x1f" + std::string(relation);
        auto body = fetch(key, sparql_request(options_, query), [](const nlohmann::json& doc) {
            if (!doc.at("results").at("bindings").is_array())
                throw ProtocolError("bindings not an array");
        });
        return guarded([&] {
            auto rows = parse(body).at("results").at("bindings");
            for (const auto& row : rows) {
                if (!row.is_object()) throw ProtocolError("binding row is not an object");
            }
            return rows;
        });
    }

    std::string strip_iri(const std::string& iri) const
    {
        if (iri.starts_with(options_.entity_iri_prefix))
            return iri.substr(options_.entity_iri_prefix.size());
        throw ProtocolError("unexpected IRI " + iri);
    }

    void remember_literal(const EntityRef& lit) const
    {
        std::lock_guard lock(literal_mutex_);
        literals_.emplace(lit.id, lit.label);
    }

    std::shared_ptr<HttpTransport> transport_;
    RemoteKgOptions options_;
    std::shared_ptr<DiskCache> cache_;
    mutable RateLimiter limiter_;
    mutable std::mutex literal_mutex_;
    mutable std::map<std::string, std::string> literals_;
};

}  // namespace smog
