// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "smog/error.hpp"
#include "smog/hash.hpp"

namespace smog {

enum class Direction { Forward, Backward };

constexpr std::string_view to_string(Direction d) noexcept
{
    return d == Direction::Forward ? "forward" : "backward";
}

inline Direction parse_direction(std::string_view s)
{
    if (s == "forward") return Direction::Forward;
    if (s == "backward") return Direction::Backward;
    throw DataError("unknown direction '" + std::string(s) + "'");
}

/// A KG node. `id` is the dedup key inside any candidate collection.
struct EntityRef {
    std::string id;
    std::string label;
    std::string description;

    friend bool operator==(const EntityRef&, const EntityRef&) = default;
};

struct RelationRef {
    std::string id;
    std::string label;

    friend bool operator==(const RelationRef&, const RelationRef&) = default;
};

/// `object` is an entity id, or a literal wrapped in double quotes.
struct Triple {
    std::string subject;
    std::string predicate;
    std::string object;
};

inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
inline constexpr std::string_view kLiteralPrefix = "literal:";

inline bool is_literal_id(std::string_view id) noexcept { return id.starts_with(kLiteralPrefix); }

/// Literal values travel through paths as synthetic entities so every hop looks alike.
inline EntityRef literal_entity(std::string_view text)
{
    return EntityRef{std::string(kLiteralPrefix) + hash_hex(text), std::string(text), {}};
}

/// Read access to a knowledge graph. Public members check preconditions and
/// forward to the backend hooks, so every backend shares one contract.
class KnowledgeGraph {
  public:
    virtual ~KnowledgeGraph() = default;

    /// Entities (not relations) whose label matches `query`, most relevant first,
    /// at most `limit`.
    std::vector<EntityRef> search_entities(std::string_view query, std::size_t limit) const
    {
        if (query.empty()) throw ContractError("search_entities: empty query");
        if (limit == 0) throw ContractError("search_entities: limit must be >= 1");
        return do_search_entities(query, limit);
    }

    /// Distinct predicates with `entity` as subject (Forward) or object (Backward),
    /// ascending by id. Unknown entities yield an empty list.
    std::vector<RelationRef> adjacent_relations(std::string_view entity, Direction direction) const
    {
        if (entity.empty()) throw ContractError("adjacent_relations: empty entity id");
        return do_adjacent_relations(entity, direction);
    }

    /// Neighbours of `entity` over `relation`, ascending by id, at most `cap`.
    std::vector<EntityRef> linked_entities(std::string_view entity, std::string_view relation,
                                           Direction direction, std::size_t cap) const
    {
        if (entity.empty() || relation.empty())
            throw ContractError("linked_entities: empty entity or relation id");
        if (cap == 0) throw ContractError("linked_entities: cap must be >= 1");
        return do_linked_entities(entity, relation, direction, cap);
    }

    /// Labels for the known ids among `ids`; unknown ids are left out.
    std::map<std::string, std::string> fetch_labels(std::span<const std::string> ids) const
    {
        if (ids.empty()) return {};
        return do_fetch_labels(ids);
    }

  protected:
    virtual std::vector<EntityRef> do_search_entities(std::string_view query,
                                                      std::size_t limit) const = 0;
    virtual std::vector<RelationRef> do_adjacent_relations(std::string_view entity,
                                                           Direction direction) const = 0;
    virtual std::vector<EntityRef> do_linked_entities(std::string_view entity,
                                                      std::string_view relation,
                                                      Direction direction,
                                                      std::size_t cap) const = 0;
    virtual std::map<std::string, std::string> do_fetch_labels(
        std::span<const std::string> ids) const = 0;
};

}  // namespace smog
