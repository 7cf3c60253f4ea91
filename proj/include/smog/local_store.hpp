// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "smog/kg.hpp"
#include "smog/text.hpp"

namespace smog {

/// In-memory triple store with subject and object adjacency indexes.
/// Immutable after construction, so a single instance can serve many
/// concurrent explorations.
///
/// Load format, both files tab-separated, `#` comments allowed:
///   triples: subject  predicate  object     (object in double quotes = literal)
///   labels:  id  label  [description  [aliases]]   (aliases separated by '|')
class LocalStore final : public KnowledgeGraph {
  public:
    struct Label {
        std::string label;
        std::string description;
        std::vector<std::string> aliases;
    };

    LocalStore() = default;

    LocalStore(const std::vector<Triple>& triples, std::map<std::string, Label> labels)
        : labels_(std::move(labels))
    {
        for (const auto& t : triples) {
            if (t.subject.empty() || t.predicate.empty() || t.object.empty())
                throw DataError("triple with an empty component");
            std::string object = t.object;
            if (object.size() >= 2 && object.front() == '"' && object.back() == '"') {
                auto lit = literal_entity(std::string_view(object).substr(1, object.size() - 2));
                labels_.emplace(lit.id, Label{lit.label, {}, {}});
                object = lit.id;
            }
            out_[t.subject].push_back({t.predicate, object});
            in_[object].push_back({t.predicate, t.subject});
        }
        for (auto* index : {&out_, &in_}) {
            for (auto& [_, edges] : *index) {
                std::sort(edges.begin(), edges.end());
                edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
            }
        }
        std::set<std::string> predicates;
        for (const auto& t : triples) predicates.insert(t.predicate);
        for (const auto& [id, label] : labels_) {
            if (is_literal_id(id) || predicates.contains(id)) continue;
            searchable_.push_back({id, to_lower(label.label), split_words(label.label)});
            for (const auto& alias : label.aliases)
                searchable_.push_back({id, to_lower(alias), split_words(alias)});
        }
    }

    static LocalStore parse(std::istream& triples, std::istream& labels)
    {
        std::vector<Triple> parsed;
        std::size_t line_no = 0;
        for (std::string line; std::getline(triples, line);) {
            ++line_no;
            if (skip_line(line)) continue;
            auto fields = split_tabs(line);
            if (fields.size() != 3)
                throw DataError("expected 3 tab-separated fields in triples file", line_no);
            if (fields[0].empty() || fields[1].empty() || fields[2].empty())
                throw DataError("empty field in triples file", line_no);
            parsed.push_back({fields[0], fields[1], fields[2]});
        }
        std::map<std::string, Label> parsed_labels;
        line_no = 0;
        for (std::string line; std::getline(labels, line);) {
            ++line_no;
            if (skip_line(line)) continue;
            auto fields = split_tabs(line);
            if (fields.size() < 2 || fields.size() > 4 || fields[0].empty())
                throw DataError("expected id<TAB>label[<TAB>description[<TAB>aliases]] in labels file",
                                line_no);
            Label l{fields[1], fields.size() >= 3 ? fields[2] : "", {}};
            if (fields.size() == 4) {
                std::size_t start = 0;
                while (start <= fields[3].size()) {
                    auto bar = fields[3].find('|', start);
                    auto alias = fields[3].substr(start, bar == std::string::npos ? std::string::npos : bar - start);
                    if (!alias.empty()) l.aliases.push_back(alias);
                    if (bar == std::string::npos) break;
                    start = bar + 1;
                }
            }
            parsed_labels[fields[0]] = std::move(l);
        }
        return LocalStore(parsed, std::move(parsed_labels));
    }

    static LocalStore load(const std::filesystem::path& triples_path,
                           const std::filesystem::path& labels_path)
    {
        for (const auto& p : {triples_path, labels_path})
            if (std::filesystem::is_directory(p)) throw DataError("not a regular file: " + p.string());
        std::ifstream triples(triples_path);
        if (!triples) throw DataError("cannot read triples file " + triples_path.string());
        std::ifstream labels(labels_path);
        if (!labels) throw DataError("cannot read labels file " + labels_path.string());
        try {
            return parse(triples, labels);
        } catch (const DataError& e) {
            throw DataError(triples_path.filename().string() + "/" +
                                labels_path.filename().string() + ": " + e.what(),
                            e.line());
        }
    }

    std::size_t edge_count() const
    {
        std::size_t n = 0;
        for (const auto& [_, edges] : out_) n += edges.size();
        return n;
    }

  protected:
    std::vector<EntityRef> do_search_entities(std::string_view query,
                                              std::size_t limit) const override
    {
        const auto words = split_words(query);
        if (words.empty()) return {};
        const auto needle = to_lower(query);

        // Every query word must prefix some word of the label or of one alias.
        // Exact names rank first, then names starting with the query, then
        // the rest; shorter names and smaller ids break ties. An entity
        // appears once, at its best-ranked name.
        std::vector<std::tuple<int, std::size_t, const Searchable*>> hits;
        for (const auto& s : searchable_) {
            bool all = std::all_of(words.begin(), words.end(), [&](const std::string& w) {
                return std::any_of(s.words.begin(), s.words.end(),
                                   [&](const std::string& lw) { return lw.starts_with(w); });
            });
            if (!all) continue;
            int tier = s.lower_label == needle ? 0 : s.lower_label.starts_with(needle) ? 1 : 2;
            hits.emplace_back(tier, s.lower_label.size(), &s);
        }
        std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
            if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) < std::get<0>(b);
            if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
            return std::get<2>(a)->id < std::get<2>(b)->id;
        });
        std::vector<EntityRef> out;
        std::set<std::string_view> seen;
        for (const auto& hit : hits) {
            if (out.size() == limit) break;
            if (!seen.insert(std::get<2>(hit)->id).second) continue;
            out.push_back(entity(std::get<2>(hit)->id));
        }
        return out;
    }

    std::vector<RelationRef> do_adjacent_relations(std::string_view entity_id,
                                                   Direction direction) const override
    {
        const auto* edges = edges_of(entity_id, direction);
        std::vector<RelationRef> out;
        if (edges == nullptr) return out;
        for (const auto& e : *edges) {
            if (!out.empty() && out.back().id == e.relation) continue;
            out.push_back(RelationRef{e.relation, label_or_id(e.relation)});
        }
        return out;
    }

    std::vector<EntityRef> do_linked_entities(std::string_view entity_id,
                                              std::string_view relation, Direction direction,
                                              std::size_t cap) const override
    {
        const auto* edges = edges_of(entity_id, direction);
        std::vector<EntityRef> out;
        if (edges == nullptr) return out;
        auto first = std::lower_bound(edges->begin(), edges->end(), relation,
                                      [](const Edge& e, std::string_view r) { return e.relation < r; });
        for (auto it = first; it != edges->end() && it->relation == relation; ++it) {
            if (out.size() == cap) break;
            out.push_back(entity(it->neighbor));
        }
        return out;
    }

    std::map<std::string, std::string> do_fetch_labels(
        std::span<const std::string> ids) const override
    {
        std::map<std::string, std::string> out;
        for (const auto& id : ids) {
            auto it = labels_.find(id);
            if (it != labels_.end()) out.emplace(id, it->second.label);
        }
        return out;
    }

  private:
    struct Edge {
        std::string relation;
        std::string neighbor;

        friend auto operator<=>(const Edge&, const Edge&) = default;
    };

    struct Searchable {
        std::string id;
        std::string lower_label;
        std::vector<std::string> words;
    };

    const std::vector<Edge>* edges_of(std::string_view entity_id, Direction direction) const
    {
        const auto& index = direction == Direction::Forward ? out_ : in_;
        auto it = index.find(std::string(entity_id));
        return it == index.end() ? nullptr : &it->second;
    }

    std::string label_or_id(const std::string& id) const
    {
        auto it = labels_.find(id);
        return it == labels_.end() ? id : it->second.label;
    }

    EntityRef entity(const std::string& id) const
    {
        auto it = labels_.find(id);
        if (it == labels_.end()) return EntityRef{id, id, {}};
        return EntityRef{id, it->second.label, it->second.description};
    }

    static bool skip_line(std::string& line)
    {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line.empty() || line.front() == '#';
    }

    static std::vector<std::string> split_tabs(const std::string& line)
    {
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        return fields;
    }

    std::unordered_map<std::string, std::vector<Edge>> out_;
    std::unordered_map<std::string, std::vector<Edge>> in_;
    std::map<std::string, Label> labels_;
    std::vector<Searchable> searchable_;
};

}  // namespace smog
