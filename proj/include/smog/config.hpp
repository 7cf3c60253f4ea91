// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "smog/cache.hpp"
#include "smog/chat_model.hpp"
#include "smog/dataset.hpp"
#include "smog/embedding.hpp"
#include "smog/error.hpp"
#include "smog/explore.hpp"
#include "smog/httplib_transport.hpp"
#include "smog/local_store.hpp"
#include "smog/matcher.hpp"
#include "smog/mock_oracle.hpp"
#include "smog/oracle.hpp"
#include "smog/remote_chat.hpp"
#include "smog/remote_embedding.hpp"
#include "smog/sparql_client.hpp"
#include "smog/tee.hpp"

namespace smog {

struct KgSettings {
    std::string backend = "local";  // local | remote
    std::string triples;
    std::string labels;
    std::string sparql_endpoint = RemoteKgOptions{}.sparql_endpoint;
    std::string search_endpoint = RemoteKgOptions{}.search_endpoint;
    double rate_limit = 5.0;
    std::string cache_dir;
};

struct MockSettings {
    std::string scoring = "cosine";     // cosine | uniform
    std::string sufficiency = "rule";   // rule | never | always
    std::vector<std::string> target_labels;
};

struct OracleSettings {
    std::string backend = "mock";  // mock | remote
    std::string model;
    std::string endpoint = RemoteChatOptions{}.endpoint;
    std::string token_env = "OPENAI_API_KEY";
    double scoring_temperature = 0.3;
    double judgment_temperature = 0.0;
    double rate_limit = 2.0;
    std::string cache_dir;
    MockSettings mock;
};

struct EmbeddingSettings {
    std::string backend = "hashed";  // hashed | remote
    std::size_t dimension = 256;
    std::size_t ngram = 3;
    std::string model;
    std::string endpoint = RemoteEmbeddingOptions{}.endpoint;
    std::string token_env = "OPENAI_API_KEY";
    std::string cache_dir;
};

struct TeeSettings {
    std::size_t keywords = 5;
    std::size_t search_limit = 5;
    std::size_t rerank_keep = 5;
    bool name_fallback = true;
    double bm25_weight = 0.4;
    double embedding_weight = 0.6;
    double k1 = 1.2;
    double b = 0.75;
    std::string stopwords;  // empty: built-in English list
};

struct BeamSettings {
    std::size_t width = 3;
    std::size_t depth = 3;
    std::size_t k = 5;
    double relation_floor = 0.2;
    std::size_t max_relations = 5;
    std::string blocklist;  // empty: built-in list
};

struct OutputSettings {
    std::string trace = "decisions.jsonl";
    std::string report_dir = "report";
};

/// Everything a run needs. Paths are stored as written and resolved against
/// `base_dir` (the config file's directory) on use.
struct RunConfig {
    std::filesystem::path base_dir = ".";
    KgSettings kg;
    OracleSettings oracle;
    EmbeddingSettings embedding;
    TeeSettings tee;
    BeamSettings beam;
    OutputSettings output;
    PairColumns columns;
    std::size_t workers = 1;
    std::uint64_t seed = 0;

    std::filesystem::path resolve(const std::string& p) const
    {
        if (p.empty()) return {};
        std::filesystem::path path(p);
        return path.is_absolute() ? path : base_dir / path;
    }
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::string& where,
                       std::initializer_list<std::string_view> allowed)
{
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (auto a : allowed) ok = ok || a == k;
        if (!ok) throw ConfigError("unknown key '" + k + "' in " + where);
    }
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where)
{
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(where + "." + key + " has the wrong type");
    }
}

inline void one_of(const std::string& value, const std::string& what, std::initializer_list<std::string_view> options)
{
    for (auto o : options)
        if (o == value) return;
    throw ConfigError(what + ": unsupported value '" + value + "'");
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j, std::filesystem::path base_dir = ".")
{
    using detail::read;
    RunConfig c;
    c.base_dir = std::move(base_dir);
    detail::check_keys(j, "config",
                       {"kg", "oracle", "embedding", "tee", "beam", "output", "columns", "workers", "seed"});
    if (j.contains("kg")) {
        const auto& s = j.at("kg");
        detail::check_keys(s, "kg", {"backend", "triples", "labels", "sparql_endpoint", "search_endpoint",
                                     "rate_limit", "cache_dir"});
        read(s, "backend", c.kg.backend, "kg");
        read(s, "triples", c.kg.triples, "kg");
        read(s, "labels", c.kg.labels, "kg");
        read(s, "sparql_endpoint", c.kg.sparql_endpoint, "kg");
        read(s, "search_endpoint", c.kg.search_endpoint, "kg");
        read(s, "rate_limit", c.kg.rate_limit, "kg");
        read(s, "cache_dir", c.kg.cache_dir, "kg");
    }
    if (j.contains("oracle")) {
        const auto& s = j.at("oracle");
        detail::check_keys(s, "oracle", {"backend", "model", "endpoint", "token_env", "scoring_temperature",
                                         "judgment_temperature", "rate_limit", "cache_dir", "mock"});
        read(s, "backend", c.oracle.backend, "oracle");
        read(s, "model", c.oracle.model, "oracle");
        read(s, "endpoint", c.oracle.endpoint, "oracle");
        read(s, "token_env", c.oracle.token_env, "oracle");
        read(s, "scoring_temperature", c.oracle.scoring_temperature, "oracle");
        read(s, "judgment_temperature", c.oracle.judgment_temperature, "oracle");
        read(s, "rate_limit", c.oracle.rate_limit, "oracle");
        read(s, "cache_dir", c.oracle.cache_dir, "oracle");
        if (s.contains("mock")) {
            const auto& m = s.at("mock");
            detail::check_keys(m, "oracle.mock", {"scoring", "sufficiency", "target_labels"});
            read(m, "scoring", c.oracle.mock.scoring, "oracle.mock");
            read(m, "sufficiency", c.oracle.mock.sufficiency, "oracle.mock");
            read(m, "target_labels", c.oracle.mock.target_labels, "oracle.mock");
        }
    }
    if (j.contains("embedding")) {
        const auto& s = j.at("embedding");
        detail::check_keys(s, "embedding",
                           {"backend", "dimension", "ngram", "model", "endpoint", "token_env", "cache_dir"});
        read(s, "backend", c.embedding.backend, "embedding");
        read(s, "dimension", c.embedding.dimension, "embedding");
        read(s, "ngram", c.embedding.ngram, "embedding");
        read(s, "model", c.embedding.model, "embedding");
        read(s, "endpoint", c.embedding.endpoint, "embedding");
        read(s, "token_env", c.embedding.token_env, "embedding");
        read(s, "cache_dir", c.embedding.cache_dir, "embedding");
    }
    if (j.contains("tee")) {
        const auto& s = j.at("tee");
        detail::check_keys(s, "tee", {"keywords", "search_limit", "rerank_keep", "name_fallback", "bm25_weight",
                                      "embedding_weight", "k1", "b", "stopwords"});
        read(s, "keywords", c.tee.keywords, "tee");
        read(s, "search_limit", c.tee.search_limit, "tee");
        read(s, "rerank_keep", c.tee.rerank_keep, "tee");
        read(s, "name_fallback", c.tee.name_fallback, "tee");
        read(s, "bm25_weight", c.tee.bm25_weight, "tee");
        read(s, "embedding_weight", c.tee.embedding_weight, "tee");
        read(s, "k1", c.tee.k1, "tee");
        read(s, "b", c.tee.b, "tee");
        read(s, "stopwords", c.tee.stopwords, "tee");
    }
    if (j.contains("beam")) {
        const auto& s = j.at("beam");
        detail::check_keys(s, "beam", {"width", "depth", "k", "relation_floor", "max_relations", "blocklist"});
        read(s, "width", c.beam.width, "beam");
        read(s, "depth", c.beam.depth, "beam");
        read(s, "k", c.beam.k, "beam");
        read(s, "relation_floor", c.beam.relation_floor, "beam");
        read(s, "max_relations", c.beam.max_relations, "beam");
        read(s, "blocklist", c.beam.blocklist, "beam");
    }
    if (j.contains("output")) {
        const auto& s = j.at("output");
        detail::check_keys(s, "output", {"trace", "report_dir"});
        read(s, "trace", c.output.trace, "output");
        read(s, "report_dir", c.output.report_dir, "output");
    }
    if (j.contains("columns")) {
        const auto& s = j.at("columns");
        detail::check_keys(s, "columns", {"source_table", "source_attr", "source_desc", "target_table",
                                          "target_attr", "target_desc", "label"});
        read(s, "source_table", c.columns.source_table, "columns");
        read(s, "source_attr", c.columns.source_attr, "columns");
        read(s, "source_desc", c.columns.source_desc, "columns");
        read(s, "target_table", c.columns.target_table, "columns");
        read(s, "target_attr", c.columns.target_attr, "columns");
        read(s, "target_desc", c.columns.target_desc, "columns");
        read(s, "label", c.columns.label, "columns");
    }
    read(j, "workers", c.workers, "config");
    read(j, "seed", c.seed, "config");
    return c;
}

inline nlohmann::json config_to_json(const RunConfig& c)
{
    return {
        {"kg",
         {{"backend", c.kg.backend},
          {"triples", c.kg.triples},
          {"labels", c.kg.labels},
          {"sparql_endpoint", c.kg.sparql_endpoint},
          {"search_endpoint", c.kg.search_endpoint},
          {"rate_limit", c.kg.rate_limit},
          {"cache_dir", c.kg.cache_dir}}},
        {"oracle",
         {{"backend", c.oracle.backend},
          {"model", c.oracle.model},
          {"endpoint", c.oracle.endpoint},
          {"token_env", c.oracle.token_env},
          {"scoring_temperature", c.oracle.scoring_temperature},
          {"judgment_temperature", c.oracle.judgment_temperature},
          {"rate_limit", c.oracle.rate_limit},
          {"cache_dir", c.oracle.cache_dir},
          {"mock",
           {{"scoring", c.oracle.mock.scoring},
            {"sufficiency", c.oracle.mock.sufficiency},
            {"target_labels", c.oracle.mock.target_labels}}}}},
        {"embedding",
         {{"backend", c.embedding.backend},
          {"dimension", c.embedding.dimension},
          {"ngram", c.embedding.ngram},
          {"model", c.embedding.model},
          {"endpoint", c.embedding.endpoint},
          {"token_env", c.embedding.token_env},
          {"cache_dir", c.embedding.cache_dir}}},
        {"tee",
         {{"keywords", c.tee.keywords},
          {"search_limit", c.tee.search_limit},
          {"rerank_keep", c.tee.rerank_keep},
          {"name_fallback", c.tee.name_fallback},
          {"bm25_weight", c.tee.bm25_weight},
          {"embedding_weight", c.tee.embedding_weight},
          {"k1", c.tee.k1},
          {"b", c.tee.b},
          {"stopwords", c.tee.stopwords}}},
        {"beam",
         {{"width", c.beam.width},
          {"depth", c.beam.depth},
          {"k", c.beam.k},
          {"relation_floor", c.beam.relation_floor},
          {"max_relations", c.beam.max_relations},
          {"blocklist", c.beam.blocklist}}},
        {"output", {{"trace", c.output.trace}, {"report_dir", c.output.report_dir}}},
        {"columns",
         {{"source_table", c.columns.source_table},
          {"source_attr", c.columns.source_attr},
          {"source_desc", c.columns.source_desc},
          {"target_table", c.columns.target_table},
          {"target_attr", c.columns.target_attr},
          {"target_desc", c.columns.target_desc},
          {"label", c.columns.label}}},
        {"workers", c.workers},
        {"seed", c.seed},
    };
}

/// Bounds and cross-field checks, plus existence of every referenced file.
inline void validate(const RunConfig& c)
{
    detail::one_of(c.kg.backend, "kg.backend", {"local", "remote"});
    detail::one_of(c.oracle.backend, "oracle.backend", {"mock", "remote"});
    detail::one_of(c.embedding.backend, "embedding.backend", {"hashed", "remote"});
    detail::one_of(c.oracle.mock.scoring, "oracle.mock.scoring", {"cosine", "uniform"});
    detail::one_of(c.oracle.mock.sufficiency, "oracle.mock.sufficiency", {"rule", "never", "always"});
    if (c.kg.backend == "local" && (c.kg.triples.empty() || c.kg.labels.empty()))
        throw ConfigError("kg.triples and kg.labels are required for the local backend");
    if (c.oracle.backend == "remote" && c.oracle.model.empty())
        throw ConfigError("oracle.model is required for the remote oracle");
    if (c.embedding.backend == "remote" && c.embedding.model.empty())
        throw ConfigError("embedding.model is required for the remote embedding backend");
    if (c.oracle.scoring_temperature < 0 || c.oracle.judgment_temperature < 0)
        throw ConfigError("temperatures must be >= 0");
    if (c.embedding.dimension < 1 || c.embedding.ngram < 1) throw ConfigError("embedding dimension and ngram must be >= 1");
    if (c.tee.keywords < 1 || c.tee.search_limit < 1 || c.tee.rerank_keep < 1 || c.tee.rerank_keep > 5)
        throw ConfigError("tee: keywords and search_limit must be >= 1, rerank_keep in [1,5]");
    if (c.tee.bm25_weight < 0 || c.tee.embedding_weight < 0 ||
        std::abs(c.tee.bm25_weight + c.tee.embedding_weight - 1.0) > 1e-9)
        throw ConfigError("tee weights must be non-negative and sum to 1");
    if (c.tee.k1 < 0 || c.tee.b < 0 || c.tee.b > 1) throw ConfigError("tee: k1 >= 0 and b in [0,1] required");
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    BeamConfig{c.beam.width, c.beam.depth, c.beam.k, c.beam.relation_floor, c.beam.max_relations, {}}.validate();
    auto must_exist = [&](const std::string& p, const char* what) {
        if (!p.empty() && !std::filesystem::exists(c.resolve(p)))
            throw ConfigError(std::string(what) + " not found: " + c.resolve(p).string());
    };
    if (c.kg.backend == "local") {
        must_exist(c.kg.triples, "kg.triples");
        must_exist(c.kg.labels, "kg.labels");
    }
    must_exist(c.tee.stopwords, "tee.stopwords");
    must_exist(c.beam.blocklist, "beam.blocklist");
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    auto c = config_from_json(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    validate(c);
    return c;
}

/// Live backends built from a config.
struct Runtime {
    std::shared_ptr<KnowledgeGraph> kg;
    std::shared_ptr<EmbeddingProvider> provider;
    std::shared_ptr<Oracle> oracle;
    std::shared_ptr<Stopwords> stopwords;
    MatchConfig match;
};

inline std::shared_ptr<HttpTransport> default_transport()
{
    return std::make_shared<HttplibTransport>();
}

inline Runtime build_runtime(const RunConfig& c,
                             std::shared_ptr<HttpTransport> transport = nullptr)
{
    validate(c);
    if (!transport && (c.kg.backend == "remote" || c.oracle.backend == "remote" || c.embedding.backend == "remote"))
        transport = default_transport();
    auto cache = [&](const std::string& dir) -> std::shared_ptr<DiskCache> {
        return dir.empty() ? nullptr : std::make_shared<DiskCache>(c.resolve(dir));
    };

    Runtime rt;
    if (c.kg.backend == "local") {
        rt.kg = std::make_shared<LocalStore>(LocalStore::load(c.resolve(c.kg.triples), c.resolve(c.kg.labels)));
    } else {
        RemoteKgOptions o;
        o.sparql_endpoint = c.kg.sparql_endpoint;
        o.search_endpoint = c.kg.search_endpoint;
        o.rate_limit = c.kg.rate_limit;
        rt.kg = std::make_shared<RemoteKnowledgeGraph>(transport, o, cache(c.kg.cache_dir));
    }

    if (c.embedding.backend == "hashed") {
        rt.provider = std::make_shared<HashedNgramEmbedding>(c.embedding.dimension, c.embedding.ngram);
    } else {
        RemoteEmbeddingOptions o;
        o.endpoint = c.embedding.endpoint;
        o.model = c.embedding.model;
        o.token_env = c.embedding.token_env;
        o.dimension = c.embedding.dimension;
        rt.provider = std::make_shared<RemoteEmbedding>(transport, o, cache(c.embedding.cache_dir));
    }

    std::shared_ptr<ChatModel> model;
    if (c.oracle.backend == "mock") {
        MockPolicy p;
        p.scoring = c.oracle.mock.scoring == "uniform" ? MockPolicy::Scoring::Uniform : MockPolicy::Scoring::Cosine;
        p.sufficiency = c.oracle.mock.sufficiency == "never"    ? MockPolicy::Sufficiency::Never
                        : c.oracle.mock.sufficiency == "always" ? MockPolicy::Sufficiency::Always
                                                                : MockPolicy::Sufficiency::Rule;
        p.target_labels = {c.oracle.mock.target_labels.begin(), c.oracle.mock.target_labels.end()};
        model = std::make_shared<MockChatModel>(p, rt.provider);
    } else {
        RemoteChatOptions o;
        o.endpoint = c.oracle.endpoint;
        o.model = c.oracle.model;
        o.token_env = c.oracle.token_env;
        o.rate_limit = c.oracle.rate_limit;
        model = std::make_shared<RemoteChatModel>(transport, o);
    }
    if (auto dc = cache(c.oracle.cache_dir)) model = std::make_shared<CachedChatModel>(model, dc, c.oracle.model.empty() ? c.oracle.backend : c.oracle.model);
    rt.oracle = std::make_shared<Oracle>(model, OracleTemperatures{c.oracle.scoring_temperature, c.oracle.judgment_temperature});

    rt.stopwords = std::make_shared<Stopwords>(c.tee.stopwords.empty() ? Stopwords::english()
                                                                        : Stopwords::load(c.resolve(c.tee.stopwords)));
    auto& tee = rt.match.tee;
    tee.keyword_count = c.tee.keywords;
    tee.search_limit = c.tee.search_limit;
    tee.rerank_keep = c.tee.rerank_keep;
    tee.name_fallback = c.tee.name_fallback;
    tee.rank.bm25 = {c.tee.k1, c.tee.b};
    tee.rank.weights = {c.tee.bm25_weight, c.tee.embedding_weight};
    tee.rank.stopwords = rt.stopwords.get();

    auto& beam = rt.match.beam;
    beam.w = c.beam.width;
    beam.d_max = c.beam.depth;
    beam.k = c.beam.k;
    beam.relation_floor = c.beam.relation_floor;
    beam.max_relations = c.beam.max_relations;
    beam.relation_blocklist = c.beam.blocklist.empty() ? default_relation_blocklist()
                                                       : load_relation_blocklist(c.resolve(c.beam.blocklist));
    return rt;
}

}  // namespace smog
