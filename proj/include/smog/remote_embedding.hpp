// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "smog/cache.hpp"
#include "smog/embedding.hpp"
#include "smog/http.hpp"
#include "smog/remote_chat.hpp"

namespace smog {

struct RemoteEmbeddingOptions {
    std::string endpoint = "https://api.openai.com/v1/embeddings";
    std::string model;
    std::string token_env = "OPENAI_API_KEY";
    std::size_t dimension = 1536;
    double rate_limit = 5.0;
    RetryPolicy retry;
};

/// Embeddings from an HTTP endpoint taking `{model, input}`. Vectors are
/// cached by (model, text) when a cache is given.
class RemoteEmbedding final : public EmbeddingProvider {
  public:
    RemoteEmbedding(std::shared_ptr<HttpTransport> transport, RemoteEmbeddingOptions options,
                    std::shared_ptr<DiskCache> cache = nullptr)
        : transport_(std::move(transport)),
          options_(std::move(options)),
          cache_(std::move(cache)),
          limiter_(std::make_unique<RateLimiter>(options_.rate_limit))
    {
        if (options_.model.empty()) throw ConfigError("remote embedding model id is empty");
        if (options_.dimension == 0) throw ConfigError("embedding dimension must be >= 1");
    }

    std::size_t dimension() const override { return options_.dimension; }

    std::vector<double> embed(std::string_view text) const override
    {
        const auto key = "embed\x1f" + options_.model + "\x1f" + std::string(text);
        if (cache_) {
            if (auto hit = cache_->get(key)) return decode(*hit);
        }
        HttpRequest r;
        r.method = "POST";
        r.url = options_.endpoint;
        r.content_type = "application/json";
        r.body = nlohmann::json{{"model", options_.model}, {"input", std::string(text)}}.dump();
        if (auto token = bearer_token(options_.token_env); !token.empty())
            r.headers = {{"Authorization", "Bearer " + token}};
        auto body = with_retries(options_.retry, [&] {
            limiter_->acquire();
            return check_status(transport_->send(r), "embedding").body;
        });
        auto v = decode(body);
        if (cache_) cache_->put(key, body);
        return v;
    }

  private:
    std::vector<double> decode(const std::string& body) const
    {
        std::vector<double> v;
        try {
            v = nlohmann::json::parse(body).at("data").at(0).at("embedding").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed embedding reply: ") + e.what());
        }
        if (v.size() != options_.dimension)
            throw ProtocolError("embedding has dimension " + std::to_string(v.size()) + ", expected " +
                                std::to_string(options_.dimension));
        return v;
    }

    std::shared_ptr<HttpTransport> transport_;
    RemoteEmbeddingOptions options_;
    std::shared_ptr<DiskCache> cache_;
    std::unique_ptr<RateLimiter> limiter_;
};

}  // namespace smog
