// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include "smog/cache.hpp"
#include "smog/prompts.hpp"

namespace smog {

struct OracleRequest {
    OracleKind kind = OracleKind::Disambiguate;
    std::string prompt;
    double temperature = 0.0;
    int attempt = 0;  // 0 for the first try; retries get a distinct cache key
};

/// Raw text completion. Throws TransientError on transport trouble.
class ChatModel {
  public:
    virtual ~ChatModel() = default;
    virtual std::string complete(const OracleRequest& request) = 0;
};

class FunctionChatModel final : public ChatModel {
  public:
    using Fn = std::function<std::string(const OracleRequest&)>;

    explicit FunctionChatModel(Fn fn) : fn_(std::move(fn)) {}

    std::string complete(const OracleRequest& request) override { return fn_(request); }

  private:
    Fn fn_;
};

/// Disk-backed replay of another model, keyed by (model, kind, temperature,
/// attempt, prompt).
class CachedChatModel final : public ChatModel {
  public:
    CachedChatModel(std::shared_ptr<ChatModel> inner, std::shared_ptr<DiskCache> cache,
                    std::string model_id)
        : inner_(std::move(inner)), cache_(std::move(cache)), model_id_(std::move(model_id))
    {}

    std::string complete(const OracleRequest& request) override
    {
        char temperature[32];
        std::snprintf(temperature, sizeof temperature, "%.3f", request.temperature);
        const auto key = "chat\x1f" + model_id_ + "\x1f" + std::string(to_string(request.kind)) +
                         "\x1f" + temperature + "\x1f" + std::to_string(request.attempt) + "\x1f" +
                         request.prompt;
        if (auto hit = cache_->get(key)) return *hit;
        auto reply = inner_->complete(request);
        cache_->put(key, reply);
        return reply;
    }

  private:
    std::shared_ptr<ChatModel> inner_;
    std::shared_ptr<DiskCache> cache_;
    std::string model_id_;
};

}  // namespace smog
