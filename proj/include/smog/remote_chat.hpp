// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdlib>
#include <memory>
#include <string>

#include <json.hpp>

#include "smog/chat_model.hpp"
#include "smog/error.hpp"
#include "smog/http.hpp"

namespace smog {

struct RemoteChatOptions {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model;
    std::string token_env = "OPENAI_API_KEY";
    int max_tokens = 512;
    double rate_limit = 2.0;
    RetryPolicy retry;
};

inline std::string bearer_token(const std::string& env_name)
{
    if (env_name.empty()) return {};
    const char* v = std::getenv(env_name.c_str());
    if (!v || !*v) throw ConfigError("environment variable " + env_name + " is not set");
    return v;
}

/// Chat-completion client for any endpoint that accepts the common
/// `{model, messages, temperature}` request body.
class RemoteChatModel final : public ChatModel {
  public:
    RemoteChatModel(std::shared_ptr<HttpTransport> transport, RemoteChatOptions options)
        : transport_(std::move(transport)), options_(std::move(options)), limiter_(options_.rate_limit)
    {
        if (options_.model.empty()) throw ConfigError("remote chat model id is empty");
    }

    static HttpRequest build_request(const RemoteChatOptions& options, const OracleRequest& request,
                                     const std::string& token)
    {
        nlohmann::json body = {
            {"model", options.model},
            {"temperature", request.temperature},
            {"max_tokens", options.max_tokens},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        };
        HttpRequest r;
        r.method = "POST";
        r.url = options.endpoint;
        r.body = body.dump();
        r.content_type = "application/json";
        if (!token.empty()) r.headers = {{"Authorization", "Bearer " + token}};
        return r;
    }

    static std::string parse_reply(const std::string& body)
    {
        try {
            auto doc = nlohmann::json::parse(body);
            const auto& content = doc.at("choices").at(0).at("message").at("content");
            if (!content.is_string()) throw ProtocolError("chat reply content is not a string");
            return content.get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("malformed chat reply: ") + e.what());
        }
    }

    std::string complete(const OracleRequest& request) override
    {
        const auto http = build_request(options_, request, bearer_token(options_.token_env));
        return with_retries(options_.retry, [&] {
            limiter_.acquire();
            return parse_reply(check_status(transport_->send(http), "chat completion").body);
        });
    }

  private:
    std::shared_ptr<HttpTransport> transport_;
    RemoteChatOptions options_;
    RateLimiter limiter_;
};

}  // namespace smog
