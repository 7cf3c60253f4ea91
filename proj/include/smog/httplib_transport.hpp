// SPDX-License-Identifier: Apache-2.0
#pragma once

// Real network transport. Define CPPHTTPLIB_OPENSSL_SUPPORT (and link OpenSSL)
// to reach https endpoints.

#include <chrono>
#include <memory>
#include <stdexcept>
#include <string>

#include <httplib.h>

#include "smog/http.hpp"

namespace smog {

class HttplibTransport final : public HttpTransport {
  public:
    explicit HttplibTransport(std::chrono::milliseconds timeout = std::chrono::milliseconds(10000),
                              std::string user_agent = "smog/0.1")
        : timeout_(timeout), user_agent_(std::move(user_agent))
    {}

    HttpResponse send(const HttpRequest& request) override
    {
        if (net::network_disabled())
            throw TransientError("network access disabled (SMOG_NO_NETWORK): " + request.url);
        auto [origin, path] = split_url(request.url);
        auto client = make_client(origin);
        ++net::connection_attempts();

        const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
        const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
        client->set_connection_timeout(secs.count(), usecs.count());
        client->set_read_timeout(secs.count(), usecs.count());
        client->set_write_timeout(secs.count(), usecs.count());
        client->set_follow_location(true);

        httplib::Headers headers{{"User-Agent", user_agent_}};
        for (const auto& [k, v] : request.headers) headers.emplace(k, v);

        httplib::Result result;
        if (request.method == "GET") {
            httplib::Params params(request.params.begin(), request.params.end());
            result = client->Get(path, params, headers);
        } else if (request.method == "POST") {
            result = client->Post(path, headers, request.body,
                                 request.content_type.empty() ? "application/json"
                                                              : request.content_type);
        } else {
            throw ContractError("unsupported HTTP method " + request.method);
        }
        if (!result)
            throw TransientError(request.url + ": " + httplib::to_string(result.error()));
        return HttpResponse{result->status, result->body};
    }

  private:
    static std::unique_ptr<httplib::Client> make_client(const std::string& origin)
    {
        try {
            return std::make_unique<httplib::Client>(origin);
        } catch (const std::invalid_argument& e) {
            // httplib refuses https when built without OpenSSL.
            throw ConfigError(std::string(e.what()) + " (rebuild with OpenSSL for " + origin + ")");
        }
    }

    static std::pair<std::string, std::string> split_url(const std::string& url)
    {
        auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
        auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) return {url, "/"};
        return {url.substr(0, path_start), url.substr(path_start)};
    }

    std::chrono::milliseconds timeout_;
    std::string user_agent_;
};

}  // namespace smog
