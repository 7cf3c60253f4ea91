// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "smog/error.hpp"

namespace smog {

using Params = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
    std::string method = "GET";
    std::string url;
    Params params;   // query string for GET
    Params headers;
    std::string body;
    std::string content_type;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// Blocking request/response channel. Implementations throw TransientError
/// when no response was obtained at all.
class HttpTransport {
  public:
    virtual ~HttpTransport() = default;
    virtual HttpResponse send(const HttpRequest& request) = 0;
};

namespace net {

/// Process-wide count of outbound connection attempts by real transports.
inline std::atomic<std::size_t>& connection_attempts()
{
    static std::atomic<std::size_t> count{0};
    return count;
}

/// SMOG_NO_NETWORK=1 makes every real transport refuse to connect.
inline bool network_disabled()
{
    const char* v = std::getenv("SMOG_NO_NETWORK");
    return v != nullptr && *v != '\0' && std::string(v) != "0";
}

}  // namespace net

/// 2xx passes; 429 and 5xx are retryable; any other status is a protocol error.
inline const HttpResponse& check_status(const HttpResponse& response, const std::string& what)
{
    if (response.status >= 200 && response.status < 300) return response;
    auto msg = what + ": HTTP " + std::to_string(response.status);
    if (response.status == 429 || response.status >= 500) throw TransientError(msg);
    throw ProtocolError(msg);
}

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    std::function<void(std::chrono::milliseconds)> sleep =
        [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
};

/// Runs `fn`, retrying TransientError with exponential backoff. The last
/// failure propagates.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn())
{
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const TransientError&) {
            if (attempt >= std::max(1, policy.max_attempts)) throw;
            if (policy.sleep) policy.sleep(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
        }
    }
}

/// Spaces calls at least 1/rate seconds apart across all threads.
/// A non-positive rate disables limiting.
class RateLimiter {
  public:
    explicit RateLimiter(double per_second = 0.0)
        : interval_(per_second > 0 ? std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(1.0 / per_second))
                                   : Clock::duration::zero())
    {}

    void acquire()
    {
        if (interval_ == Clock::duration::zero()) return;
        Clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            auto now = Clock::now();
            slot = std::max(now, next_);
            next_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

  private:
    using Clock = std::chrono::steady_clock;
    Clock::duration interval_;
    Clock::time_point next_{};
    std::mutex mutex_;
};

/// Replays canned responses keyed by request fingerprint. Unknown requests
/// get a 404 so contract tests fail loudly instead of touching the network.
class RecordedTransport final : public HttpTransport {
  public:
    static std::string fingerprint(const HttpRequest& r)
    {
        auto params = r.params;
        std::sort(params.begin(), params.end());
        std::string key = r.method + ' ' + r.url + '?';
        for (const auto& [k, v] : params) key += k + '=' + v + '&';
        key += '\n';
        key += r.body;
        return key;
    }

    void record(const HttpRequest& request, HttpResponse response)
    {
        std::lock_guard lock(mutex_);
        responses_[fingerprint(request)] = std::move(response);
    }

    HttpResponse send(const HttpRequest& request) override
    {
        std::lock_guard lock(mutex_);
        ++calls_;
        auto it = responses_.find(fingerprint(request));
        if (it == responses_.end()) return HttpResponse{404, "no recording"};
        return it->second;
    }

    std::size_t calls() const
    {
        std::lock_guard lock(mutex_);
        return calls_;
    }

    std::size_t size() const
    {
        std::lock_guard lock(mutex_);
        return responses_.size();
    }

  private:
    mutable std::mutex mutex_;
    std::map<std::string, HttpResponse> responses_;
    std::size_t calls_ = 0;
};

}  // namespace smog
