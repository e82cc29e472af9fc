#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace theseus {

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

/// status 0 means the request never got a response; `error` then says why.
struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;
};

/// Outbound HTTP. Every request goes through `post`, which counts calls so
/// tests can assert that a warm cache makes none.
class Transport {
 public:
  virtual ~Transport() = default;

  HttpResponse post(const HttpRequest& request) {
    ++calls_;
    return do_post(request);
  }
  std::size_t calls() const noexcept { return calls_.load(); }

 protected:
  virtual HttpResponse do_post(const HttpRequest& request) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

/// Real network transport (HTTP and HTTPS).
std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout = std::chrono::seconds(60));

/// Test double answering every request with a callback.
class FunctionTransport : public Transport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;
  explicit FunctionTransport(Handler handler) : handler_(std::move(handler)) {}

 protected:
  HttpResponse do_post(const HttpRequest& request) override { return handler_(request); }

 private:
  Handler handler_;
};

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Spaces requests at least 1/requests_per_second apart; <= 0 disables it.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 0.0, SleepFn sleep = {});
  void acquire();

 private:
  std::chrono::nanoseconds interval_{0};
  std::chrono::steady_clock::time_point next_{};
  SleepFn sleep_;
  std::mutex mutex_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{30000};
};

/// Retries on no response, 429 and 5xx with exponential backoff. Returns the
/// last response; the caller decides what a failure means.
HttpResponse post_with_retry(Transport& transport, const HttpRequest& request, RateLimiter& limiter,
                             const RetryPolicy& policy, const SleepFn& sleep = {});

bool is_retryable(const HttpResponse& response);

/// Content-addressed JSON records under a directory, one file per key.
/// Many readers or one writer at a time; writes are atomic renames.
class JsonCache {
 public:
  explicit JsonCache(std::filesystem::path root);

  std::optional<nlohmann::json> get(const std::string& key) const;
  void put(const std::string& key, const nlohmann::json& record);
  std::filesystem::path path_for(const std::string& key) const;
  const std::filesystem::path& root() const noexcept { return root_; }

 private:
  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
};

/// Value of an environment variable, or nullopt when unset or empty.
std::optional<std::string> env_value(const std::string& name);

}  // namespace theseus
