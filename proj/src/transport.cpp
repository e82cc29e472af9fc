#include "theseus/transport.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "theseus/errors.hpp"

namespace theseus {

namespace fs = std::filesystem;

namespace {

void default_sleep(std::chrono::milliseconds ms) { std::this_thread::sleep_for(ms); }

}  // namespace

RateLimiter::RateLimiter(double requests_per_second, SleepFn sleep) : sleep_(std::move(sleep)) {
  if (requests_per_second > 0.0) {
    interval_ = std::chrono::nanoseconds(static_cast<long long>(1e9 / requests_per_second));
  }
  if (!sleep_) sleep_ = default_sleep;
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::nanoseconds wait{0};
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    if (next_ > now) wait = next_ - now;
    next_ = std::max(now, next_) + interval_;
  }
  if (wait.count() > 0) sleep_(std::chrono::ceil<std::chrono::milliseconds>(wait));
}

bool is_retryable(const HttpResponse& r) { return r.status == 0 || r.status == 429 || r.status >= 500; }

HttpResponse post_with_retry(Transport& transport, const HttpRequest& request, RateLimiter& limiter,
                             const RetryPolicy& policy, const SleepFn& sleep) {
  const SleepFn& do_sleep = sleep ? sleep : SleepFn(default_sleep);
  auto backoff = policy.initial_backoff;
  HttpResponse last;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    limiter.acquire();
    last = transport.post(request);
    if (!is_retryable(last)) return last;
    if (attempt == attempts) break;
    spdlog::warn("request to {} failed ({}); retry {}/{} in {} ms", request.url,
                 last.status ? std::to_string(last.status) : last.error, attempt, attempts - 1, backoff.count());
    do_sleep(backoff);
    backoff = std::min(policy.max_backoff, std::chrono::milliseconds(static_cast<long long>(
                                               static_cast<double>(backoff.count()) * policy.multiplier)));
  }
  return last;
}

JsonCache::JsonCache(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw IoError("cannot create cache directory " + root_.string() + ": " + ec.message());
}

fs::path JsonCache::path_for(const std::string& key) const {
  const std::string shard = key.size() >= 2 ? key.substr(0, 2) : "00";
  return root_ / shard / (key + ".json");
}

std::optional<nlohmann::json> JsonCache::get(const std::string& key) const {
  std::shared_lock lock(mutex_);
  std::ifstream in(path_for(key));
  if (!in) return std::nullopt;
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    spdlog::warn("ignoring corrupt cache record {}: {}", path_for(key).string(), e.what());
    return std::nullopt;
  }
}

void JsonCache::put(const std::string& key, const nlohmann::json& record) {
  std::unique_lock lock(mutex_);
  const fs::path target = path_for(key);
  fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write cache record " + tmp.string());
    out << record.dump();
  }
  fs::rename(tmp, target);
}

std::optional<std::string> env_value(const std::string& name) {
  const char* v = std::getenv(name.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace theseus
