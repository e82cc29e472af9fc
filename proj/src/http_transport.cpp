#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "theseus/errors.hpp"
#include "theseus/transport.hpp"

namespace theseus {

namespace {

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

 protected:
  HttpResponse do_post(const HttpRequest& request) override {
    const auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + request.url);
    const auto path_start = request.url.find('/', scheme_end + 3);
    const std::string origin = request.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    for (const auto& [k, v] : request.headers) headers.emplace(k, v);
    auto result = client.Post(path, headers, request.body, "application/json");
    HttpResponse out;
    if (!result) {
      out.error = httplib::to_string(result.error());
      return out;
    }
    out.status = result->status;
    out.body = result->body;
    return out;
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(std::chrono::seconds timeout) {
  return std::make_shared<HttplibTransport>(timeout);
}

}  // namespace theseus
