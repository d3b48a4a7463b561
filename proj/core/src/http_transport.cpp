#include <stdexcept>

#include "httplib.h"
#include "psyrig/connectors.hpp"

namespace psyrig {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResult post(const std::string& url, const std::map<std::string, std::string>& headers,
                  const std::string& body, int timeout_ms) override {
    HttpResult out;
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      out.transport_error = "invalid URL " + url;
      return out;
    }
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    if (!client.is_valid()) {
      out.transport_error = "unsupported endpoint " + origin;
      return out;
    }
    const auto timeout = std::chrono::milliseconds(timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers h;
    std::string content_type = "application/json";
    for (const auto& [k, v] : headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        h.emplace(k, v);
      }
    }
    auto res = client.Post(path, h, body, content_type);
    if (!res) {
      const auto err = res.error();
      out.timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
      out.transport_error = httplib::to_string(err);
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
  return std::make_shared<HttplibTransport>();
}

}  // namespace psyrig
