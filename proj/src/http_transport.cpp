#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "verbcal/model_client.hpp"

namespace verbcal {

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttpResult post(const std::string& base_url, const std::string& path,
                  const std::multimap<std::string, std::string>& headers, const std::string& body,
                  std::chrono::milliseconds timeout) override {
    httplib::Client client(base_url);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h(headers.begin(), headers.end());
    HttpResult out;
    auto res = client.Post(path, h, body, "application/json");
    if (!res) {
      out.status = 0;
      out.error = httplib::to_string(res.error());
      out.timed_out = res.error() == httplib::Error::ConnectionTimeout || res.error() == httplib::Error::Read;
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace verbcal
