#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "cell/transport.hpp"

#include "cell/error.hpp"

namespace cell {

namespace {

// "https://host:8080/v1/chat" -> {"https://host:8080", "/v1/chat"}
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::kNetwork, "endpoint url lacks a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse HttplibTransport::post(const HttpRequest& request) {
  const auto [origin, path] = split_url(request.url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_s_, 0);
  client.set_read_timeout(timeout_s_, 0);
  client.set_write_timeout(timeout_s_, 0);

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);

  auto result = client.Post(path, headers, request.body, "application/json");
  if (!result) {
    throw Error(ErrorKind::kNetwork,
                "request to " + request.url + " failed: " + httplib::to_string(result.error()));
  }
  return HttpResponse{result->status, result->body};
}

HttpResponse MockTransport::post(const HttpRequest& request) {
  ++calls_;
  return handler_(request);
}

}  // namespace cell
