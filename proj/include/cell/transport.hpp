#pragma once

#include <atomic>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace cell {

struct HttpRequest {
  std::string url;
  std::string body;
  std::vector<std::pair<std::string, std::string>> headers;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

/// POSTs JSON bodies. Connection failures throw Error(kNetwork); HTTP error
/// statuses are returned, not thrown.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

class HttplibTransport : public Transport {
 public:
  explicit HttplibTransport(int timeout_s = 120) : timeout_s_(timeout_s) {}
  HttpResponse post(const HttpRequest& request) override;

 private:
  int timeout_s_;
};

/// In-process endpoint backed by a handler; counts every call that reaches it.
class MockTransport : public Transport {
 public:
  using Handler = std::function<HttpResponse(const HttpRequest&)>;

  explicit MockTransport(Handler handler) : handler_(std::move(handler)) {}

  HttpResponse post(const HttpRequest& request) override;
  long calls() const { return calls_.load(); }

 private:
  Handler handler_;
  std::atomic<long> calls_{0};
};

}  // namespace cell
