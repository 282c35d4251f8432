#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>

#include "cell/transport.hpp"

namespace cell {

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

/// Persistent (namespace, fingerprint) -> response store backed by an
/// append-only JSONL log. Without a path it lives in memory only.
class ResponseCache {
 public:
  ResponseCache() = default;
  // Loads existing entries; later lines win. Malformed lines are skipped.
  explicit ResponseCache(std::filesystem::path log_path);

  std::optional<std::string> lookup(const std::string& ns, const std::string& fingerprint);
  void store(const std::string& ns, const std::string& fingerprint, const std::string& response);

  long hits() const;
  long misses() const;
  std::size_t size() const;

 private:
  static std::string key(const std::string& ns, const std::string& fingerprint) {
    return ns + '\x1f' + fingerprint;
  }

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> entries_;
  std::optional<std::filesystem::path> path_;
  std::ofstream log_;
  long hits_ = 0;
  long misses_ = 0;
};

/// Serves repeated requests from a ResponseCache. Concurrent requests with the
/// same fingerprint share one upstream call. Only 2xx responses are cached.
class CachingTransport : public Transport {
 public:
  CachingTransport(std::shared_ptr<Transport> inner, std::shared_ptr<ResponseCache> cache,
                   std::string ns);

  HttpResponse post(const HttpRequest& request) override;

  // Fingerprint of a request: SHA-256 over url and body. Headers (auth) are
  // excluded.
  static std::string fingerprint(const HttpRequest& request);

 private:
  std::shared_ptr<Transport> inner_;
  std::shared_ptr<ResponseCache> cache_;
  std::string ns_;
  std::mutex mu_;
  std::map<std::string, std::shared_future<HttpResponse>> in_flight_;
};

}  // namespace cell
