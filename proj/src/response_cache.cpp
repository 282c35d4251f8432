#include "cell/response_cache.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>

#include "json.hpp"

#include "cell/error.hpp"

namespace cell {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::kInvalidArgument, "sha256 digest failed");
  }
  std::string hex;
  hex.reserve(length * 2);
  char buf[3];
  for (unsigned int i = 0; i < length; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

ResponseCache::ResponseCache(std::filesystem::path log_path) : path_(std::move(log_path)) {
  if (std::ifstream in(*path_); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto entry = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
      if (entry.is_discarded() || !entry.is_object() || !entry.contains("ns") ||
          !entry.contains("fp") || !entry.contains("response")) {
        continue;
      }
      entries_[key(entry["ns"].get<std::string>(), entry["fp"].get<std::string>())] =
          entry["response"].get<std::string>();
    }
  }
  if (path_->has_parent_path()) std::filesystem::create_directories(path_->parent_path());
  log_.open(*path_, std::ios::app);
  if (!log_) throw Error(ErrorKind::kConfig, "cannot open cache log " + path_->string());
}

std::optional<std::string> ResponseCache::lookup(const std::string& ns,
                                                 const std::string& fingerprint) {
  std::lock_guard lock(mu_);
  if (auto it = entries_.find(key(ns, fingerprint)); it != entries_.end()) {
    ++hits_;
    return it->second;
  }
  ++misses_;
  return std::nullopt;
}

void ResponseCache::store(const std::string& ns, const std::string& fingerprint,
                          const std::string& response) {
  std::lock_guard lock(mu_);
  entries_.insert_or_assign(key(ns, fingerprint), response);
  if (log_.is_open()) {
    nlohmann::json entry = {{"ns", ns}, {"fp", fingerprint}, {"response", response}};
    log_ << entry.dump() << '\n';
    log_.flush();
  }
}

long ResponseCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

long ResponseCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::size_t ResponseCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

CachingTransport::CachingTransport(std::shared_ptr<Transport> inner,
                                   std::shared_ptr<ResponseCache> cache, std::string ns)
    : inner_(std::move(inner)), cache_(std::move(cache)), ns_(std::move(ns)) {}

std::string CachingTransport::fingerprint(const HttpRequest& request) {
  return sha256_hex(request.url + '\n' + request.body);
}

HttpResponse CachingTransport::post(const HttpRequest& request) {
  const std::string fp = fingerprint(request);

  std::promise<HttpResponse> promise;
  std::shared_future<HttpResponse> pending;
  {
    std::lock_guard lock(mu_);
    if (auto hit = cache_->lookup(ns_, fp)) return HttpResponse{200, std::move(*hit)};
    if (auto it = in_flight_.find(fp); it != in_flight_.end()) {
      pending = it->second;
    } else {
      in_flight_.emplace(fp, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  try {
    HttpResponse response = inner_->post(request);
    if (response.status >= 200 && response.status < 300) cache_->store(ns_, fp, response.body);
    promise.set_value(response);
    std::lock_guard lock(mu_);
    in_flight_.erase(fp);
    return response;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(mu_);
    in_flight_.erase(fp);
    throw;
  }
}

}  // namespace cell
