#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <thread>

#include "gaga/common/error.hpp"
#include "gaga/providers/http.hpp"

namespace gaga::providers {

bool retryable_status(int status) { return status == 0 || status == 429 || (status >= 500 && status < 600); }

HttpResponse post_json(const std::string& url, const std::string& body, const std::string& bearer,
                       std::chrono::seconds timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ValidationError("endpoint '" + url + "' lacks a scheme");
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  httplib::Client client(origin);
  if (!client.is_valid()) throw ValidationError("endpoint '" + url + "' is not a usable http(s) URL");
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return {0, "transport error: " + httplib::to_string(res.error())};
  return {res->status, res->body};
}

HttpResponse post_json_with_retry(const std::string& url, const std::string& body, const std::string& bearer,
                                  const RetryPolicy& policy, int* attempts) {
  auto delay = policy.base_delay;
  HttpResponse last;
  int sent = 0;
  for (int attempt = 0; attempt <= policy.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    last = post_json(url, body, bearer, policy.timeout);
    ++sent;
    if (attempts) *attempts = sent;
    if (last.status >= 200 && last.status < 300) return last;
    if (!retryable_status(last.status)) break;
  }
  std::string detail = last.body.substr(0, 200);
  throw ProviderError("request to " + url + " failed after " + std::to_string(sent) + " attempt(s) with status " +
                          std::to_string(last.status) + (detail.empty() ? "" : ": " + detail),
                      last.status);
}

}  // namespace gaga::providers
