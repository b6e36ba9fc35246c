#pragma once

#include <chrono>
#include <string>

namespace gaga::providers {

struct HttpResponse {
  int status = 0;  // 0 when no response arrived (connect failure, timeout)
  std::string body;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds base_delay{500};  // doubled after each failed attempt
  std::chrono::seconds timeout{60};
};

// Status 0, 429 and 5xx are worth retrying; other failures are final.
bool retryable_status(int status);

// One POST of a JSON body. `url` is scheme://host[:port]/path; https works
// when OpenSSL is available. A non-empty `bearer` adds an Authorization
// header.
HttpResponse post_json(const std::string& url, const std::string& body, const std::string& bearer,
                       std::chrono::seconds timeout);

// post_json with exponential backoff. Returns the first 2xx response, or
// throws ProviderError carrying the last HTTP status. `attempts` receives the
// number of requests sent.
HttpResponse post_json_with_retry(const std::string& url, const std::string& body, const std::string& bearer,
                                  const RetryPolicy& policy, int* attempts = nullptr);

}  // namespace gaga::providers
