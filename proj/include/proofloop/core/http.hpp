#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace proofloop {

struct HttpResponse {
    int status = 0;
    std::string body;
};

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body to base_url + path. base_url is `scheme://host[:port][/prefix]`.
// Throws TransportError when no response arrives (refused, reset, timeout).
HttpResponse http_post_json(const std::string& base_url, const std::string& path, const HttpHeaders& headers,
                            const std::string& body, std::chrono::milliseconds timeout);

// 408, 429 and 5xx are worth retrying.
bool is_retryable_status(int status);

}  // namespace proofloop
