#include "proofloop/core/http.hpp"

#include "proofloop/core/errors.hpp"

#include <httplib.h>

namespace proofloop {

namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string prefix;  // path without trailing slash
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("URL without scheme: " + url);
    const auto path_begin = url.find('/', scheme_end + 3);
    SplitUrl out;
    out.origin = url.substr(0, path_begin);
    if (path_begin != std::string::npos) out.prefix = url.substr(path_begin);
    while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
    return out;
}

}  // namespace

HttpResponse http_post_json(const std::string& base_url, const std::string& path, const HttpHeaders& headers,
                            const std::string& body, std::chrono::milliseconds timeout) {
    const SplitUrl url = split_url(base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);

    auto res = client.Post(url.prefix + path, h, body, "application/json");
    if (!res) throw TransportError("POST " + base_url + path + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

bool is_retryable_status(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace proofloop
