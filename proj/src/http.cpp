#include "lyricopt/http.hpp"

#include <cstdlib>

#include <httplib.h>

#include "lyricopt/error.hpp"

namespace lyricopt {

namespace {

// "http://host:port/some/path" -> {"http://host:port", "/some/path"}
std::pair<std::string, std::string> split_url(const std::string& endpoint) {
    auto scheme = endpoint.find("://");
    if (scheme == std::string::npos) {
        throw Error(ErrorKind::config, "endpoint is not a URL: " + endpoint);
    }
    auto slash = endpoint.find('/', scheme + 3);
    if (slash == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, slash), endpoint.substr(slash)};
}

}  // namespace

std::string http_post_json(const std::string& endpoint, const std::string& auth_env,
                           const nlohmann::json& body, int timeout_ms) {
    auto [base, path] = split_url(endpoint);
    httplib::Client client(base);
    client.set_connection_timeout(0, timeout_ms * 1000LL);
    client.set_read_timeout(timeout_ms / 1000, (timeout_ms % 1000) * 1000);
    if (!auth_env.empty()) {
        if (const char* token = std::getenv(auth_env.c_str())) {
            client.set_bearer_token_auth(token);
        }
    }
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        return res->body;
    }
    throw Error(ErrorKind::backend, "POST " + endpoint + " failed after retry (" + last_error + ")");
}

}  // namespace lyricopt
