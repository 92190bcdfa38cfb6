#pragma once

#include <string>

#include <json.hpp>

namespace lyricopt {

// POSTs `body` as JSON to `endpoint` and returns the raw response body.
// Retries once on any failure (connect, timeout, non-2xx), then throws
// Error{backend}. A bearer token is read from the environment variable named
// by `auth_env` when non-empty.
std::string http_post_json(const std::string& endpoint, const std::string& auth_env,
                           const nlohmann::json& body, int timeout_ms);

}  // namespace lyricopt
