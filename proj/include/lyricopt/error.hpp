#pragma once

#include <stdexcept>
#include <string>

namespace lyricopt {

// Broad failure categories, mapped to process exit codes by the CLI.
enum class ErrorKind {
    config,    // bad flags, bad config file, inconsistent options
    input,     // unreadable or malformed input data
    backend,   // scorer/generator backend failure after retry
    internal,  // invariant violation, "should not happen"
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config:   return "config";
    case ErrorKind::input:    return "input";
    case ErrorKind::backend:  return "backend";
    case ErrorKind::internal: return "internal";
    }
    return "unknown";
}

}  // namespace lyricopt
