#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/error.hpp"

namespace lyricopt {

// Reads a JSON-lines file; blank lines are skipped. Throws Error{input} with
// the offending line number on parse failure.
std::vector<nlohmann::json> read_jsonl(const std::string& path);

// Same, converting each record. Conversion failures carry the record number.
template <typename T>
std::vector<T> read_jsonl_as(const std::string& path) {
    auto raw = read_jsonl(path);
    std::vector<T> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        try {
            out.push_back(raw[i].get<T>());
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw Error(ErrorKind::input,
                        path + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

// Writes all content to a temp file in the target's directory, then renames
// it over the target, so a failed run never leaves a partial file.
void atomic_write_text(const std::string& path, const std::string& content);

// One compact JSON object per line (keys in sorted order, so output bytes are
// deterministic). Atomic like atomic_write_text.
void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records);

template <typename T>
void write_jsonl_as(const std::string& path, const std::vector<T>& records) {
    std::vector<nlohmann::json> raw;
    raw.reserve(records.size());
    for (const auto& r : records) raw.push_back(nlohmann::json(r));
    write_jsonl(path, raw);
}

}  // namespace lyricopt
