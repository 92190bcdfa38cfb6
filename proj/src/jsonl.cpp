#include "lyricopt/jsonl.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lyricopt {

std::vector<nlohmann::json> read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::input, "cannot open " + path);
    }
    std::vector<nlohmann::json> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        // skip blanks
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            out.push_back(nlohmann::json::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw Error(ErrorKind::input,
                        path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorKind::input, "cannot write " + tmp);
        }
        out << content;
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw Error(ErrorKind::input, "write failed for " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw Error(ErrorKind::input, "cannot rename " + tmp + " to " + path);
    }
}

void write_jsonl(const std::string& path, const std::vector<nlohmann::json>& records) {
    std::ostringstream buf;
    for (const auto& r : records) {
        buf << r.dump() << '\n';
    }
    atomic_write_text(path, buf.str());
}

}  // namespace lyricopt
