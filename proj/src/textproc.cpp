#include "lyricopt/textproc.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "lyricopt/error.hpp"

namespace lyricopt {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Reads the table file, strips comments/blanks, yields (lineno, left, right).
template <typename Fn>
void for_each_tsv_row(const std::string& path, Fn&& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::input, "cannot open table file: " + path);
    }
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw Error(ErrorKind::input,
                        path + ":" + std::to_string(lineno) + ": expected two tab-separated fields");
        }
        fn(lineno, line.substr(0, tab), line.substr(tab + 1));
    }
}

bool is_ascii_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

bool is_ascii_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    std::size_t i = 0;
    const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
    while (i < text.size()) {
        unsigned char b0 = bytes[i];
        if (b0 < 0x80) {
            out.push_back(b0);
            ++i;
            continue;
        }
        int len;
        char32_t cp;
        if ((b0 & 0xE0) == 0xC0) {
            len = 2;
            cp = b0 & 0x1F;
        } else if ((b0 & 0xF0) == 0xE0) {
            len = 3;
            cp = b0 & 0x0F;
        } else if ((b0 & 0xF8) == 0xF0) {
            len = 4;
            cp = b0 & 0x07;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        if (i + len > text.size()) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            unsigned char bk = bytes[i + k];
            if ((bk & 0xC0) != 0x80) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
        if (!ok) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        // reject overlong encodings and surrogates
        if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
            (len == 4 && cp < 0x10000) || (cp >= 0xD800 && cp <= 0xDFFF) ||
            cp > 0x10FFFF) {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

std::string encode_utf8(char32_t cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // unified ideographs
           (cp >= 0x3400 && cp <= 0x4DBF) ||    // extension A
           (cp >= 0xF900 && cp <= 0xFAFF) ||    // compatibility ideographs
           (cp >= 0x20000 && cp <= 0x2FA1F);    // extensions B..F + supplement
}

int count_chinese_length(std::string_view text) {
    int n = 0;
    for (char32_t cp : decode_utf8(text)) {
        if (is_cjk(cp)) ++n;
    }
    return n;
}

PinyinTable PinyinTable::load(const std::string& path) {
    PinyinTable t;
    for_each_tsv_row(path, [&](int lineno, const std::string& ch, const std::string& final) {
        auto cps = decode_utf8(ch);
        if (cps.size() != 1) {
            throw Error(ErrorKind::input,
                        path + ":" + std::to_string(lineno) + ": first field must be one character");
        }
        char32_t cp = cps[0];
        if (!t.map_.emplace(cp, final).second) {
            throw Error(ErrorKind::input,
                        path + ":" + std::to_string(lineno) + ": duplicate character " + ch);
        }
        t.ordered_.emplace_back(cp, final);
    });
    if (t.map_.empty()) {
        throw Error(ErrorKind::input, "pinyin table is empty: " + path);
    }
    return t;
}

std::optional<std::string> PinyinTable::final_of(char32_t cp) const {
    auto it = map_.find(cp);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

RhymeTable RhymeTable::load(const std::string& path) {
    RhymeTable t;
    for_each_tsv_row(path, [&](int lineno, const std::string& final, const std::string& name) {
        if (t.by_final_.count(final)) {
            throw Error(ErrorKind::input,
                        path + ":" + std::to_string(lineno) + ": duplicate final " + final);
        }
        auto it = std::find(t.names_.begin(), t.names_.end(), name);
        int id;
        if (it == t.names_.end()) {
            id = static_cast<int>(t.names_.size());
            t.names_.push_back(name);
        } else {
            id = static_cast<int>(it - t.names_.begin());
        }
        t.by_final_.emplace(final, id);
    });
    if (t.names_.empty()) {
        throw Error(ErrorKind::input, "rhyme table is empty: " + path);
    }
    return t;
}

std::optional<RhymeClass> RhymeTable::class_of(std::string_view final) const {
    auto it = by_final_.find(std::string(final));
    if (it == by_final_.end()) return std::nullopt;
    return RhymeClass{it->second, names_[it->second]};
}

std::vector<std::string> RhymeTable::finals() const {
    std::vector<std::string> out;
    out.reserve(by_final_.size());
    for (const auto& [f, id] : by_final_) out.push_back(f);
    std::sort(out.begin(), out.end());
    return out;
}

RhymeData RhymeData::load(const std::string& pinyin_path, const std::string& rhyme_path) {
    RhymeData d{PinyinTable::load(pinyin_path), RhymeTable::load(rhyme_path)};
    // every final used by the pinyin table must resolve to a class
    for (const auto& [cp, final] : d.pinyin.entries()) {
        if (!d.rhymes.class_of(final)) {
            throw Error(ErrorKind::input,
                        "pinyin final '" + final + "' has no rhyme class (char " +
                            encode_utf8(cp) + ")");
        }
    }
    return d;
}

std::optional<std::string> ending_final(std::string_view line, const RhymeData& data) {
    auto cps = decode_utf8(line);
    // last CJK char, and the one before it for the erhua case
    int last = -1, prev = -1;
    for (int i = 0; i < static_cast<int>(cps.size()); ++i) {
        if (is_cjk(cps[i])) {
            prev = last;
            last = i;
        }
    }
    if (last < 0) return std::nullopt;
    auto final = data.pinyin.final_of(cps[last]);
    if (!final) return std::nullopt;
    if (*final == "r" && prev >= 0) {
        // erhua suffix: the preceding character carries the rhyme
        auto inner = data.pinyin.final_of(cps[prev]);
        if (inner) return inner;
    }
    return final;
}

std::optional<std::string> pinyin_final(std::string_view ch, const PinyinTable& table) {
    auto cps = decode_utf8(ch);
    if (cps.size() != 1) return std::nullopt;
    return table.final_of(cps[0]);
}

RhymeClass rhyme_class(std::string_view line, const RhymeData& data) {
    auto final = ending_final(line, data);
    if (!final) return unknown_rhyme();
    auto cls = data.rhymes.class_of(*final);
    if (!cls) return unknown_rhyme();
    return *cls;
}

namespace {

// Words whose spelling defeats the cluster heuristic.
const std::unordered_map<std::string, int>& syllable_exceptions() {
    static const std::unordered_map<std::string, int> map = {
        {"every", 2},   {"everything", 3}, {"everybody", 4}, {"evening", 2},
        {"maybe", 2},   {"rhythm", 2},     {"poem", 2},      {"idea", 3},
        {"fire", 2},    {"somewhere", 2},
    };
    return map;
}

}  // namespace

int count_word_syllables(std::string_view word) {
    // normalize: lowercase, strip non-letter edges (keeps inner apostrophes)
    std::string w;
    w.reserve(word.size());
    for (char c : word) {
        w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    std::size_t b = 0, e = w.size();
    while (b < e && !is_ascii_alpha(w[b])) ++b;
    while (e > b && !is_ascii_alpha(w[e - 1])) --e;
    w = w.substr(b, e - b);
    if (w.empty()) return 0;

    auto exc = syllable_exceptions().find(w);
    if (exc != syllable_exceptions().end()) return exc->second;

    auto vowel_at = [&](std::size_t i) {
        char c = w[i];
        if (is_ascii_vowel(c)) return true;
        return c == 'y' && i != 0;  // y is a vowel except word-initially
    };

    int count = 0;
    bool in_cluster = false;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (vowel_at(i)) {
            if (!in_cluster) ++count;
            in_cluster = true;
        } else {
            in_cluster = false;
        }
    }
    if (count == 0) return 1;

    std::size_t n = w.size();
    auto cons = [&](std::size_t i) { return i < n && is_ascii_alpha(w[i]) && !vowel_at(i); };

    // silent trailing e ("make"), except consonant+le ("little")
    if (n >= 2 && w[n - 1] == 'e' && cons(n - 2) && count > 1) {
        bool cons_le = n >= 3 && w[n - 2] == 'l' && cons(n - 3);
        if (!cons_le) --count;
    }
    // silent e inside "-ely" adverbs ("lonely", "completely"); count > 2 spares
    // short stems like "rely"
    if (n >= 4 && w.compare(n - 3, 3, "ely") == 0 && cons(n - 4) && count > 2) {
        --count;
    }
    // "-ed" silent unless after t/d ("walked" vs "wanted")
    if (n >= 3 && w[n - 2] == 'e' && w[n - 1] == 'd' && cons(n - 3) &&
        w[n - 3] != 't' && w[n - 3] != 'd' && count > 1) {
        --count;
    }
    // "-es" silent unless the stem ends in a sibilant ("makes" vs "boxes")
    if (n >= 3 && w[n - 2] == 'e' && w[n - 1] == 's' && cons(n - 3) && count > 1) {
        char c = w[n - 3];
        bool sibilant = c == 's' || c == 'z' || c == 'x' || c == 'g' || c == 'c' ||
                        (n >= 4 && w[n - 4] == 'c' && c == 'h') ||
                        (n >= 4 && w[n - 4] == 's' && c == 'h');
        if (!sibilant) --count;
    }
    // vowel + "ing" is two syllables, not one cluster ("going", "seeing")
    if (n >= 4 && w.compare(n - 3, 3, "ing") == 0 && vowel_at(n - 4)) {
        ++count;
    }
    return std::max(count, 1);
}

int count_syllables(std::string_view english) {
    int total = 0;
    std::size_t i = 0;
    while (i < english.size()) {
        while (i < english.size() &&
               std::isspace(static_cast<unsigned char>(english[i]))) {
            ++i;
        }
        std::size_t start = i;
        while (i < english.size() &&
               !std::isspace(static_cast<unsigned char>(english[i]))) {
            ++i;
        }
        if (i > start) total += count_word_syllables(english.substr(start, i - start));
    }
    return total;
}

}  // namespace lyricopt
