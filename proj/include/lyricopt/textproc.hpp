#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lyricopt {

// Rhyme class ids follow first appearance order in the rhyme table file.
// With the shipped data that is: 0 发花, 1 梭波, 2 乜斜, 3 一七, 4 姑苏,
// 5 怀来, 6 灰堆, 7 遥条, 8 由求, 9 言前, 10 人辰, 11 江阳, 12 中东.
struct RhymeClass {
    int id = -1;
    std::string name;

    bool operator==(const RhymeClass& o) const { return id == o.id; }
    bool operator!=(const RhymeClass& o) const { return id != o.id; }
};

// Sentinel for lines whose ending character is not in the pinyin table
// (or that contain no CJK character at all). Named classes are 0..12.
inline constexpr int kUnknownRhymeId = 13;

inline RhymeClass unknown_rhyme() { return RhymeClass{kUnknownRhymeId, "Unknown"}; }

// character -> pinyin final (tone stripped, v for u-umlaut).
class PinyinTable {
public:
    // Loads a TSV of `character<TAB>final`. Lines starting with # and blank
    // lines are skipped. Throws Error{input} on malformed rows or duplicate
    // characters.
    static PinyinTable load(const std::string& path);

    // Final for a single character (one code point), or nullopt.
    std::optional<std::string> final_of(char32_t cp) const;

    std::size_t size() const { return map_.size(); }

    // Entries in file order. Used by the mock generator to build per-class
    // character pools deterministically.
    const std::vector<std::pair<char32_t, std::string>>& entries() const {
        return ordered_;
    }

private:
    std::unordered_map<char32_t, std::string> map_;
    std::vector<std::pair<char32_t, std::string>> ordered_;
};

// final -> named rhyme class.
class RhymeTable {
public:
    // Loads a TSV of `final<TAB>class_name`. Class ids are assigned by first
    // appearance of each class name. Throws Error{input} on malformed rows or
    // duplicate finals.
    static RhymeTable load(const std::string& path);

    std::optional<RhymeClass> class_of(std::string_view final) const;

    // Number of distinct named classes.
    int num_classes() const { return static_cast<int>(names_.size()); }

    const std::string& class_name(int id) const { return names_.at(id); }

    // All finals known to the table.
    std::vector<std::string> finals() const;

private:
    std::unordered_map<std::string, int> by_final_;
    std::vector<std::string> names_;
};

// Both tables together; the unit most code passes around.
struct RhymeData {
    PinyinTable pinyin;
    RhymeTable rhymes;

    static RhymeData load(const std::string& pinyin_path,
                          const std::string& rhyme_path);
};

// --- UTF-8 / CJK helpers ---

// Decodes UTF-8 into code points. Invalid bytes decode as U+FFFD and consume
// one byte, so counting functions stay total on dirty input.
std::vector<char32_t> decode_utf8(std::string_view text);

// Encodes a single code point back to UTF-8.
std::string encode_utf8(char32_t cp);

bool is_cjk(char32_t cp);

// Number of CJK code points in the string. This is the "length" of a Chinese
// lyric line; punctuation, latin letters and spaces do not count.
int count_chinese_length(std::string_view text);

// --- classification ---

// Rhyme class of the line's last CJK character. Lines ending in the erhua
// suffix 儿 classify by the character before it. Returns Unknown when the
// ending character is not in the pinyin table or no CJK character exists.
RhymeClass rhyme_class(std::string_view line, const RhymeData& data);

// Final of the char that decides the line's rhyme (after erhua resolution),
// or nullopt. Exposed for tests and the rhyme CLI subcommand.
std::optional<std::string> ending_final(std::string_view line,
                                        const RhymeData& data);

// Final of a single character given as text, nullopt for anything that is not
// exactly one character present in the table.
std::optional<std::string> pinyin_final(std::string_view ch,
                                        const PinyinTable& table);

// --- English syllables ---

// Heuristic syllable count for one word (no whitespace). Lowercases and
// strips surrounding punctuation internally.
int count_word_syllables(std::string_view word);

// Sum over whitespace-separated words. Empty or all-punctuation input is 0.
int count_syllables(std::string_view english);

}  // namespace lyricopt
