#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace lyricopt {

// One annotated translation pair. The three scores are human annotations in
// {1..4}; map_basic/map_advanced convert them to grader training labels.
struct ScoredPair {
    std::string english;
    std::string chinese;
    std::string context;
    int fluency = 1;
    int accuracy = 1;
    int literacy = 1;
};

void to_json(nlohmann::json& j, const ScoredPair& p);
void from_json(const nlohmann::json& j, ScoredPair& p);

// Scores handed around as real values in [1,4] (graders may emit fractional
// means).
struct QualityScore {
    double value = 1.0;
};

// Clamps into the legal range.
QualityScore make_score(double v);

struct ScorerHandle {
    enum class Kind { mock, http };
    Kind kind = Kind::mock;

    // http kind
    std::string endpoint;       // full URL of the scoring service
    std::string auth_env;       // env var holding a bearer token, may be empty
    int parallelism = 4;        // max in-flight requests at orchestration sites
    int timeout_ms = 30000;
    int max_tokens = 8;

    // prompt templates; placeholders [paragraph], [original lyrics],
    // [translation]
    std::string basic_template;     // empty = built-in default
    std::string advanced_template;  // empty = built-in default

    // mock kind: overrides the syllable-derived length hint
    std::optional<int> mock_length_hint;
};

// The built-in grader prompts.
const std::string& default_basic_template();
const std::string& default_advanced_template();

std::string render_basic_prompt(const ScorerHandle& scorer, const std::string& english,
                                const std::string& chinese, const std::string& context);
std::string render_advanced_prompt(const ScorerHandle& scorer, const std::string& chinese);

// Fluency + accuracy quality of a translation, in [1,4]. Throws Error{input}
// on empty english/chinese, Error{backend} if the http scorer fails after its
// retry.
QualityScore score_basic(const std::string& english, const std::string& chinese,
                         const std::string& context, const ScorerHandle& scorer);

// Literary quality of the Chinese line alone, in [1,4].
QualityScore score_advanced(const std::string& chinese, const ScorerHandle& scorer);

// Annotation-score mappings used to label grader training data.
// fluency <= 2 -> 1; else accuracy <= 2 -> 2; accuracy = 3 -> 3; else 4.
int map_basic(int fluency, int accuracy);
// literacy <= 2 -> 2, else 3.
int map_advanced(int literacy);

// The deterministic mock formulas, exposed so tests can pin them.
// basic: 4 - 3*non_cjk_ratio - 0.5*repeat_excess - 0.5*|len - hint|, clamped
// to [1,4]; hint defaults to count_syllables(english).
double mock_basic_value(const std::string& english, const std::string& chinese,
                        std::optional<int> length_hint);
// advanced: 2 + (distinct-1)/(total-1) over non-space code points, clamped;
// single-character input scores 2.
double mock_advanced_value(const std::string& chinese);

// First integer token of a grader reply, clamped to [1,4]; nullopt when the
// body contains no digits.
std::optional<int> parse_score_reply(const std::string& body);

}  // namespace lyricopt
