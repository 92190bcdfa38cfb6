#include "lyricopt/rewards.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

#include "lyricopt/error.hpp"
#include "lyricopt/http.hpp"
#include "lyricopt/textproc.hpp"

namespace lyricopt {

void to_json(nlohmann::json& j, const ScoredPair& p) {
    j = nlohmann::json{{"english", p.english},  {"chinese", p.chinese},
                       {"context", p.context},  {"fluency", p.fluency},
                       {"accuracy", p.accuracy}, {"literacy", p.literacy}};
}

void from_json(const nlohmann::json& j, ScoredPair& p) {
    j.at("english").get_to(p.english);
    j.at("chinese").get_to(p.chinese);
    p.context = j.value("context", "");
    j.at("fluency").get_to(p.fluency);
    j.at("accuracy").get_to(p.accuracy);
    j.at("literacy").get_to(p.literacy);
    if (p.english.empty() || p.chinese.empty()) {
        throw Error(ErrorKind::input, "scored pair with empty english or chinese");
    }
    for (int s : {p.fluency, p.accuracy, p.literacy}) {
        if (s < 1 || s > 4) {
            throw Error(ErrorKind::input, "annotation score outside 1..4");
        }
    }
}

QualityScore make_score(double v) {
    return QualityScore{std::clamp(v, 1.0, 4.0)};
}

const std::string& default_basic_template() {
    static const std::string t =
        "You are a translation grader. Given English lyrics and a corresponding Chinese "
        "translation, you need to give scores in the range of 1-4 (4 is the highest) "
        "considering both fluency and translation accuracy. Here are the metrics:\n"
        "Score 1: Not very fluent. There are inappropriate or awkward phrases or other big "
        "flaws.\n"
        "Score 2: Quite fluent, but there are serious translation mistakes that need "
        "correction.\n"
        "Score 3: Quite fluent, no big mistake in translation. But there are still small "
        "mistakes in phrasing or the translation of idioms.\n"
        "Score 4: Very fluent, no mistakes, and excellent translation.\n"
        "Note that a score of 4 means excellent and should be only given if you are "
        "absolutely sure the translated sentence is perfect. Any tiny mistake will make its "
        "score less than 4.\n"
        "Now, I will provide you with the English lyrics and the Chinese translation. You "
        "need to give me only one number and nothing else. For a comprehensive "
        "understanding, I will provide you the context: [paragraph].\n"
        "The English lyrics is: [original lyrics].\n"
        "The Chinese translation is: [translation]. The score is:";
    return t;
}

const std::string& default_advanced_template() {
    static const std::string t =
        "You are a translation grader. Given a Chinese translation of lyrics, you need to "
        "give scores in the range 1-4 (4 is the highest) for whether it looks like good "
        "lyrics. Criteria for scoring:\n"
        "Score 1: The translation does not resonate as good lyrics.\n"
        "Score 2: Acceptable as lyrics, but mundane and unremarkable.\n"
        "Score 3: Good fit for lyrics with some literary flair and aesthetic language.\n"
        "Score 4: Outstanding lyrical quality, inventive, expressive, and captivating.\n"
        "Reserve a score of 4 for truly impressive lyricism and be prudent when giving 4. "
        "Regular conversational phrases typically merit a score of 2.\n"
        "Now, I will provide you with the Chinese translation. You need to give me only one "
        "number and nothing else. The Chinese translation is: [translation].\n"
        "The score is:";
    return t;
}

namespace {

std::string substitute(std::string text, std::string_view key, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        text.replace(pos, key.size(), value);
        pos += value.size();
    }
    return text;
}

double run_http_scorer(const std::string& prompt, const ScorerHandle& scorer) {
    if (scorer.endpoint.empty()) {
        throw Error(ErrorKind::config, "http scorer has no endpoint");
    }
    nlohmann::json body = {
        {"prompt", prompt},
        {"temperature", 0},
        {"max_tokens", scorer.max_tokens},
    };
    std::string reply = http_post_json(scorer.endpoint, scorer.auth_env, body, scorer.timeout_ms);
    auto score = parse_score_reply(reply);
    if (!score) {
        // one more try for a parsable reply, mirroring the transport retry
        reply = http_post_json(scorer.endpoint, scorer.auth_env, body, scorer.timeout_ms);
        score = parse_score_reply(reply);
    }
    if (!score) {
        throw Error(ErrorKind::backend,
                    "scorer reply carries no integer: \"" + reply.substr(0, 80) + "\"");
    }
    return static_cast<double>(*score);
}

}  // namespace

std::optional<int> parse_score_reply(const std::string& body) {
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(body[i]))) {
            int v = 0;
            while (i < body.size() && std::isdigit(static_cast<unsigned char>(body[i])) &&
                   v < 1000) {
                v = v * 10 + (body[i] - '0');
                ++i;
            }
            return std::clamp(v, 1, 4);
        }
    }
    return std::nullopt;
}

std::string render_basic_prompt(const ScorerHandle& scorer, const std::string& english,
                                const std::string& chinese, const std::string& context) {
    const std::string& tmpl =
        scorer.basic_template.empty() ? default_basic_template() : scorer.basic_template;
    std::string p = substitute(tmpl, "[paragraph]", context);
    p = substitute(p, "[original lyrics]", english);
    return substitute(p, "[translation]", chinese);
}

std::string render_advanced_prompt(const ScorerHandle& scorer, const std::string& chinese) {
    const std::string& tmpl = scorer.advanced_template.empty() ? default_advanced_template()
                                                               : scorer.advanced_template;
    return substitute(tmpl, "[translation]", chinese);
}

double mock_basic_value(const std::string& english, const std::string& chinese,
                        std::optional<int> length_hint) {
    auto cps = decode_utf8(chinese);
    int total = 0, cjk = 0;
    int longest_run = 0, run = 0;
    char32_t prev = 0;
    for (char32_t cp : cps) {
        if (cp == U' ' || cp == U'\t' || cp == U'\n') {
            run = 0;
            prev = 0;
            continue;
        }
        ++total;
        if (is_cjk(cp)) ++cjk;
        run = (cp == prev) ? run + 1 : 1;
        longest_run = std::max(longest_run, run);
        prev = cp;
    }
    double non_cjk_ratio = total == 0 ? 1.0 : 1.0 - static_cast<double>(cjk) / total;
    double repeat_excess = longest_run >= 3 ? longest_run - 2 : 0;
    int hint = length_hint ? *length_hint : count_syllables(english);
    double dev = std::abs(cjk - hint);
    return std::clamp(4.0 - 3.0 * non_cjk_ratio - 0.5 * repeat_excess - 0.5 * dev, 1.0, 4.0);
}

double mock_advanced_value(const std::string& chinese) {
    auto cps = decode_utf8(chinese);
    std::unordered_set<char32_t> distinct;
    int total = 0;
    for (char32_t cp : cps) {
        if (cp == U' ' || cp == U'\t' || cp == U'\n') continue;
        ++total;
        distinct.insert(cp);
    }
    if (total < 2) return 2.0;
    double ratio = static_cast<double>(distinct.size() - 1) / (total - 1);
    return std::clamp(2.0 + ratio, 1.0, 4.0);
}

QualityScore score_basic(const std::string& english, const std::string& chinese,
                         const std::string& context, const ScorerHandle& scorer) {
    if (english.empty() || chinese.empty()) {
        throw Error(ErrorKind::input, "score_basic requires non-empty english and chinese");
    }
    if (scorer.kind == ScorerHandle::Kind::mock) {
        return make_score(mock_basic_value(english, chinese, scorer.mock_length_hint));
    }
    return make_score(run_http_scorer(render_basic_prompt(scorer, english, chinese, context),
                                      scorer));
}

QualityScore score_advanced(const std::string& chinese, const ScorerHandle& scorer) {
    if (chinese.empty()) {
        throw Error(ErrorKind::input, "score_advanced requires non-empty chinese");
    }
    if (scorer.kind == ScorerHandle::Kind::mock) {
        return make_score(mock_advanced_value(chinese));
    }
    return make_score(run_http_scorer(render_advanced_prompt(scorer, chinese), scorer));
}

int map_basic(int fluency, int accuracy) {
    if (fluency < 1 || fluency > 4 || accuracy < 1 || accuracy > 4) {
        throw Error(ErrorKind::input, "annotation score outside 1..4");
    }
    if (fluency <= 2) return 1;
    if (accuracy <= 2) return 2;
    if (accuracy == 3) return 3;
    return 4;
}

int map_advanced(int literacy) {
    if (literacy < 1 || literacy > 4) {
        throw Error(ErrorKind::input, "annotation score outside 1..4");
    }
    return literacy <= 2 ? 2 : 3;
}

}  // namespace lyricopt
