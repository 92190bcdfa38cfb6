#include "lyricopt/genclient.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <mutex>
#include <random>
#include <thread>
#include <unordered_set>

#include "lyricopt/error.hpp"
#include <json.hpp>

#include "lyricopt/http.hpp"

namespace lyricopt {

namespace {

using nlohmann::json;

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

double unit_draw(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t draw_index(std::mt19937_64& rng, std::size_t size) {
    return static_cast<std::size_t>(rng() % size);
}

// Character pools for the mock generator, grouped by rhyme class in pinyin
// table file order. Erhua marker characters are kept out of the ending pools
// so the last character always classifies by its own final.
struct MockVocabulary {
    std::vector<std::vector<char32_t>> endings;  // indexed by class id
    std::vector<char32_t> fillers;
};

MockVocabulary build_vocabulary(const RhymeData& data) {
    MockVocabulary vocab;
    vocab.endings.resize(data.rhymes.num_classes());
    for (const auto& [cp, final] : data.pinyin.entries()) {
        vocab.fillers.push_back(cp);
        if (final == "r") continue;
        auto cls = data.rhymes.class_of(final);
        if (cls) vocab.endings[static_cast<std::size_t>(cls->id)].push_back(cp);
    }
    for (std::size_t id = 0; id < vocab.endings.size(); ++id) {
        if (vocab.endings[id].empty())
            throw Error(ErrorKind::config,
                        "pinyin table has no ending characters for class " + std::to_string(id));
    }
    return vocab;
}

std::string mock_text(const MockVocabulary& vocab, int length, int class_id,
                      std::mt19937_64& rng) {
    std::string text;
    for (int i = 0; i + 1 < length; ++i)
        text += encode_utf8(vocab.fillers[draw_index(rng, vocab.fillers.size())]);
    const auto& pool = vocab.endings[static_cast<std::size_t>(class_id)];
    text += encode_utf8(pool[draw_index(rng, pool.size())]);
    return text;
}

std::vector<int> impoverished_classes(int sentence_index, int per_sentence,
                                      const std::vector<int>& universe) {
    std::vector<int> classes;
    int size = static_cast<int>(universe.size());
    int count = std::clamp(per_sentence, 1, size);
    for (int j = 0; j < count; ++j)
        classes.push_back(universe[static_cast<std::size_t>(
            ((sentence_index + j) % size + size) % size)]);
    return classes;
}

std::vector<std::string> mock_generate(const SentenceSpec& spec,
                                       const std::optional<RhymeClass>& rhyme,
                                       const MockGenConfig& config,
                                       const GenerationParams& params, const RhymeData& data,
                                       std::uint64_t seed) {
    MockVocabulary vocab = build_vocabulary(data);
    int num_classes = data.rhymes.num_classes();

    // the classes the mock may emit: everything, or the configured subset
    std::vector<int> universe;
    if (config.allowed_classes.empty()) {
        for (int id = 0; id < num_classes; ++id) universe.push_back(id);
    } else {
        for (int id : config.allowed_classes) {
            if (id < 0 || id >= num_classes)
                throw Error(ErrorKind::config,
                            "allowed_classes entry out of range: " + std::to_string(id));
            if (std::find(universe.begin(), universe.end(), id) == universe.end())
                universe.push_back(id);
        }
    }
    auto in_universe = [&](int id) {
        return std::find(universe.begin(), universe.end(), id) != universe.end();
    };

    std::mt19937_64 rng(seed);
    int target = std::max(1, spec.target_length);
    std::vector<std::string> texts;

    switch (config.mode) {
        case MockGenConfig::Mode::exhaustive: {
            for (int id : universe) texts.push_back(mock_text(vocab, target, id, rng));
            break;
        }
        case MockGenConfig::Mode::impoverished: {
            for (int id : impoverished_classes(spec.index, config.classes_per_sentence, universe))
                texts.push_back(mock_text(vocab, target, id, rng));
            break;
        }
        case MockGenConfig::Mode::sampled: {
            if (params.n_samples <= 0)
                throw Error(ErrorKind::config, "n_samples must be positive");
            for (int i = 0; i < params.n_samples; ++i) {
                int id;
                if (rhyme && in_universe(rhyme->id) && unit_draw(rng) < config.rhyme_adherence) {
                    id = rhyme->id;
                } else {
                    id = universe[draw_index(rng, universe.size())];
                }
                int length = target;
                if (unit_draw(rng) < config.length_jitter)
                    length += unit_draw(rng) < 0.5 ? -1 : 1;
                length = std::max(1, length);
                texts.push_back(mock_text(vocab, length, id, rng));
            }
            break;
        }
    }
    return texts;
}

std::vector<std::string> parse_generation_reply(const std::string& body) {
    json parsed = json::parse(body, nullptr, false);
    const json* list = nullptr;
    if (parsed.is_array()) {
        list = &parsed;
    } else if (parsed.is_object() && parsed.contains("texts") && parsed["texts"].is_array()) {
        list = &parsed["texts"];
    }
    if (!list) throw Error(ErrorKind::backend, "generation reply is not a list of texts");
    std::vector<std::string> texts;
    for (const auto& item : *list) {
        if (!item.is_string()) throw Error(ErrorKind::backend, "generation reply holds a non-string");
        texts.push_back(item.get<std::string>());
    }
    return texts;
}

std::vector<std::string> http_generate(const std::string& prompt, const GeneratorHandle& handle,
                                       const GenerationParams& params) {
    json request = {{"prompt", prompt},
                    {"n", params.n_samples},
                    {"temperature", params.temperature},
                    {"top_p", params.top_p},
                    {"max_tokens", params.max_tokens}};
    std::string reply = http_post_json(handle.endpoint, handle.auth_env, request, handle.timeout_ms);
    try {
        return parse_generation_reply(reply);
    } catch (const Error&) {
        reply = http_post_json(handle.endpoint, handle.auth_env, request, handle.timeout_ms);
        return parse_generation_reply(reply);
    }
}

std::string trim_copy(const std::string& text) {
    auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    std::size_t begin = 0;
    std::size_t end = text.size();
    while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
    while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
    return text.substr(begin, end - begin);
}

std::string with_sentence(const SentenceSpec& spec, const std::string& message) {
    return "sentence " + std::to_string(spec.index) + ": " + message;
}

}  // namespace

const std::string& template_without_rhyme() {
    static const std::string text =
        "I will give you an English lyric and you need to translate it into Chinese with "
        "exactly [length] characters. Please only output the translated results and nothing "
        "more. The English lyrics are: [original lyrics]. Then the translation result is:";
    return text;
}

const std::string& template_with_rhyme() {
    static const std::string text =
        "I will give you an English lyric and you need to translate it into Chinese with "
        "exactly [length] characters, where the ending rhyme type is [rhyme]. Please only "
        "output the translated results and nothing more. The English lyrics are: [original "
        "lyrics]. Then the translation result is:";
    return text;
}

std::string build_prompt(const SentenceSpec& spec, const std::optional<RhymeClass>& rhyme) {
    if (rhyme && rhyme->id == kUnknownRhymeId)
        throw Error(ErrorKind::input, "cannot prompt for the Unknown rhyme class");
    std::string prompt = rhyme ? template_with_rhyme() : template_without_rhyme();
    prompt = replace_all(prompt, "[length]", std::to_string(spec.target_length));
    prompt = replace_all(prompt, "[original lyrics]", spec.source);
    if (rhyme) prompt = replace_all(prompt, "[rhyme]", rhyme->name);
    return prompt;
}

std::vector<std::string> generate_texts(const SentenceSpec& spec,
                                        const std::optional<RhymeClass>& rhyme,
                                        const GeneratorHandle& handle,
                                        const GenerationParams& params, const RhymeData& data,
                                        std::uint64_t seed) {
    if (handle.kind == GeneratorHandle::Kind::mock)
        return mock_generate(spec, rhyme, handle.mock, params, data, seed);
    std::string prompt = build_prompt(spec, rhyme);
    try {
        return http_generate(prompt, handle, params);
    } catch (const Error& err) {
        throw Error(err.kind(), with_sentence(spec, err.what()));
    }
}

std::vector<Candidate> generate_candidates(const SentenceSpec& spec,
                                           const std::optional<RhymeClass>& rhyme,
                                           const GeneratorHandle& handle,
                                           const GenerationParams& params,
                                           const ScorerHandle& basic_scorer,
                                           const ScorerHandle& advanced_scorer,
                                           const RhymeData& data, std::uint64_t seed,
                                           PassTag tag, const std::string& context) {
    std::vector<std::string> raw = generate_texts(spec, rhyme, handle, params, data, seed);

    std::vector<std::string> texts;
    std::unordered_set<std::string> seen;
    for (const auto& sample : raw) {
        std::string text = trim_copy(sample);
        if (text.empty()) continue;
        if (seen.insert(text).second) texts.push_back(std::move(text));
    }
    if (texts.empty())
        throw Error(ErrorKind::backend, with_sentence(spec, "generator returned no usable candidates"));

    std::vector<Candidate> candidates(texts.size());
    int workers = std::clamp(basic_scorer.parallelism, 1, static_cast<int>(texts.size()));
    std::atomic<std::size_t> cursor{0};
    std::mutex failure_mutex;
    std::size_t failed_index = texts.size();
    std::optional<Error> failure;

    auto work = [&] {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= texts.size()) return;
            try {
                Candidate c;
                c.text = texts[i];
                c.length = count_chinese_length(c.text);
                c.rhyme = rhyme_class(c.text, data);
                c.r_bas = score_basic(spec.source, c.text, context, basic_scorer);
                c.r_adv = score_advanced(c.text, advanced_scorer);
                c.pass_tag = tag;
                candidates[i] = std::move(c);
            } catch (const Error& err) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = Error(err.kind(), with_sentence(spec, err.what()));
                }
            } catch (const std::exception& err) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = Error(ErrorKind::internal, with_sentence(spec, err.what()));
                }
            }
        }
    };

    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) threads.emplace_back(work);
        for (auto& thread : threads) thread.join();
    }
    if (failure) throw *failure;
    return candidates;
}

}  // namespace lyricopt
