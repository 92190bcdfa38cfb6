#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lyricopt/lossopt.hpp"
#include "lyricopt/rewards.hpp"
#include "lyricopt/textproc.hpp"

namespace lyricopt {

struct GenerationParams {
    double temperature = 0.7;
    double top_p = 0.95;
    int n_samples = 40;
    int max_tokens = 64;
};

// Controls the deterministic mock generator.
struct MockGenConfig {
    enum class Mode { sampled, exhaustive, impoverished };
    Mode mode = Mode::sampled;

    // sampled mode: probability of an off-by-one length, and of honoring a
    // requested rhyme class
    double length_jitter = 0.15;
    double rhyme_adherence = 0.85;

    // impoverished mode: sentence i draws from classes {(i+j) % 13, j <
    // classes_per_sentence}
    int classes_per_sentence = 2;

    // when non-empty, candidates only ever use these classes (any mode)
    std::vector<int> allowed_classes;
};

struct GeneratorHandle {
    enum class Kind { mock, http };
    Kind kind = Kind::mock;

    std::string endpoint;
    std::string auth_env;   // env var holding a bearer token, may be empty
    int parallelism = 4;
    int timeout_ms = 60000;

    GenerationParams defaults;
    MockGenConfig mock;
};

// The translation prompts, with and without the rhyme constraint.
const std::string& template_without_rhyme();
const std::string& template_with_rhyme();

// Renders the right template. Throws Error{input} when rhyme is Unknown.
std::string build_prompt(const SentenceSpec& spec, const std::optional<RhymeClass>& rhyme);

// Raw texts from the configured backend. The seed only affects the mock kind.
// Http failures (after one retry) throw Error{backend} tagged with the
// sentence index.
std::vector<std::string> generate_texts(const SentenceSpec& spec,
                                        const std::optional<RhymeClass>& rhyme,
                                        const GeneratorHandle& handle,
                                        const GenerationParams& params,
                                        const RhymeData& data, std::uint64_t seed);

// Full candidate production: generate, trim whitespace, drop empties,
// annotate with length / rhyme class / both reward scores, deduplicate by
// text (sample order preserved), tag the pass. Scoring runs concurrently up
// to the scorer handle's parallelism.
std::vector<Candidate> generate_candidates(const SentenceSpec& spec,
                                           const std::optional<RhymeClass>& rhyme,
                                           const GeneratorHandle& handle,
                                           const GenerationParams& params,
                                           const ScorerHandle& basic_scorer,
                                           const ScorerHandle& advanced_scorer,
                                           const RhymeData& data, std::uint64_t seed,
                                           PassTag tag, const std::string& context);

}  // namespace lyricopt
