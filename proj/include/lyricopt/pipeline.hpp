#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/error.hpp"
#include "lyricopt/genclient.hpp"
#include "lyricopt/lossopt.hpp"
#include "lyricopt/rewards.hpp"
#include "lyricopt/textproc.hpp"

namespace lyricopt {

struct ParagraphSpec {
    std::vector<SentenceSpec> sentences;
    // empty, or one Chinese reference per sentence
    std::vector<std::string> references;
};

struct PipelineConfig {
    int samples_pass1 = 40;
    int samples_pass2 = 40;
    LossWeights weights;
    GenerationParams params;  // n_samples is overridden per pass
    GeneratorHandle generator;
    ScorerHandle basic_scorer;
    ScorerHandle advanced_scorer;
    std::uint64_t seed = 0;
    bool fail_fast = false;
};

// Everything a caller might want to inspect about one paragraph run.
struct ParagraphDetail {
    ParagraphSolution solution;          // final (pass 2 when it ran)
    ParagraphSolution pass1;
    bool second_pass_ran = false;
    std::vector<CandidatePool> pools;    // merged, deduplicated pools behind `solution`
};

// Sentence-level seeds are derived from the paragraph's content (sources and
// target lengths), not its position, so a paragraph translates identically
// wherever it appears in a song.
std::uint64_t content_seed(std::uint64_t master, const ParagraphSpec& p, int sentence_index,
                           PassTag tag);

// Two-pass translation: pass 1 samples with the length-only prompt and
// optimizes with free rhyme enumeration; if configured and the realized class
// is not Unknown, pass 2 samples rhyme-conditioned candidates, merges them
// into the pools and re-optimizes with the class fixed.
ParagraphDetail translate_paragraph_detail(const ParagraphSpec& p, const PipelineConfig& cfg,
                                           const RhymeData& data);
ParagraphSolution translate_paragraph(const ParagraphSpec& p, const PipelineConfig& cfg,
                                      const RhymeData& data);

struct ParagraphFailure {
    std::size_t index = 0;
    ErrorKind kind = ErrorKind::internal;
    std::string message;
};

struct SongResult {
    // aligned with the input; a failed paragraph holds nullopt
    std::vector<std::optional<ParagraphDetail>> paragraphs;
    std::vector<ParagraphFailure> failures;  // in index order
};

// Translates each paragraph independently, preserving order. Failures are
// isolated per paragraph unless cfg.fail_fast is set, in which case the first
// one is rethrown tagged with its paragraph index.
SongResult translate_song(const std::vector<ParagraphSpec>& paragraphs,
                          const PipelineConfig& cfg, const RhymeData& data);

// --- song files ---

// One input record. Ids are echoed into the output verbatim, so they keep
// whatever JSON type the input used.
struct SongLine {
    nlohmann::json song_id;
    nlohmann::json paragraph_id;
    int line_idx = 0;
    std::string english;
    std::optional<std::string> reference;
    std::optional<int> syllables;  // overrides count_syllables(english)
};

void from_json(const nlohmann::json& j, SongLine& line);

// A paragraph regrouped from input records: (song_id, paragraph_id) in first
// appearance order, lines sorted by line_idx.
struct SongParagraph {
    nlohmann::json song_id;
    nlohmann::json paragraph_id;
    std::vector<int> line_idx;
    ParagraphSpec spec;
};

std::vector<SongParagraph> group_song(const std::vector<SongLine>& lines);

std::vector<SongLine> read_song_file(const std::string& path);

// One record per line plus a per-paragraph summary record; failed paragraphs
// contribute a single error record instead.
std::vector<nlohmann::json> song_output_records(const std::vector<SongParagraph>& paragraphs,
                                                const SongResult& result);

void write_song_output(const std::string& path, const std::vector<SongParagraph>& paragraphs,
                       const SongResult& result);

}  // namespace lyricopt
