#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/lossopt.hpp"
#include "lyricopt/textproc.hpp"

namespace lyricopt {

struct EvalOptions {
    // plurality: largest non-Unknown same-class group per paragraph.
    // last_anchored: fraction of lines matching the last line's class.
    enum class RhymeMode { plurality, last_anchored };
    RhymeMode rhyme_mode = RhymeMode::plurality;
};

struct EvalReport {
    double length_accuracy = 0;
    double rhyme_score = 0;
    double mean_r_bas = 0;
    double mean_r_adv = 0;
    std::optional<double> bleu;  // absent without references
    int paragraphs = 0;
    int lines = 0;
};

// One paragraph's worth of aligned evaluation inputs. references may be
// empty; when present it aligns one-to-one with the lines.
struct ParagraphEval {
    std::vector<int> lengths;
    std::vector<int> targets;
    std::vector<RhymeClass> rhymes;
    std::vector<double> r_bas;
    std::vector<double> r_adv;
    std::vector<std::string> outputs;
    std::vector<std::string> references;
};

// Fraction of lines whose length equals the target. Throws Error{input} on
// empty or misaligned sequences.
double length_accuracy(const std::vector<int>& lengths, const std::vector<int>& targets);

// Mean over paragraphs of the same-rhyme fraction. Unknown lines never group
// (an all-Unknown paragraph scores 0). Throws Error{input} when the list or
// any paragraph is empty.
double rhyme_score(const std::vector<std::vector<RhymeClass>>& paragraphs,
                   EvalOptions::RhymeMode mode = EvalOptions::RhymeMode::plurality);

// Corpus-level character BLEU in [0, 100]: n-grams up to 4 with uniform
// weights, clipped counts, add-one smoothing above unigrams, brevity penalty.
// Zero unigram overlap scores 0. Throws Error{input} on empty or misaligned
// input.
double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references);

// Builds the per-paragraph inputs from a solved paragraph.
ParagraphEval paragraph_eval(const ParagraphSolution& solution,
                             const std::vector<SentenceSpec>& specs,
                             const std::vector<std::string>& references = {});

// Aggregates all metrics. BLEU covers the lines that have references and is
// absent when none do. Score means are taken over all lines.
EvalReport evaluate_corpus(const std::vector<ParagraphEval>& paragraphs,
                           const EvalOptions& options = {});

nlohmann::json report_to_json(const EvalReport& report);

// Aligned two-column text table for terminal output.
std::string report_table(const EvalReport& report);

}  // namespace lyricopt
