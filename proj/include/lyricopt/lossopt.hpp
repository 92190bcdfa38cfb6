#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/rewards.hpp"
#include "lyricopt/textproc.hpp"

namespace lyricopt {

struct SentenceSpec {
    int index = 0;            // position in the paragraph
    std::string source;       // English line
    int target_length = 1;    // desired Chinese length (syllables of source)
};

enum class PassTag { first, second };

struct Candidate {
    std::string text;
    int length = 0;           // count_chinese_length(text)
    RhymeClass rhyme;
    QualityScore r_bas;
    QualityScore r_adv;
    PassTag pass_tag = PassTag::first;
};

using CandidatePool = std::vector<Candidate>;

struct LossWeights {
    double lambda1 = 2.0;
    double lambda2 = 3.0;
    double lambda3 = 1.0;
    double lambda4 = 1.0;
    double beta = 2.0;
    double hard_basic_floor = 3.0;
};

// Per-sentence loss terms in the order they are summed. adv_term and bas_term
// carry their minus sign.
struct SentenceTerms {
    double rhyme_penalty = 0;
    double length_penalty = 0;
    double adv_term = 0;
    double bas_term = 0;

    double sum() const { return rhyme_penalty + length_penalty + adv_term + bas_term; }
};

struct ParagraphSolution {
    std::vector<Candidate> chosen;        // one per sentence
    RhymeClass rhyme;                     // realized class of the last sentence
    double total_loss = 0;
    std::vector<SentenceTerms> breakdown;
};

// Overshoot costs beta per character, undershoot costs 1.
double length_deviation(int gt, int len, double beta);

// True when the candidate's class counts as matching the target. Unknown
// matches nothing, itself included.
bool rhyme_matches(const RhymeClass& candidate, const RhymeClass& target);

SentenceTerms sentence_terms(const Candidate& c, const SentenceSpec& spec,
                             const RhymeClass& target_rhyme, const LossWeights& w);

double sentence_loss(const Candidate& c, const SentenceSpec& spec,
                     const RhymeClass& target_rhyme, const LossWeights& w);

// Loss of a full selection; the rhyme target is the last candidate's class.
double paragraph_loss(const std::vector<Candidate>& selection,
                      const std::vector<SentenceSpec>& specs, const LossWeights& w);

// Shared pre-processing for both optimizers: per pool, deduplicate by exact
// text (first occurrence wins), then drop candidates with r_bas below
// hard_basic_floor; a pool that would empty falls back to its top-r_bas
// candidates instead. Throws Error{input} on an empty pool.
std::vector<CandidatePool> prepare_pools(const std::vector<CandidatePool>& pools,
                                         const LossWeights& w);

// Exact minimizer of paragraph_loss over the prepared pools. Enumerates the
// rhyme classes present among last-sentence candidates and solves each
// sentence independently per class. rhyme_fixed restricts the last sentence
// to that class when possible (falling back to the whole last pool).
// Ties break per sentence by higher r_bas, then higher r_adv, then smaller
// length deviation, then earliest pool position; across classes by more
// matching sentences, then lower class id.
ParagraphSolution optimize(const std::vector<CandidatePool>& pools,
                           const std::vector<SentenceSpec>& specs, const LossWeights& w,
                           std::optional<RhymeClass> rhyme_fixed = std::nullopt);

// Definitional oracle: evaluates every combination (same pre-processing, same
// tie order) and must agree with optimize exactly. Refuses instances whose
// combination count exceeds cap.
ParagraphSolution brute_force_optimize(const std::vector<CandidatePool>& pools,
                                       const std::vector<SentenceSpec>& specs,
                                       const LossWeights& w,
                                       std::optional<RhymeClass> rhyme_fixed = std::nullopt,
                                       std::uint64_t cap = 1000000);

// {"chosen": [...texts], "rhyme_class": name, "total_loss": x, "breakdown":
// per-sentence term objects}
nlohmann::json solution_to_json(const ParagraphSolution& sol);

}  // namespace lyricopt
