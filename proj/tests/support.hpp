#pragma once

// Shared helpers for the randomized optimizer tests: instance generation for
// the optimize vs brute-force equivalence checks.

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lyricopt/lossopt.hpp"

namespace lyricopt::testsupport {

inline RhymeClass class_of_id(int id) {
    if (id < 0 || id >= kUnknownRhymeId) return unknown_rhyme();
    return RhymeClass{id, "class" + std::to_string(id)};
}

struct Instance {
    std::vector<CandidatePool> pools;
    std::vector<SentenceSpec> specs;
    LossWeights weights;  // defaults
    std::optional<RhymeClass> rhyme_fixed;
};

// n <= 4 sentences, <= 5 candidates each, random lengths/scores/rhymes.
// Scores are quarter-steps so exact ties are common and the tie order gets
// exercised. Roughly one candidate in ten duplicates a pool-mate's text to
// hit the dedup path.
inline Instance random_instance(std::mt19937_64& rng, bool allow_fixed = true) {
    auto randint = [&](int lo, int hi) {
        return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    Instance inst;
    const int n = randint(1, 4);
    for (int s = 0; s < n; ++s) {
        inst.specs.push_back({s, "line " + std::to_string(s), randint(1, 12)});
        CandidatePool pool;
        const int k = randint(1, 5);
        for (int c = 0; c < k; ++c) {
            Candidate cand;
            cand.text = std::to_string(s) + ":" + std::to_string(c);
            if (c > 0 && randint(0, 9) == 0) cand.text = pool[0].text;
            cand.length = randint(0, 14);
            cand.rhyme = class_of_id(randint(0, 13));
            cand.r_bas = QualityScore{1.0 + 0.25 * randint(0, 12)};
            cand.r_adv = QualityScore{1.0 + 0.25 * randint(0, 12)};
            pool.push_back(std::move(cand));
        }
        inst.pools.push_back(std::move(pool));
    }
    if (allow_fixed && randint(0, 3) == 0) {
        inst.rhyme_fixed = class_of_id(randint(0, 13));
    }
    return inst;
}

inline bool same_selection(const ParagraphSolution& a, const ParagraphSolution& b) {
    if (a.chosen.size() != b.chosen.size()) return false;
    for (std::size_t i = 0; i < a.chosen.size(); ++i) {
        if (a.chosen[i].text != b.chosen[i].text) return false;
    }
    return a.rhyme.id == b.rhyme.id;
}

}  // namespace lyricopt::testsupport
