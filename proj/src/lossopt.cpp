#include "lyricopt/lossopt.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_set>

#include "lyricopt/error.hpp"

namespace lyricopt {

double length_deviation(int gt, int len, double beta) {
    if (len >= gt) return beta * (len - gt);
    return static_cast<double>(gt - len);
}

bool rhyme_matches(const RhymeClass& candidate, const RhymeClass& target) {
    return candidate.id == target.id && candidate.id != kUnknownRhymeId;
}

SentenceTerms sentence_terms(const Candidate& c, const SentenceSpec& spec,
                             const RhymeClass& target_rhyme, const LossWeights& w) {
    SentenceTerms t;
    t.rhyme_penalty = rhyme_matches(c.rhyme, target_rhyme) ? 0.0 : w.lambda1;
    t.length_penalty = w.lambda2 * length_deviation(spec.target_length, c.length, w.beta);
    t.adv_term = -w.lambda3 * c.r_adv.value;
    t.bas_term = -w.lambda4 * c.r_bas.value;
    return t;
}

double sentence_loss(const Candidate& c, const SentenceSpec& spec,
                     const RhymeClass& target_rhyme, const LossWeights& w) {
    return sentence_terms(c, spec, target_rhyme, w).sum();
}

double paragraph_loss(const std::vector<Candidate>& selection,
                      const std::vector<SentenceSpec>& specs, const LossWeights& w) {
    if (selection.empty() || selection.size() != specs.size()) {
        throw Error(ErrorKind::input, "selection and specs must align and be non-empty");
    }
    const RhymeClass& target = selection.back().rhyme;
    double total = 0;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        total += sentence_loss(selection[i], specs[i], target, w);
    }
    return total;
}

std::vector<CandidatePool> prepare_pools(const std::vector<CandidatePool>& pools,
                                         const LossWeights& w) {
    std::vector<CandidatePool> out;
    out.reserve(pools.size());
    for (std::size_t i = 0; i < pools.size(); ++i) {
        if (pools[i].empty()) {
            throw Error(ErrorKind::input,
                        "candidate pool for sentence " + std::to_string(i) + " is empty");
        }
        CandidatePool deduped;
        std::unordered_set<std::string> seen;
        for (const auto& c : pools[i]) {
            if (seen.insert(c.text).second) deduped.push_back(c);
        }
        CandidatePool kept;
        for (const auto& c : deduped) {
            if (c.r_bas.value >= w.hard_basic_floor) kept.push_back(c);
        }
        if (kept.empty()) {
            // whole pool is below the floor: keep the best available
            double best = deduped[0].r_bas.value;
            for (const auto& c : deduped) best = std::max(best, c.r_bas.value);
            for (const auto& c : deduped) {
                if (c.r_bas.value == best) kept.push_back(c);
            }
        }
        out.push_back(std::move(kept));
    }
    return out;
}

namespace {

// Per-sentence tie key. Ordering a selection by these keys sentence by
// sentence reproduces the documented tie order exactly, so the decomposed
// optimizer and the brute-force oracle pick identical winners.
struct SentKey {
    double loss;
    double neg_bas;
    double neg_adv;
    double abs_dev;
    std::size_t pool_index;

    bool operator<(const SentKey& o) const {
        if (loss != o.loss) return loss < o.loss;
        if (neg_bas != o.neg_bas) return neg_bas < o.neg_bas;
        if (neg_adv != o.neg_adv) return neg_adv < o.neg_adv;
        if (abs_dev != o.abs_dev) return abs_dev < o.abs_dev;
        return pool_index < o.pool_index;
    }
};

SentKey sent_key(const Candidate& c, const SentenceSpec& spec, const RhymeClass& target,
                 const LossWeights& w, std::size_t pool_index) {
    return SentKey{sentence_loss(c, spec, target, w), -c.r_bas.value, -c.r_adv.value,
                   std::abs(static_cast<double>(c.length - spec.target_length)), pool_index};
}

struct ClassSolution {
    int class_id;
    std::vector<std::size_t> selection;  // pool index per sentence
    double total;
    int matches;
};

// Builds the solution for one enumerated class: the last sentence chooses
// among `last_pool` (indices into the prepared last pool), the others among
// their full pools.
ClassSolution solve_for_class(const std::vector<CandidatePool>& pools,
                              const std::vector<SentenceSpec>& specs, const LossWeights& w,
                              const RhymeClass& target,
                              const std::vector<std::size_t>& last_indices) {
    const std::size_t n = pools.size();
    ClassSolution cs;
    cs.class_id = target.id;
    cs.selection.resize(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t best = 0;
        SentKey best_key = sent_key(pools[i][0], specs[i], target, w, 0);
        for (std::size_t k = 1; k < pools[i].size(); ++k) {
            SentKey key = sent_key(pools[i][k], specs[i], target, w, k);
            if (key < best_key) {
                best_key = key;
                best = k;
            }
        }
        cs.selection[i] = best;
    }
    {
        std::size_t best = last_indices[0];
        SentKey best_key = sent_key(pools[n - 1][best], specs[n - 1], target, w, best);
        for (std::size_t j = 1; j < last_indices.size(); ++j) {
            std::size_t k = last_indices[j];
            SentKey key = sent_key(pools[n - 1][k], specs[n - 1], target, w, k);
            if (key < best_key) {
                best_key = key;
                best = k;
            }
        }
        cs.selection[n - 1] = best;
    }
    cs.total = 0;
    cs.matches = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Candidate& c = pools[i][cs.selection[i]];
        cs.total += sentence_loss(c, specs[i], target, w);
        if (rhyme_matches(c.rhyme, target)) ++cs.matches;
    }
    return cs;
}

bool better_class(const ClassSolution& a, const ClassSolution& b) {
    if (a.total != b.total) return a.total < b.total;
    if (a.matches != b.matches) return a.matches > b.matches;
    return a.class_id < b.class_id;
}

ParagraphSolution assemble(const std::vector<CandidatePool>& pools,
                           const std::vector<SentenceSpec>& specs, const LossWeights& w,
                           const ClassSolution& cs) {
    ParagraphSolution sol;
    const std::size_t n = pools.size();
    sol.chosen.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        sol.chosen.push_back(pools[i][cs.selection[i]]);
    }
    sol.rhyme = sol.chosen.back().rhyme;
    sol.breakdown.reserve(n);
    sol.total_loss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        SentenceTerms t = sentence_terms(sol.chosen[i], specs[i], sol.rhyme, w);
        sol.breakdown.push_back(t);
        sol.total_loss += t.sum();
    }
    return sol;
}

// The classes to enumerate, with the feasible last-sentence indices for each.
// rhyme_fixed narrows the last pool when some candidate realizes it.
std::map<int, std::vector<std::size_t>> last_pool_classes(
    const CandidatePool& last_pool, const std::optional<RhymeClass>& rhyme_fixed) {
    std::vector<std::size_t> allowed;
    if (rhyme_fixed) {
        for (std::size_t k = 0; k < last_pool.size(); ++k) {
            if (last_pool[k].rhyme.id == rhyme_fixed->id) allowed.push_back(k);
        }
    }
    if (allowed.empty()) {
        allowed.resize(last_pool.size());
        for (std::size_t k = 0; k < last_pool.size(); ++k) allowed[k] = k;
    }
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t k : allowed) {
        by_class[last_pool[k].rhyme.id].push_back(k);
    }
    return by_class;
}

}  // namespace

ParagraphSolution optimize(const std::vector<CandidatePool>& pools,
                           const std::vector<SentenceSpec>& specs, const LossWeights& w,
                           std::optional<RhymeClass> rhyme_fixed) {
    if (pools.empty() || pools.size() != specs.size()) {
        throw Error(ErrorKind::input, "pools and specs must align and be non-empty");
    }
    auto prepared = prepare_pools(pools, w);
    auto by_class = last_pool_classes(prepared.back(), rhyme_fixed);

    std::optional<ClassSolution> best;
    for (const auto& [class_id, last_indices] : by_class) {
        RhymeClass target = prepared.back()[last_indices.front()].rhyme;
        ClassSolution cs = solve_for_class(prepared, specs, w, target, last_indices);
        if (!best || better_class(cs, *best)) best = cs;
    }
    return assemble(prepared, specs, w, *best);
}

ParagraphSolution brute_force_optimize(const std::vector<CandidatePool>& pools,
                                       const std::vector<SentenceSpec>& specs,
                                       const LossWeights& w,
                                       std::optional<RhymeClass> rhyme_fixed,
                                       std::uint64_t cap) {
    if (pools.empty() || pools.size() != specs.size()) {
        throw Error(ErrorKind::input, "pools and specs must align and be non-empty");
    }
    auto prepared = prepare_pools(pools, w);
    const std::size_t n = prepared.size();
    auto by_class = last_pool_classes(prepared.back(), rhyme_fixed);

    std::uint64_t combos_per_last = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        combos_per_last *= prepared[i].size();
        if (combos_per_last > cap) {
            throw Error(ErrorKind::input, "brute force cap exceeded");
        }
    }
    std::size_t last_total = 0;
    for (const auto& [id, idxs] : by_class) last_total += idxs.size();
    if (combos_per_last * last_total > cap) {
        throw Error(ErrorKind::input, "brute force cap exceeded");
    }

    // reduce within each realized class by the per-sentence key tuple, then
    // across classes like optimize does
    std::optional<ClassSolution> best;
    std::vector<std::size_t> sel(n, 0);
    for (const auto& [class_id, last_indices] : by_class) {
        const RhymeClass target = prepared.back()[last_indices.front()].rhyme;
        std::optional<std::vector<std::size_t>> bucket_best;
        std::vector<SentKey> bucket_keys;
        for (std::size_t last_k : last_indices) {
            sel[n - 1] = last_k;
            // odometer over the non-last pools
            std::fill(sel.begin(), sel.end() - 1, 0);
            bool done = false;
            while (!done) {
                std::vector<SentKey> keys;
                keys.reserve(n);
                for (std::size_t i = 0; i < n; ++i) {
                    keys.push_back(sent_key(prepared[i][sel[i]], specs[i], target, w, sel[i]));
                }
                if (!bucket_best ||
                    std::lexicographical_compare(keys.begin(), keys.end(),
                                                 bucket_keys.begin(), bucket_keys.end())) {
                    bucket_best = sel;
                    bucket_keys = keys;
                }
                if (n == 1) break;
                std::size_t d = 0;
                while (d + 1 < n) {
                    if (++sel[d] < prepared[d].size()) break;
                    sel[d] = 0;
                    ++d;
                }
                if (d + 1 == n) done = true;
            }
        }
        ClassSolution cs;
        cs.class_id = class_id;
        cs.selection = *bucket_best;
        cs.total = 0;
        cs.matches = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const Candidate& c = prepared[i][cs.selection[i]];
            cs.total += sentence_loss(c, specs[i], target, w);
            if (rhyme_matches(c.rhyme, target)) ++cs.matches;
        }
        if (!best || better_class(cs, *best)) best = cs;
    }
    return assemble(prepared, specs, w, *best);
}

nlohmann::json solution_to_json(const ParagraphSolution& sol) {
    nlohmann::json breakdown = nlohmann::json::array();
    for (const auto& t : sol.breakdown) {
        breakdown.push_back({{"rhyme_penalty", t.rhyme_penalty},
                             {"length_penalty", t.length_penalty},
                             {"adv_term", t.adv_term},
                             {"bas_term", t.bas_term},
                             {"sentence_loss", t.sum()}});
    }
    nlohmann::json chosen = nlohmann::json::array();
    for (const auto& c : sol.chosen) chosen.push_back(c.text);
    return {{"chosen", chosen},
            {"rhyme_class", sol.rhyme.name},
            {"total_loss", sol.total_loss},
            {"breakdown", breakdown}};
}

}  // namespace lyricopt
