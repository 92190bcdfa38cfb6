#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/rewards.hpp"

namespace lyricopt {

// One sentence-level translation pair from a parallel corpus, with cached
// reward scores when they have been computed.
struct ParallelPair {
    std::string english;
    std::string chinese;
    std::optional<double> r_bas;
    std::optional<double> r_adv;
};

void to_json(nlohmann::json& j, const ParallelPair& p);
void from_json(const nlohmann::json& j, ParallelPair& p);

enum class ThresholdMode { Q, HQ };

// Half-up rounding of a continuous score to its integer class.
int round_score(double v);

// Q keeps pairs whose rounded basic score is >= 3, HQ keeps only rounded 4.
// Pairs lacking r_bas are scored (concurrently, bounded by the handle's
// parallelism) and the score is cached on the input record. Output preserves
// input order. A scorer failure is rethrown carrying the record index.
std::vector<ParallelPair> filter_quality(std::vector<ParallelPair>& corpus,
                                         const ScorerHandle& scorer, ThresholdMode mode);

// class label -> keep-probability in (0,1] or upsample ratio >= 1. A ratio r
// emits floor(r) whole copies plus one more with probability r - floor(r).
// Labels missing from the map are kept as-is.
struct RebalancePlan {
    std::uint64_t seed = 0;
    std::map<int, double> actions;
};

// The training-recipe presets: basic grader labels get class 2 upsampled 1.5x
// and classes 3/4 downsampled to 0.7/0.5; advanced grader labels get class 2
// downsampled to 0.4 and class 3 upsampled 1.5x.
RebalancePlan basic_rebalance_plan(std::uint64_t seed);
RebalancePlan advanced_rebalance_plan(std::uint64_t seed);

// Single sequential pass over the records; returns the indices of kept
// records (repeats for upsampled ones) in input order. Deterministic for a
// fixed plan. Throws Error{config} on non-finite or non-positive actions.
std::vector<std::size_t> rebalance_indices(const std::vector<int>& labels,
                                           const RebalancePlan& plan);

// Convenience wrapper materializing the selected records.
template <typename T>
std::vector<T> rebalance(const std::vector<T>& records, const std::vector<int>& labels,
                         const RebalancePlan& plan) {
    std::vector<T> out;
    for (std::size_t idx : rebalance_indices(labels, plan)) out.push_back(records[idx]);
    return out;
}

}  // namespace lyricopt
