#include "lyricopt/corpusfilter.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>

#include "lyricopt/error.hpp"

namespace lyricopt {

void to_json(nlohmann::json& j, const ParallelPair& p) {
    j = nlohmann::json{{"english", p.english}, {"chinese", p.chinese}};
    if (p.r_bas) j["r_bas"] = *p.r_bas;
    if (p.r_adv) j["r_adv"] = *p.r_adv;
}

void from_json(const nlohmann::json& j, ParallelPair& p) {
    j.at("english").get_to(p.english);
    j.at("chinese").get_to(p.chinese);
    if (j.contains("r_bas")) p.r_bas = j.at("r_bas").get<double>();
    if (j.contains("r_adv")) p.r_adv = j.at("r_adv").get<double>();
    if (p.english.empty() || p.chinese.empty()) {
        throw Error(ErrorKind::input, "parallel pair with empty english or chinese");
    }
}

int round_score(double v) {
    return static_cast<int>(std::floor(v + 0.5));
}

namespace {

void score_missing(std::vector<ParallelPair>& corpus, const ScorerHandle& scorer) {
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!corpus[i].r_bas) todo.push_back(i);
    }
    if (todo.empty()) return;

    const std::size_t workers =
        std::max<std::size_t>(1, std::min<std::size_t>(scorer.parallelism, todo.size()));
    std::atomic<std::size_t> cursor{0};
    std::mutex mu;
    std::optional<std::size_t> failed_index;
    ErrorKind failed_kind = ErrorKind::backend;
    std::string failed_message;

    auto work = [&] {
        for (;;) {
            std::size_t t = cursor.fetch_add(1);
            if (t >= todo.size()) return;
            std::size_t idx = todo[t];
            try {
                corpus[idx].r_bas =
                    score_basic(corpus[idx].english, corpus[idx].chinese, "", scorer).value;
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lock(mu);
                // keep the lowest failing index so the diagnostic is stable
                if (!failed_index || idx < *failed_index) {
                    failed_index = idx;
                    failed_kind = e.kind();
                    failed_message = e.what();
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(mu);
                if (!failed_index || idx < *failed_index) {
                    failed_index = idx;
                    failed_kind = ErrorKind::internal;
                    failed_message = e.what();
                }
            }
        }
    };

    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < workers; ++i) threads.emplace_back(work);
        for (auto& t : threads) t.join();
    }
    if (failed_index) {
        throw Error(failed_kind,
                    "record " + std::to_string(*failed_index) + ": " + failed_message);
    }
}

}  // namespace

std::vector<ParallelPair> filter_quality(std::vector<ParallelPair>& corpus,
                                         const ScorerHandle& scorer, ThresholdMode mode) {
    if (corpus.empty()) {
        throw Error(ErrorKind::input, "cannot filter an empty corpus");
    }
    score_missing(corpus, scorer);
    const int threshold = mode == ThresholdMode::Q ? 3 : 4;
    std::vector<ParallelPair> kept;
    for (const auto& p : corpus) {
        int cls = round_score(*p.r_bas);
        bool keep = mode == ThresholdMode::Q ? cls >= threshold : cls == threshold;
        if (keep) kept.push_back(p);
    }
    return kept;
}

RebalancePlan basic_rebalance_plan(std::uint64_t seed) {
    return RebalancePlan{seed, {{2, 1.5}, {3, 0.7}, {4, 0.5}}};
}

RebalancePlan advanced_rebalance_plan(std::uint64_t seed) {
    return RebalancePlan{seed, {{2, 0.4}, {3, 1.5}}};
}

std::vector<std::size_t> rebalance_indices(const std::vector<int>& labels,
                                           const RebalancePlan& plan) {
    for (const auto& [cls, action] : plan.actions) {
        if (!std::isfinite(action) || action <= 0.0) {
            throw Error(ErrorKind::config,
                        "rebalance action for class " + std::to_string(cls) +
                            " must be positive and finite");
        }
    }
    std::mt19937_64 rng(plan.seed);
    // fixed 53-bit mapping so the stream is identical across platforms
    auto uniform = [&rng] { return (rng() >> 11) * 0x1.0p-53; };

    std::vector<std::size_t> out;
    out.reserve(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto it = plan.actions.find(labels[i]);
        const double action = it == plan.actions.end() ? 1.0 : it->second;
        if (action <= 1.0) {
            if (action == 1.0 || uniform() < action) out.push_back(i);
        } else {
            double whole;
            const double frac = std::modf(action, &whole);
            for (int c = 0; c < static_cast<int>(whole); ++c) out.push_back(i);
            if (frac > 0.0 && uniform() < frac) out.push_back(i);
        }
    }
    return out;
}

}  // namespace lyricopt
