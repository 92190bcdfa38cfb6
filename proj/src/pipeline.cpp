#include "lyricopt/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <mutex>
#include <thread>
#include <unordered_set>
#include <utility>

#include "lyricopt/error.hpp"
#include "lyricopt/jsonl.hpp"

namespace lyricopt {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

std::uint64_t fnv1a(std::uint64_t h, std::string_view text) {
    for (unsigned char c : text) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::uint64_t paragraph_content_hash(const ParagraphSpec& p) {
    std::uint64_t h = kFnvOffset;
    for (const auto& s : p.sentences) {
        h = fnv1a(h, s.source);
        h = fnv1a(h, "\x1f");
        h = fnv1a(h, std::to_string(s.target_length));
        h = fnv1a(h, "\x1e");
    }
    return h;
}

std::string paragraph_context(const ParagraphSpec& p) {
    std::string context;
    for (std::size_t i = 0; i < p.sentences.size(); ++i) {
        if (i) context += '\n';
        context += p.sentences[i].source;
    }
    return context;
}

void validate_paragraph(const ParagraphSpec& p) {
    if (p.sentences.empty()) throw Error(ErrorKind::input, "paragraph has no sentences");
    if (!p.references.empty() && p.references.size() != p.sentences.size())
        throw Error(ErrorKind::input, "references do not align with the sentences");
    for (const auto& s : p.sentences) {
        if (s.target_length < 1)
            throw Error(ErrorKind::input, "sentence " + std::to_string(s.index) +
                                              ": target length must be positive");
    }
}

// Generates one pool per sentence, concurrently up to the generator handle's
// parallelism. On failure the lowest sentence index wins deterministically.
std::vector<CandidatePool> generate_pools(const ParagraphSpec& p, const PipelineConfig& cfg,
                                          const RhymeData& data,
                                          const std::optional<RhymeClass>& rhyme, PassTag tag,
                                          int n_samples, const std::string& context) {
    GenerationParams params = cfg.params;
    params.n_samples = n_samples;

    std::vector<CandidatePool> pools(p.sentences.size());
    std::atomic<std::size_t> cursor{0};
    std::mutex failure_mutex;
    std::size_t failed_index = p.sentences.size();
    std::optional<Error> failure;

    auto work = [&] {
        for (;;) {
            std::size_t i = cursor.fetch_add(1);
            if (i >= p.sentences.size()) return;
            try {
                pools[i] = generate_candidates(
                    p.sentences[i], rhyme, cfg.generator, params, cfg.basic_scorer,
                    cfg.advanced_scorer, data,
                    content_seed(cfg.seed, p, static_cast<int>(i), tag), tag, context);
            } catch (const Error& err) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = err;
                }
            } catch (const std::exception& err) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (i < failed_index) {
                    failed_index = i;
                    failure = Error(ErrorKind::internal, err.what());
                }
            }
        }
    };

    int workers = std::clamp(cfg.generator.parallelism, 1,
                             static_cast<int>(p.sentences.size()));
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) threads.emplace_back(work);
        for (auto& thread : threads) thread.join();
    }
    if (failure) throw *failure;
    return pools;
}

CandidatePool merge_pools(const CandidatePool& first, const CandidatePool& second) {
    CandidatePool merged;
    std::unordered_set<std::string> seen;
    for (const auto& c : first)
        if (seen.insert(c.text).second) merged.push_back(c);
    for (const auto& c : second)
        if (seen.insert(c.text).second) merged.push_back(c);
    return merged;
}

}  // namespace

std::uint64_t content_seed(std::uint64_t master, const ParagraphSpec& p, int sentence_index,
                           PassTag tag) {
    std::uint64_t base = splitmix64(master ^ paragraph_content_hash(p));
    std::uint64_t slot = 2u * static_cast<std::uint64_t>(sentence_index) +
                         (tag == PassTag::second ? 1u : 0u);
    return splitmix64(base ^ (0xA24BAED4963EE407ULL * (slot + 1)));
}

ParagraphDetail translate_paragraph_detail(const ParagraphSpec& p, const PipelineConfig& cfg,
                                           const RhymeData& data) {
    validate_paragraph(p);
    if (cfg.samples_pass1 < 0 || cfg.samples_pass2 < 0)
        throw Error(ErrorKind::config, "sample counts must not be negative");

    std::string context = paragraph_context(p);
    ParagraphDetail detail;

    auto pools1 = generate_pools(p, cfg, data, std::nullopt, PassTag::first, cfg.samples_pass1,
                                 context);
    detail.pass1 = optimize(pools1, p.sentences, cfg.weights);

    RhymeClass realized = detail.pass1.rhyme;
    if (cfg.samples_pass2 > 0 && realized.id != kUnknownRhymeId) {
        auto pools2 = generate_pools(p, cfg, data, realized, PassTag::second, cfg.samples_pass2,
                                     context);
        detail.pools.reserve(pools1.size());
        for (std::size_t i = 0; i < pools1.size(); ++i)
            detail.pools.push_back(merge_pools(pools1[i], pools2[i]));
        detail.solution = optimize(detail.pools, p.sentences, cfg.weights, realized);
        detail.second_pass_ran = true;
    } else {
        detail.pools = std::move(pools1);
        detail.solution = detail.pass1;
    }
    return detail;
}

ParagraphSolution translate_paragraph(const ParagraphSpec& p, const PipelineConfig& cfg,
                                      const RhymeData& data) {
    return translate_paragraph_detail(p, cfg, data).solution;
}

SongResult translate_song(const std::vector<ParagraphSpec>& paragraphs,
                          const PipelineConfig& cfg, const RhymeData& data) {
    if (paragraphs.empty()) throw Error(ErrorKind::input, "song has no paragraphs");
    SongResult result;
    result.paragraphs.resize(paragraphs.size());
    for (std::size_t i = 0; i < paragraphs.size(); ++i) {
        try {
            result.paragraphs[i] = translate_paragraph_detail(paragraphs[i], cfg, data);
        } catch (const Error& err) {
            std::string message = "paragraph " + std::to_string(i) + ": " + err.what();
            if (cfg.fail_fast) throw Error(err.kind(), message);
            result.failures.push_back({i, err.kind(), message});
        } catch (const std::exception& err) {
            std::string message = "paragraph " + std::to_string(i) + ": " + err.what();
            if (cfg.fail_fast) throw Error(ErrorKind::internal, message);
            result.failures.push_back({i, ErrorKind::internal, message});
        }
    }
    return result;
}

void from_json(const nlohmann::json& j, SongLine& line) {
    const auto& song_id = j.at("song_id");
    const auto& paragraph_id = j.at("paragraph_id");
    if (!song_id.is_string() && !song_id.is_number())
        throw std::runtime_error("song_id must be a string or number");
    if (!paragraph_id.is_string() && !paragraph_id.is_number())
        throw std::runtime_error("paragraph_id must be a string or number");
    line.song_id = song_id;
    line.paragraph_id = paragraph_id;

    if (!j.at("line_idx").is_number_integer() || j.at("line_idx").get<int>() < 0)
        throw std::runtime_error("line_idx must be a non-negative integer");
    line.line_idx = j.at("line_idx").get<int>();

    line.english = j.at("english").get<std::string>();
    if (line.english.empty()) throw std::runtime_error("english must not be empty");

    line.reference.reset();
    if (j.contains("reference")) {
        line.reference = j.at("reference").get<std::string>();
        if (line.reference->empty()) throw std::runtime_error("reference must not be empty");
    }
    line.syllables.reset();
    if (j.contains("syllables")) {
        if (!j.at("syllables").is_number_integer() || j.at("syllables").get<int>() < 1)
            throw std::runtime_error("syllables must be a positive integer");
        line.syllables = j.at("syllables").get<int>();
    }
}

std::vector<SongParagraph> group_song(const std::vector<SongLine>& lines) {
    if (lines.empty()) throw Error(ErrorKind::input, "song file has no lines");

    std::vector<SongParagraph> paragraphs;
    std::vector<std::vector<const SongLine*>> grouped;
    std::map<std::pair<std::string, std::string>, std::size_t> order;
    for (const auto& line : lines) {
        auto key = std::make_pair(line.song_id.dump(), line.paragraph_id.dump());
        auto it = order.find(key);
        if (it == order.end()) {
            it = order.emplace(key, paragraphs.size()).first;
            SongParagraph p;
            p.song_id = line.song_id;
            p.paragraph_id = line.paragraph_id;
            paragraphs.push_back(std::move(p));
            grouped.emplace_back();
        }
        grouped[it->second].push_back(&line);
    }

    for (std::size_t pi = 0; pi < paragraphs.size(); ++pi) {
        auto& members = grouped[pi];
        std::stable_sort(members.begin(), members.end(),
                         [](const SongLine* a, const SongLine* b) {
                             return a->line_idx < b->line_idx;
                         });
        auto& paragraph = paragraphs[pi];
        std::size_t with_reference = 0;
        for (std::size_t i = 0; i < members.size(); ++i) {
            const SongLine& line = *members[i];
            if (i > 0 && members[i - 1]->line_idx == line.line_idx)
                throw Error(ErrorKind::input,
                            "duplicate line_idx " + std::to_string(line.line_idx) +
                                " in paragraph " + paragraph.paragraph_id.dump());
            int target = line.syllables ? *line.syllables : count_syllables(line.english);
            if (target < 1)
                throw Error(ErrorKind::input,
                            "no countable syllables in line: " + line.english);
            SentenceSpec spec;
            spec.index = static_cast<int>(i);
            spec.source = line.english;
            spec.target_length = target;
            paragraph.spec.sentences.push_back(std::move(spec));
            paragraph.line_idx.push_back(line.line_idx);
            if (line.reference) {
                paragraph.spec.references.push_back(*line.reference);
                ++with_reference;
            }
        }
        if (with_reference != 0 && with_reference != members.size())
            throw Error(ErrorKind::input,
                        "paragraph " + paragraph.paragraph_id.dump() +
                            " mixes lines with and without references");
    }
    return paragraphs;
}

std::vector<SongLine> read_song_file(const std::string& path) {
    return read_jsonl_as<SongLine>(path);
}

std::vector<nlohmann::json> song_output_records(const std::vector<SongParagraph>& paragraphs,
                                                const SongResult& result) {
    if (result.paragraphs.size() != paragraphs.size())
        throw Error(ErrorKind::internal, "song result does not align with the paragraphs");

    std::map<std::size_t, std::string> failure_by_index;
    for (const auto& failure : result.failures) failure_by_index[failure.index] = failure.message;
    std::vector<nlohmann::json> records;
    for (std::size_t pi = 0; pi < paragraphs.size(); ++pi) {
        const auto& paragraph = paragraphs[pi];
        if (!result.paragraphs[pi]) {
            auto it = failure_by_index.find(pi);
            records.push_back({{"song_id", paragraph.song_id},
                               {"paragraph_id", paragraph.paragraph_id},
                               {"error", it != failure_by_index.end() ? it->second
                                                                      : "translation failed"}});
            continue;
        }
        const ParagraphDetail& detail = *result.paragraphs[pi];
        const auto& sentences = paragraph.spec.sentences;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            const Candidate& chosen = detail.solution.chosen[i];
            records.push_back({{"song_id", paragraph.song_id},
                               {"paragraph_id", paragraph.paragraph_id},
                               {"line_idx", paragraph.line_idx[i]},
                               {"chinese", chosen.text},
                               {"length", chosen.length},
                               {"target_length", sentences[i].target_length},
                               {"rhyme_class", chosen.rhyme.name},
                               {"r_bas", chosen.r_bas.value},
                               {"r_adv", chosen.r_adv.value}});
        }
        records.push_back({{"song_id", paragraph.song_id},
                           {"paragraph_id", paragraph.paragraph_id},
                           {"lines", sentences.size()},
                           {"total_loss", detail.solution.total_loss},
                           {"rhyme_class", detail.solution.rhyme.name},
                           {"second_pass", detail.second_pass_ran}});
    }
    return records;
}

void write_song_output(const std::string& path, const std::vector<SongParagraph>& paragraphs,
                       const SongResult& result) {
    write_jsonl(path, song_output_records(paragraphs, result));
}

}  // namespace lyricopt
