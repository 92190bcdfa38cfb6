#include "lyricopt/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "lyricopt/error.hpp"

namespace lyricopt {

namespace {

bool is_token_space(char32_t cp) {
    switch (cp) {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\r':
        case U'\f':
        case U'\v':
        case U' ':
        case U'　':
            return true;
        default:
            return false;
    }
}

std::vector<char32_t> char_tokens(const std::string& line) {
    std::vector<char32_t> toks;
    for (char32_t cp : decode_utf8(line))
        if (!is_token_space(cp)) toks.push_back(cp);
    return toks;
}

std::map<std::u32string, int> ngram_counts(const std::vector<char32_t>& toks, std::size_t n) {
    std::map<std::u32string, int> counts;
    if (toks.size() < n) return counts;
    for (std::size_t i = 0; i + n <= toks.size(); ++i)
        ++counts[std::u32string(toks.begin() + i, toks.begin() + i + n)];
    return counts;
}

double plurality_fraction(const std::vector<RhymeClass>& rhymes) {
    std::map<int, int> groups;
    for (const auto& r : rhymes)
        if (r.id != kUnknownRhymeId) ++groups[r.id];
    int largest = 0;
    for (const auto& [id, count] : groups) largest = std::max(largest, count);
    return static_cast<double>(largest) / static_cast<double>(rhymes.size());
}

double last_anchored_fraction(const std::vector<RhymeClass>& rhymes) {
    const RhymeClass& anchor = rhymes.back();
    if (anchor.id == kUnknownRhymeId) return 0.0;
    int matched = 0;
    for (const auto& r : rhymes)
        if (r.id == anchor.id) ++matched;
    return static_cast<double>(matched) / static_cast<double>(rhymes.size());
}

std::string fixed(double value, int places) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", places, value);
    return buf;
}

}  // namespace

double length_accuracy(const std::vector<int>& lengths, const std::vector<int>& targets) {
    if (lengths.empty()) throw Error(ErrorKind::input, "length accuracy over no lines");
    if (lengths.size() != targets.size())
        throw Error(ErrorKind::input, "lengths and targets are misaligned");
    std::size_t matched = 0;
    for (std::size_t i = 0; i < lengths.size(); ++i)
        if (lengths[i] == targets[i]) ++matched;
    return static_cast<double>(matched) / static_cast<double>(lengths.size());
}

double rhyme_score(const std::vector<std::vector<RhymeClass>>& paragraphs,
                   EvalOptions::RhymeMode mode) {
    if (paragraphs.empty()) throw Error(ErrorKind::input, "rhyme score over no paragraphs");
    double total = 0;
    for (const auto& paragraph : paragraphs) {
        if (paragraph.empty()) throw Error(ErrorKind::input, "rhyme score over an empty paragraph");
        total += mode == EvalOptions::RhymeMode::plurality ? plurality_fraction(paragraph)
                                                           : last_anchored_fraction(paragraph);
    }
    return total / static_cast<double>(paragraphs.size());
}

double bleu(const std::vector<std::string>& hypotheses,
            const std::vector<std::string>& references) {
    if (hypotheses.empty()) throw Error(ErrorKind::input, "bleu over no lines");
    if (hypotheses.size() != references.size())
        throw Error(ErrorKind::input, "hypotheses and references are misaligned");

    constexpr std::size_t kMaxOrder = 4;
    double matches[kMaxOrder + 1] = {0};
    double totals[kMaxOrder + 1] = {0};
    double hyp_len = 0;
    double ref_len = 0;

    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        auto hyp = char_tokens(hypotheses[i]);
        auto ref = char_tokens(references[i]);
        hyp_len += static_cast<double>(hyp.size());
        ref_len += static_cast<double>(ref.size());
        for (std::size_t n = 1; n <= kMaxOrder; ++n) {
            auto hyp_grams = ngram_counts(hyp, n);
            auto ref_grams = ngram_counts(ref, n);
            for (const auto& [gram, count] : hyp_grams) {
                totals[n] += count;
                auto it = ref_grams.find(gram);
                if (it != ref_grams.end()) matches[n] += std::min(count, it->second);
            }
        }
    }

    if (hyp_len == 0 || totals[1] == 0 || matches[1] == 0) return 0.0;
    double log_sum = std::log(matches[1] / totals[1]);
    for (std::size_t n = 2; n <= kMaxOrder; ++n)
        log_sum += std::log((matches[n] + 1.0) / (totals[n] + 1.0));
    double bp = hyp_len >= ref_len ? 1.0 : std::exp(1.0 - ref_len / hyp_len);
    return 100.0 * bp * std::exp(log_sum / static_cast<double>(kMaxOrder));
}

ParagraphEval paragraph_eval(const ParagraphSolution& solution,
                             const std::vector<SentenceSpec>& specs,
                             const std::vector<std::string>& references) {
    if (solution.chosen.size() != specs.size())
        throw Error(ErrorKind::input, "solution and specs are misaligned");
    if (!references.empty() && references.size() != specs.size())
        throw Error(ErrorKind::input, "references are misaligned");
    ParagraphEval eval;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const Candidate& c = solution.chosen[i];
        eval.lengths.push_back(c.length);
        eval.targets.push_back(specs[i].target_length);
        eval.rhymes.push_back(c.rhyme);
        eval.r_bas.push_back(c.r_bas.value);
        eval.r_adv.push_back(c.r_adv.value);
        eval.outputs.push_back(c.text);
    }
    eval.references = references;
    return eval;
}

EvalReport evaluate_corpus(const std::vector<ParagraphEval>& paragraphs,
                           const EvalOptions& options) {
    if (paragraphs.empty()) throw Error(ErrorKind::input, "evaluation over no paragraphs");

    std::vector<int> lengths, targets;
    std::vector<std::vector<RhymeClass>> rhymes;
    std::vector<std::string> hyps, refs;
    double bas_sum = 0, adv_sum = 0;
    for (const auto& p : paragraphs) {
        std::size_t lines = p.lengths.size();
        if (lines == 0) throw Error(ErrorKind::input, "evaluation over an empty paragraph");
        if (p.targets.size() != lines || p.rhymes.size() != lines || p.r_bas.size() != lines ||
            p.r_adv.size() != lines || p.outputs.size() != lines ||
            (!p.references.empty() && p.references.size() != lines))
            throw Error(ErrorKind::input, "paragraph evaluation fields are misaligned");
        lengths.insert(lengths.end(), p.lengths.begin(), p.lengths.end());
        targets.insert(targets.end(), p.targets.begin(), p.targets.end());
        rhymes.push_back(p.rhymes);
        for (double v : p.r_bas) bas_sum += v;
        for (double v : p.r_adv) adv_sum += v;
        if (!p.references.empty()) {
            hyps.insert(hyps.end(), p.outputs.begin(), p.outputs.end());
            refs.insert(refs.end(), p.references.begin(), p.references.end());
        }
    }

    EvalReport report;
    report.paragraphs = static_cast<int>(paragraphs.size());
    report.lines = static_cast<int>(lengths.size());
    report.length_accuracy = length_accuracy(lengths, targets);
    report.rhyme_score = rhyme_score(rhymes, options.rhyme_mode);
    report.mean_r_bas = bas_sum / static_cast<double>(report.lines);
    report.mean_r_adv = adv_sum / static_cast<double>(report.lines);
    if (!hyps.empty()) report.bleu = bleu(hyps, refs);
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json j = {{"length_accuracy", report.length_accuracy},
                        {"rhyme_score", report.rhyme_score},
                        {"mean_r_bas", report.mean_r_bas},
                        {"mean_r_adv", report.mean_r_adv},
                        {"paragraphs", report.paragraphs},
                        {"lines", report.lines}};
    if (report.bleu) j["bleu"] = *report.bleu;
    return j;
}

std::string report_table(const EvalReport& report) {
    std::vector<std::pair<std::string, std::string>> rows = {
        {"length accuracy", fixed(report.length_accuracy, 4)},
        {"rhyme score", fixed(report.rhyme_score, 4)},
        {"mean basic reward", fixed(report.mean_r_bas, 3)},
        {"mean advanced reward", fixed(report.mean_r_adv, 3)},
    };
    if (report.bleu) rows.emplace_back("bleu", fixed(*report.bleu, 2));
    rows.emplace_back("paragraphs", std::to_string(report.paragraphs));
    rows.emplace_back("lines", std::to_string(report.lines));

    std::size_t width = 0;
    for (const auto& [name, value] : rows) width = std::max(width, name.size());
    std::string table;
    for (const auto& [name, value] : rows) {
        table += name;
        table.append(width - name.size() + 2, ' ');
        table += value;
        table += '\n';
    }
    return table;
}

}  // namespace lyricopt
