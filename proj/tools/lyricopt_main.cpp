#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lyricopt/corpusfilter.hpp"
#include "lyricopt/error.hpp"
#include "lyricopt/evalkit.hpp"
#include "lyricopt/genclient.hpp"
#include "lyricopt/jsonl.hpp"
#include "lyricopt/pipeline.hpp"
#include "lyricopt/rewards.hpp"
#include "lyricopt/textproc.hpp"

namespace {

using nlohmann::json;
using namespace lyricopt;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return 2;
        case ErrorKind::input: return 3;
        case ErrorKind::backend: return 4;
        case ErrorKind::internal: return 5;
    }
    return 5;
}

struct AppConfig {
    std::string pinyin_path = "data/pinyin_finals.tsv";
    std::string rhymes_path = "data/rhyme_classes.tsv";
    PipelineConfig pipeline;
};

// --- config file ---

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& scope) {
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw Error(ErrorKind::config, "unknown config key " + scope + key);
    }
}

template <typename T>
void read_key(const json& j, const std::string& key, T& out, const std::string& scope) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const std::exception&) {
        throw Error(ErrorKind::config, "config key " + scope + key + " has the wrong type");
    }
}

void load_scorer_config(const json& j, ScorerHandle& handle, const std::string& scope) {
    reject_unknown_keys(j,
                        {"kind", "endpoint", "auth_env", "parallelism", "timeout_ms",
                         "max_tokens", "basic_template", "advanced_template", "mock_length_hint"},
                        scope);
    std::string kind;
    read_key(j, "kind", kind, scope);
    if (!kind.empty()) {
        if (kind == "mock")
            handle.kind = ScorerHandle::Kind::mock;
        else if (kind == "http")
            handle.kind = ScorerHandle::Kind::http;
        else
            throw Error(ErrorKind::config, "config key " + scope + "kind must be mock or http");
    }
    read_key(j, "endpoint", handle.endpoint, scope);
    read_key(j, "auth_env", handle.auth_env, scope);
    read_key(j, "parallelism", handle.parallelism, scope);
    read_key(j, "timeout_ms", handle.timeout_ms, scope);
    read_key(j, "max_tokens", handle.max_tokens, scope);
    read_key(j, "basic_template", handle.basic_template, scope);
    read_key(j, "advanced_template", handle.advanced_template, scope);
    if (j.contains("mock_length_hint")) {
        int hint = 0;
        read_key(j, "mock_length_hint", hint, scope);
        handle.mock_length_hint = hint;
    }
}

void load_generator_config(const json& j, GeneratorHandle& handle, const std::string& scope) {
    reject_unknown_keys(j, {"kind", "endpoint", "auth_env", "parallelism", "timeout_ms", "mock"},
                        scope);
    std::string kind;
    read_key(j, "kind", kind, scope);
    if (!kind.empty()) {
        if (kind == "mock")
            handle.kind = GeneratorHandle::Kind::mock;
        else if (kind == "http")
            handle.kind = GeneratorHandle::Kind::http;
        else
            throw Error(ErrorKind::config, "config key " + scope + "kind must be mock or http");
    }
    read_key(j, "endpoint", handle.endpoint, scope);
    read_key(j, "auth_env", handle.auth_env, scope);
    read_key(j, "parallelism", handle.parallelism, scope);
    read_key(j, "timeout_ms", handle.timeout_ms, scope);
    if (j.contains("mock")) {
        const json& m = j.at("mock");
        std::string mock_scope = scope + "mock.";
        reject_unknown_keys(m,
                            {"mode", "length_jitter", "rhyme_adherence", "classes_per_sentence",
                             "allowed_classes"},
                            mock_scope);
        std::string mode;
        read_key(m, "mode", mode, mock_scope);
        if (!mode.empty()) {
            if (mode == "sampled")
                handle.mock.mode = MockGenConfig::Mode::sampled;
            else if (mode == "exhaustive")
                handle.mock.mode = MockGenConfig::Mode::exhaustive;
            else if (mode == "impoverished")
                handle.mock.mode = MockGenConfig::Mode::impoverished;
            else
                throw Error(ErrorKind::config,
                            "config key " + mock_scope +
                                "mode must be sampled, exhaustive or impoverished");
        }
        read_key(m, "length_jitter", handle.mock.length_jitter, mock_scope);
        read_key(m, "rhyme_adherence", handle.mock.rhyme_adherence, mock_scope);
        read_key(m, "classes_per_sentence", handle.mock.classes_per_sentence, mock_scope);
        read_key(m, "allowed_classes", handle.mock.allowed_classes, mock_scope);
    }
}

AppConfig load_config(const std::string& path) {
    AppConfig cfg;
    if (path.empty()) return cfg;

    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::config, "cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error(ErrorKind::config, path + ": " + e.what());
    }
    if (!j.is_object()) throw Error(ErrorKind::config, path + ": config must be a JSON object");

    reject_unknown_keys(j,
                        {"tables", "samples_pass1", "samples_pass2", "seed", "fail_fast",
                         "weights", "generation", "generator", "basic_scorer",
                         "advanced_scorer"},
                        "");
    if (j.contains("tables")) {
        const json& t = j.at("tables");
        reject_unknown_keys(t, {"pinyin", "rhymes"}, "tables.");
        read_key(t, "pinyin", cfg.pinyin_path, "tables.");
        read_key(t, "rhymes", cfg.rhymes_path, "tables.");
    }
    read_key(j, "samples_pass1", cfg.pipeline.samples_pass1, "");
    read_key(j, "samples_pass2", cfg.pipeline.samples_pass2, "");
    read_key(j, "seed", cfg.pipeline.seed, "");
    read_key(j, "fail_fast", cfg.pipeline.fail_fast, "");
    if (j.contains("weights")) {
        const json& w = j.at("weights");
        reject_unknown_keys(
            w, {"lambda1", "lambda2", "lambda3", "lambda4", "beta", "hard_basic_floor"},
            "weights.");
        read_key(w, "lambda1", cfg.pipeline.weights.lambda1, "weights.");
        read_key(w, "lambda2", cfg.pipeline.weights.lambda2, "weights.");
        read_key(w, "lambda3", cfg.pipeline.weights.lambda3, "weights.");
        read_key(w, "lambda4", cfg.pipeline.weights.lambda4, "weights.");
        read_key(w, "beta", cfg.pipeline.weights.beta, "weights.");
        read_key(w, "hard_basic_floor", cfg.pipeline.weights.hard_basic_floor, "weights.");
    }
    if (j.contains("generation")) {
        const json& g = j.at("generation");
        reject_unknown_keys(g, {"temperature", "top_p", "max_tokens"}, "generation.");
        read_key(g, "temperature", cfg.pipeline.params.temperature, "generation.");
        read_key(g, "top_p", cfg.pipeline.params.top_p, "generation.");
        read_key(g, "max_tokens", cfg.pipeline.params.max_tokens, "generation.");
    }
    if (j.contains("generator"))
        load_generator_config(j.at("generator"), cfg.pipeline.generator, "generator.");
    if (j.contains("basic_scorer"))
        load_scorer_config(j.at("basic_scorer"), cfg.pipeline.basic_scorer, "basic_scorer.");
    if (j.contains("advanced_scorer"))
        load_scorer_config(j.at("advanced_scorer"), cfg.pipeline.advanced_scorer,
                           "advanced_scorer.");
    return cfg;
}

void force_mock(AppConfig& cfg) {
    cfg.pipeline.generator.kind = GeneratorHandle::Kind::mock;
    cfg.pipeline.basic_scorer.kind = ScorerHandle::Kind::mock;
    cfg.pipeline.advanced_scorer.kind = ScorerHandle::Kind::mock;
}

RhymeData load_tables(const AppConfig& cfg) {
    return RhymeData::load(cfg.pinyin_path, cfg.rhymes_path);
}

// Flags shared by the subcommands that read an AppConfig.
struct CommonFlags {
    std::string config_path;
    std::optional<std::string> pinyin_path;
    std::optional<std::string> rhymes_path;
    bool mock = false;

    void attach(CLI::App* cmd, bool with_mock = true) {
        cmd->add_option("--config", config_path, "JSON configuration file");
        cmd->add_option("--pinyin", pinyin_path, "character-to-final table (TSV)");
        cmd->add_option("--rhymes", rhymes_path, "final-to-class table (TSV)");
        if (with_mock)
            cmd->add_flag("--mock", mock, "force the mock generator and scorers (no network)");
    }

    AppConfig resolve() const {
        AppConfig cfg = load_config(config_path);
        if (pinyin_path) cfg.pinyin_path = *pinyin_path;
        if (rhymes_path) cfg.rhymes_path = *rhymes_path;
        if (mock) force_mock(cfg);
        return cfg;
    }
};

// --- translate ---

int run_translate(const AppConfig& cfg, const std::string& in_path,
                  const std::string& out_path) {
    RhymeData data = load_tables(cfg);
    auto paragraphs = group_song(read_song_file(in_path));
    std::vector<ParagraphSpec> specs;
    specs.reserve(paragraphs.size());
    for (const auto& p : paragraphs) specs.push_back(p.spec);

    SongResult result = translate_song(specs, cfg.pipeline, data);
    write_song_output(out_path, paragraphs, result);

    std::size_t lines = 0;
    for (const auto& p : specs) lines += p.sentences.size();
    std::cout << "wrote " << out_path << ": " << paragraphs.size() << " paragraphs, " << lines
              << " lines";
    if (!result.failures.empty()) std::cout << ", " << result.failures.size() << " failed";
    std::cout << "\n";

    for (const auto& failure : result.failures) std::cerr << failure.message << "\n";
    if (!result.failures.empty()) return exit_code(result.failures.front().kind);
    return 0;
}

// --- eval ---

std::map<std::string, RhymeClass> class_name_map(const RhymeData& data) {
    std::map<std::string, RhymeClass> names;
    for (int id = 0; id < data.rhymes.num_classes(); ++id)
        names[data.rhymes.class_name(id)] = RhymeClass{id, data.rhymes.class_name(id)};
    names["Unknown"] = unknown_rhyme();
    return names;
}

int run_eval(const AppConfig& cfg, const std::string& outputs_path,
             const std::string& song_path, const std::string& report_path,
             const std::string& rhyme_mode) {
    RhymeData data = load_tables(cfg);
    auto names = class_name_map(data);

    EvalOptions options;
    if (rhyme_mode == "plurality")
        options.rhyme_mode = EvalOptions::RhymeMode::plurality;
    else if (rhyme_mode == "last")
        options.rhyme_mode = EvalOptions::RhymeMode::last_anchored;
    else
        throw Error(ErrorKind::config, "--rhyme-mode must be plurality or last");

    // references, when a song file is supplied
    std::map<std::string, std::string> references;
    if (!song_path.empty()) {
        for (const auto& line : read_song_file(song_path)) {
            if (!line.reference) continue;
            references[line.song_id.dump() + "\x1f" + line.paragraph_id.dump() + "\x1f" +
                       std::to_string(line.line_idx)] = *line.reference;
        }
    }

    struct EvalLine {
        int line_idx;
        int length;
        int target;
        RhymeClass rhyme;
        double r_bas;
        double r_adv;
        std::string chinese;
        std::string key;
    };
    std::vector<std::vector<EvalLine>> grouped;
    std::map<std::string, std::size_t> order;

    auto records = read_jsonl(outputs_path);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const json& r = records[i];
        if (!r.contains("line_idx")) continue;  // paragraph summary or error record
        try {
            EvalLine line;
            line.line_idx = r.at("line_idx").get<int>();
            line.length = r.at("length").get<int>();
            line.target = r.at("target_length").get<int>();
            std::string name = r.at("rhyme_class").get<std::string>();
            auto it = names.find(name);
            if (it == names.end()) throw std::runtime_error("unknown rhyme class " + name);
            line.rhyme = it->second;
            line.r_bas = r.at("r_bas").get<double>();
            line.r_adv = r.at("r_adv").get<double>();
            line.chinese = r.at("chinese").get<std::string>();
            std::string group_key =
                r.at("song_id").dump() + "\x1f" + r.at("paragraph_id").dump();
            line.key = group_key + "\x1f" + std::to_string(line.line_idx);
            auto pos = order.find(group_key);
            if (pos == order.end()) {
                pos = order.emplace(group_key, grouped.size()).first;
                grouped.emplace_back();
            }
            grouped[pos->second].push_back(std::move(line));
        } catch (const std::exception& e) {
            throw Error(ErrorKind::input,
                        outputs_path + ": record " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    if (grouped.empty())
        throw Error(ErrorKind::input, outputs_path + " contains no line records");

    std::vector<ParagraphEval> evals;
    for (auto& paragraph : grouped) {
        std::stable_sort(paragraph.begin(), paragraph.end(),
                         [](const EvalLine& a, const EvalLine& b) {
                             return a.line_idx < b.line_idx;
                         });
        ParagraphEval eval;
        std::size_t with_reference = 0;
        for (const auto& line : paragraph) {
            eval.lengths.push_back(line.length);
            eval.targets.push_back(line.target);
            eval.rhymes.push_back(line.rhyme);
            eval.r_bas.push_back(line.r_bas);
            eval.r_adv.push_back(line.r_adv);
            eval.outputs.push_back(line.chinese);
            auto ref = references.find(line.key);
            if (ref != references.end()) {
                eval.references.push_back(ref->second);
                ++with_reference;
            }
        }
        if (with_reference != 0 && with_reference != paragraph.size())
            throw Error(ErrorKind::input,
                        "a paragraph mixes lines with and without references");
        evals.push_back(std::move(eval));
    }

    EvalReport report = evaluate_corpus(evals, options);
    std::cout << report_table(report);
    if (!report_path.empty())
        atomic_write_text(report_path, report_to_json(report).dump(2) + "\n");
    return 0;
}

// --- filter ---

int run_filter(const AppConfig& cfg, const std::string& in_path, const std::string& out_path,
               std::string mode_name) {
    std::transform(mode_name.begin(), mode_name.end(), mode_name.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    ThresholdMode mode;
    if (mode_name == "Q")
        mode = ThresholdMode::Q;
    else if (mode_name == "HQ")
        mode = ThresholdMode::HQ;
    else
        throw Error(ErrorKind::config, "--mode must be Q or HQ");

    auto corpus = read_jsonl_as<ParallelPair>(in_path);
    auto kept = filter_quality(corpus, cfg.pipeline.basic_scorer, mode);
    write_jsonl_as(out_path, kept);
    std::cout << "kept " << kept.size() << " of " << corpus.size() << " records\n";
    return 0;
}

// --- rebalance ---

int run_rebalance(const std::string& in_path, const std::string& out_path,
                  const std::string& preset, const std::string& plan_path,
                  std::optional<std::uint64_t> seed_flag, std::string score_field) {
    if (preset.empty() == plan_path.empty())
        throw Error(ErrorKind::config, "exactly one of --preset and --plan is required");

    RebalancePlan plan;
    if (!preset.empty()) {
        if (preset == "basic")
            plan = basic_rebalance_plan(seed_flag.value_or(0));
        else if (preset == "advanced")
            plan = advanced_rebalance_plan(seed_flag.value_or(0));
        else
            throw Error(ErrorKind::config, "--preset must be basic or advanced");
        if (score_field.empty()) score_field = preset;
    } else {
        std::ifstream in(plan_path);
        if (!in) throw Error(ErrorKind::config, "cannot open plan file: " + plan_path);
        json j;
        try {
            in >> j;
        } catch (const std::exception& e) {
            throw Error(ErrorKind::config, plan_path + ": " + e.what());
        }
        reject_unknown_keys(j, {"seed", "score", "actions"}, "plan.");
        read_key(j, "seed", plan.seed, "plan.");
        if (j.contains("score") && score_field.empty())
            score_field = j.at("score").get<std::string>();
        if (!j.contains("actions") || !j.at("actions").is_object())
            throw Error(ErrorKind::config, plan_path + ": plan.actions must be an object");
        for (const auto& [key, value] : j.at("actions").items()) {
            try {
                plan.actions[std::stoi(key)] = value.get<double>();
            } catch (const Error&) {
                throw;
            } catch (const std::exception&) {
                throw Error(ErrorKind::config,
                            plan_path + ": bad action entry for class " + key);
            }
        }
        if (seed_flag) plan.seed = *seed_flag;
    }
    if (score_field.empty()) score_field = "basic";
    if (score_field != "basic" && score_field != "advanced")
        throw Error(ErrorKind::config, "--score must be basic or advanced");

    auto records = read_jsonl_as<ParallelPair>(in_path);
    std::vector<int> labels;
    labels.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& score = score_field == "basic" ? records[i].r_bas : records[i].r_adv;
        if (!score)
            throw Error(ErrorKind::input, "record " + std::to_string(i + 1) + " lacks r_" +
                                              (score_field == "basic" ? "bas" : "adv"));
        labels.push_back(round_score(*score));
    }

    auto kept = rebalance(records, labels, plan);
    write_jsonl_as(out_path, kept);
    std::cout << "kept " << kept.size() << " of " << records.size() << " records\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Singable lyric translation toolkit"};
    app.require_subcommand(1);

    // translate
    auto* translate = app.add_subcommand("translate", "translate a song file (JSONL)");
    CommonFlags translate_flags;
    std::string translate_in, translate_out;
    std::optional<int> samples1, samples2;
    std::optional<std::uint64_t> translate_seed;
    bool fail_fast = false;
    translate->add_option("--in", translate_in, "input song JSONL")->required();
    translate->add_option("--out", translate_out, "output JSONL")->required();
    translate->add_option("--samples1", samples1, "first-pass samples per sentence");
    translate->add_option("--samples2", samples2, "second-pass samples per sentence (0 skips)");
    translate->add_option("--seed", translate_seed, "master random seed");
    translate->add_flag("--fail-fast", fail_fast, "abort on the first paragraph failure");
    translate_flags.attach(translate);

    // eval
    auto* eval = app.add_subcommand("eval", "score a translated song file");
    CommonFlags eval_flags;
    std::string eval_outputs, eval_song, eval_report;
    std::string rhyme_mode = "plurality";
    eval->add_option("--outputs", eval_outputs, "translated song JSONL")->required();
    eval->add_option("--song", eval_song, "original song JSONL (supplies references)");
    eval->add_option("--report", eval_report, "write the JSON report here");
    eval->add_option("--rhyme-mode", rhyme_mode, "plurality or last");
    eval_flags.attach(eval, /*with_mock=*/false);

    // filter
    auto* filter = app.add_subcommand("filter", "keep quality records of a parallel corpus");
    CommonFlags filter_flags;
    std::string filter_in, filter_out, filter_mode;
    filter->add_option("--in", filter_in, "corpus JSONL")->required();
    filter->add_option("--out", filter_out, "filtered JSONL")->required();
    filter->add_option("--mode", filter_mode, "Q (scores >= 3) or HQ (= 4)")->required();
    filter_flags.attach(filter);

    // rebalance
    auto* rebalance_cmd = app.add_subcommand("rebalance", "resample corpus classes");
    std::string rebalance_in, rebalance_out, rebalance_preset, rebalance_plan, rebalance_score;
    std::optional<std::uint64_t> rebalance_seed;
    rebalance_cmd->add_option("--in", rebalance_in, "corpus JSONL")->required();
    rebalance_cmd->add_option("--out", rebalance_out, "rebalanced JSONL")->required();
    rebalance_cmd->add_option("--preset", rebalance_preset, "basic or advanced");
    rebalance_cmd->add_option("--plan", rebalance_plan, "JSON plan file");
    rebalance_cmd->add_option("--seed", rebalance_seed, "override the plan seed");
    rebalance_cmd->add_option("--score", rebalance_score, "label by basic or advanced score");

    // rhyme
    auto* rhyme = app.add_subcommand("rhyme", "rhyme class of a Chinese line");
    CommonFlags rhyme_flags;
    std::string rhyme_text;
    rhyme->add_option("text", rhyme_text, "Chinese text")->required();
    rhyme_flags.attach(rhyme, /*with_mock=*/false);

    // syllables
    auto* syllables = app.add_subcommand("syllables", "syllable count of an English line");
    std::string syllables_text;
    syllables->add_option("text", syllables_text, "English text")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (translate->parsed()) {
            AppConfig cfg = translate_flags.resolve();
            if (samples1) cfg.pipeline.samples_pass1 = *samples1;
            if (samples2) cfg.pipeline.samples_pass2 = *samples2;
            if (translate_seed) cfg.pipeline.seed = *translate_seed;
            if (fail_fast) cfg.pipeline.fail_fast = true;
            return run_translate(cfg, translate_in, translate_out);
        }
        if (eval->parsed())
            return run_eval(eval_flags.resolve(), eval_outputs, eval_song, eval_report,
                            rhyme_mode);
        if (filter->parsed())
            return run_filter(filter_flags.resolve(), filter_in, filter_out, filter_mode);
        if (rebalance_cmd->parsed())
            return run_rebalance(rebalance_in, rebalance_out, rebalance_preset, rebalance_plan,
                                 rebalance_seed, rebalance_score);
        if (rhyme->parsed()) {
            RhymeData data = load_tables(rhyme_flags.resolve());
            std::cout << rhyme_class(rhyme_text, data).name << "\n";
            return 0;
        }
        if (syllables->parsed()) {
            std::cout << count_syllables(syllables_text) << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 5;
    }
    return 0;
}
