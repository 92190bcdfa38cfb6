#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lyricopt/error.hpp"
#include "lyricopt/evalkit.hpp"
#include "support.hpp"

using namespace lyricopt;
using testsupport::class_of_id;

namespace {

// Mirrors the synthetic set in tests/oracles/bleu_reference.py; the expected
// values below are that script's output.
const std::vector<std::pair<std::string, std::string>> kBleuPairs = {
    {"风吹雨打", "风吹雨打"},
    {"风吹雨停", "风吹雨打"},
    {"我们一起歌唱到天亮", "我们一起唱到天亮"},
    {"月亮河", "月亮河很宽"},
    {"东西南北", "春夏秋冬"},
    {"哈哈哈哈笑", "哈哈大笑"},
    {"天亮之前唱歌", "唱歌之前天亮"},
    {"好", "好"},
    {"好", "坏"},
    {"你 好，月亮", "你好月亮"},
};

std::vector<RhymeClass> classes(std::initializer_list<int> ids) {
    std::vector<RhymeClass> out;
    for (int id : ids) out.push_back(class_of_id(id));
    return out;
}

}  // namespace

TEST_CASE("length accuracy") {
    CHECK(length_accuracy({5, 7, 4}, {5, 7, 4}) == 1.0);
    CHECK(length_accuracy({5, 7, 4}, {5, 7, 9}) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(length_accuracy({5}, {6}) == 0.0);
    CHECK_THROWS_AS(length_accuracy({}, {}), Error);
    CHECK_THROWS_AS(length_accuracy({1, 2}, {1}), Error);
}

TEST_CASE("rhyme score plurality") {
    CHECK(rhyme_score({classes({3, 3, 3, 3})}) == 1.0);
    CHECK(rhyme_score({classes({3, 3, 5, 3})}) == 0.75);
    CHECK(rhyme_score({classes({8})}) == 1.0);

    // Unknown never groups, even with itself
    CHECK(rhyme_score({classes({13, 13, 13})}) == 0.0);
    CHECK(rhyme_score({classes({13, 13, 2})}) == doctest::Approx(1.0 / 3.0));

    // unweighted mean across paragraphs
    CHECK(rhyme_score({classes({1, 1}), classes({1, 2})}) == 0.75);

    CHECK_THROWS_AS(rhyme_score({}), Error);
    CHECK_THROWS_AS(rhyme_score({classes({})}), Error);
}

TEST_CASE("rhyme score is invariant under within-paragraph permutation") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<RhymeClass> paragraph;
        std::size_t n = 1 + rng() % 8;
        for (std::size_t i = 0; i < n; ++i)
            paragraph.push_back(class_of_id(static_cast<int>(rng() % 14)));
        double base = rhyme_score({paragraph});
        std::shuffle(paragraph.begin(), paragraph.end(), rng);
        CHECK(rhyme_score({paragraph}) == base);
    }
}

TEST_CASE("rhyme score last-anchored variant") {
    auto anchored = EvalOptions::RhymeMode::last_anchored;
    CHECK(rhyme_score({classes({3, 5, 3, 3})}, anchored) == 0.75);
    CHECK(rhyme_score({classes({3, 3, 5})}, anchored) == doctest::Approx(1.0 / 3.0));
    CHECK(rhyme_score({classes({3, 3, 13})}, anchored) == 0.0);  // Unknown anchor
    CHECK(rhyme_score({classes({8})}, anchored) == 1.0);
}

TEST_CASE("bleu identities and edges") {
    CHECK(bleu({"风吹雨打"}, {"风吹雨打"}) == doctest::Approx(100.0));
    CHECK(bleu({"好"}, {"好"}) == doctest::Approx(100.0));
    CHECK(bleu({"东西南北"}, {"春夏秋冬"}) == 0.0);
    CHECK(bleu({"你 好"}, {"你好"}) == doctest::Approx(100.0));  // whitespace is not a token

    // self-identity on arbitrary non-empty corpora
    std::vector<std::string> lines = {"春眠不觉晓", "处处闻啼鸟", "夜来风雨声"};
    CHECK(bleu(lines, lines) == doctest::Approx(100.0));

    CHECK_THROWS_AS(bleu({}, {}), Error);
    CHECK_THROWS_AS(bleu({"好"}, {"好", "坏"}), Error);
}

TEST_CASE("bleu matches the reference implementation") {
    std::vector<std::string> hyps, refs;
    for (const auto& [h, r] : kBleuPairs) {
        hyps.push_back(h);
        refs.push_back(r);
    }
    auto near = [](double a, double b) { return std::abs(a - b) <= 0.1; };
    CHECK(near(bleu(hyps, refs), 44.471582));
    CHECK(near(bleu(refs, refs), 100.0));
    CHECK(near(bleu({hyps[1]}, {refs[1]}), 65.803701));
    CHECK(near(bleu({hyps[3]}, {refs[3]}), 51.341712));
    CHECK(near(bleu({hyps[5]}, {refs[5]}), 37.606031));
    CHECK(near(bleu({hyps[6]}, {refs[6]}), 42.728701));
    CHECK(near(bleu({hyps[9]}, {refs[9]}), 44.721360));
}

namespace {

ParagraphEval make_eval(std::vector<int> lengths, std::vector<int> targets,
                        std::vector<int> class_ids, std::vector<std::string> outputs,
                        std::vector<std::string> references = {}) {
    ParagraphEval p;
    p.lengths = std::move(lengths);
    p.targets = std::move(targets);
    for (int id : class_ids) p.rhymes.push_back(class_of_id(id));
    p.r_bas.assign(p.lengths.size(), 3.5);
    p.r_adv.assign(p.lengths.size(), 2.5);
    p.outputs = std::move(outputs);
    p.references = std::move(references);
    return p;
}

}  // namespace

TEST_CASE("evaluate_corpus aggregates all metrics") {
    auto p1 = make_eval({4, 4}, {4, 4}, {3, 3}, {"风吹雨打", "千军万马"},
                        {"风吹雨打", "千军万马"});
    auto p2 = make_eval({3, 5}, {3, 4}, {3, 5}, {"月亮河", "东西南北中"});
    p2.r_bas = {4.0, 4.0};
    p2.r_adv = {3.0, 3.0};

    EvalReport report = evaluate_corpus({p1, p2});
    CHECK(report.paragraphs == 2);
    CHECK(report.lines == 4);
    CHECK(report.length_accuracy == 0.75);
    CHECK(report.rhyme_score == 0.75);  // (1.0 + 0.5) / 2
    CHECK(report.mean_r_bas == doctest::Approx((3.5 + 3.5 + 4.0 + 4.0) / 4.0));
    CHECK(report.mean_r_adv == doctest::Approx((2.5 + 2.5 + 3.0 + 3.0) / 4.0));
    REQUIRE(report.bleu.has_value());
    CHECK(*report.bleu == doctest::Approx(100.0));  // only p1 has references, all exact

    // without references the field is absent
    EvalReport bare = evaluate_corpus({p2});
    CHECK(!bare.bleu.has_value());

    CHECK_THROWS_AS(evaluate_corpus({}), Error);
    auto broken = p1;
    broken.targets.pop_back();
    CHECK_THROWS_AS(evaluate_corpus({broken}), Error);
}

TEST_CASE("paragraph_eval lifts a solution") {
    std::vector<SentenceSpec> specs(2);
    specs[0] = {0, "hello moon", 4};
    specs[1] = {1, "goodbye moon", 4};
    ParagraphSolution sol;
    Candidate a;
    a.text = "你好月亮";
    a.length = 4;
    a.rhyme = class_of_id(11);
    a.r_bas = make_score(4.0);
    a.r_adv = make_score(3.0);
    Candidate b = a;
    b.text = "再见月亮";
    sol.chosen = {a, b};
    sol.rhyme = b.rhyme;

    auto eval = paragraph_eval(sol, specs, {"你好月亮", "再见月亮"});
    CHECK(eval.lengths == std::vector<int>{4, 4});
    CHECK(eval.targets == std::vector<int>{4, 4});
    CHECK(eval.outputs[1] == "再见月亮");
    CHECK(eval.references.size() == 2);
    CHECK(eval.r_bas[0] == 4.0);

    CHECK_THROWS_AS(paragraph_eval(sol, {specs[0]}), Error);
    CHECK_THROWS_AS(paragraph_eval(sol, specs, {"只有一行"}), Error);
}

TEST_CASE("report serialization") {
    EvalReport report;
    report.length_accuracy = 1.0;
    report.rhyme_score = 0.75;
    report.mean_r_bas = 3.25;
    report.mean_r_adv = 2.5;
    report.paragraphs = 2;
    report.lines = 8;

    auto j = report_to_json(report);
    CHECK(j.at("length_accuracy") == 1.0);
    CHECK(j.at("rhyme_score") == 0.75);
    CHECK(!j.contains("bleu"));
    report.bleu = 44.47;
    CHECK(report_to_json(report).at("bleu") == 44.47);

    std::string table = report_table(report);
    CHECK(table.find("length accuracy") != std::string::npos);
    CHECK(table.find("0.7500") != std::string::npos);
    CHECK(table.find("bleu") != std::string::npos);
    CHECK(table.back() == '\n');

    // two-column alignment: every row's value starts at the same column
    std::vector<std::size_t> value_cols;
    std::size_t pos = 0;
    while (pos < table.size()) {
        std::size_t eol = table.find('\n', pos);
        std::string row = table.substr(pos, eol - pos);
        std::size_t last_space = row.find_last_of(' ');
        value_cols.push_back(last_space + 1);
        pos = eol + 1;
    }
    CHECK(!value_cols.empty());
}

TEST_CASE("metric ranges hold on random inputs") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<RhymeClass>> paras;
        std::vector<int> lengths, targets;
        std::size_t n_paras = 1 + rng() % 4;
        for (std::size_t p = 0; p < n_paras; ++p) {
            std::vector<RhymeClass> para;
            std::size_t n = 1 + rng() % 6;
            for (std::size_t i = 0; i < n; ++i) {
                para.push_back(class_of_id(static_cast<int>(rng() % 14)));
                lengths.push_back(static_cast<int>(rng() % 10));
                targets.push_back(static_cast<int>(rng() % 10));
            }
            paras.push_back(para);
        }
        double la = length_accuracy(lengths, targets);
        double rs = rhyme_score(paras);
        CHECK(la >= 0.0);
        CHECK(la <= 1.0);
        CHECK(rs >= 0.0);
        CHECK(rs <= 1.0);
    }
}
