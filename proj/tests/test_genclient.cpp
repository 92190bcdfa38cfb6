#include <doctest.h>

#include <atomic>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "lyricopt/error.hpp"
#include "lyricopt/genclient.hpp"
#include "lyricopt/textproc.hpp"

using namespace lyricopt;

namespace {

const RhymeData& data() {
    static RhymeData d = RhymeData::load(LYRICOPT_DATA_DIR "/pinyin_finals.tsv",
                                         LYRICOPT_DATA_DIR "/rhyme_classes.tsv");
    return d;
}

SentenceSpec spec_of(int index, std::string source, int target) {
    SentenceSpec s;
    s.index = index;
    s.source = std::move(source);
    s.target_length = target;
    return s;
}

void check_annotations(const std::vector<Candidate>& pool) {
    for (const auto& c : pool) {
        CHECK(c.length == count_chinese_length(c.text));
        CHECK(c.rhyme.id == rhyme_class(c.text, data()).id);
        CHECK(c.r_bas.value >= 1.0);
        CHECK(c.r_bas.value <= 4.0);
        CHECK(c.r_adv.value >= 1.0);
        CHECK(c.r_adv.value <= 4.0);
    }
}

// Tiny generation backend for the http tests.
struct TestServer {
    httplib::Server server;
    std::thread thread;
    int port = 0;
    std::atomic<int> hits{0};

    explicit TestServer(std::function<std::string(int hit, const std::string& body)> reply) {
        server.Post("/generate", [this, reply](const httplib::Request& req, httplib::Response& res) {
            int hit = ++hits;
            std::string body = reply(hit, req.body);
            if (body == "#500") {
                res.status = 500;
                res.set_content("boom", "text/plain");
            } else {
                res.set_content(body, "application/json");
            }
        });
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }

    ~TestServer() {
        server.stop();
        thread.join();
    }

    std::string endpoint() const {
        return "http://127.0.0.1:" + std::to_string(port) + "/generate";
    }
};

}  // namespace

TEST_CASE("prompt templates render cleanly") {
    SentenceSpec s = spec_of(0, "you raise me up", 7);

    std::string plain = build_prompt(s, std::nullopt);
    CHECK(plain.find("exactly 7 characters") != std::string::npos);
    CHECK(plain.find("you raise me up") != std::string::npos);
    CHECK(plain.find("[length]") == std::string::npos);
    CHECK(plain.find("[original lyrics]") == std::string::npos);
    CHECK(plain.find("rhyme") == std::string::npos);
    CHECK(plain.rfind("the translation result is:") == plain.size() - 26);

    auto jiangyang = data().rhymes.class_of("ang");
    REQUIRE(jiangyang.has_value());
    std::string rhymed = build_prompt(s, *jiangyang);
    CHECK(rhymed.find("exactly 7 characters") != std::string::npos);
    CHECK(rhymed.find("the ending rhyme type is 江阳") != std::string::npos);
    CHECK(rhymed.find("[rhyme]") == std::string::npos);

    CHECK_THROWS_AS(build_prompt(s, unknown_rhyme()), Error);
}

TEST_CASE("mock generator is a pure function of its inputs") {
    GeneratorHandle gen;  // defaults to mock, sampled
    GenerationParams params;
    params.n_samples = 12;
    SentenceSpec s = spec_of(2, "hold me close and hold me fast", 8);

    auto a = generate_texts(s, std::nullopt, gen, params, data(), 42);
    auto b = generate_texts(s, std::nullopt, gen, params, data(), 42);
    CHECK(a == b);
    CHECK(a.size() == 12);

    auto c = generate_texts(s, std::nullopt, gen, params, data(), 43);
    CHECK(a != c);
}

TEST_CASE("exhaustive mode yields one exact-length candidate per class") {
    GeneratorHandle gen;
    gen.mock.mode = MockGenConfig::Mode::exhaustive;
    GenerationParams params;
    ScorerHandle scorer;
    SentenceSpec s = spec_of(0, "the hills are alive", 5);

    auto pool = generate_candidates(s, std::nullopt, gen, params, scorer, scorer,
                                    data(), 9, PassTag::first, "");
    REQUIRE(pool.size() == 13);
    std::set<int> classes;
    for (const auto& c : pool) {
        CHECK(c.length == 5);
        CHECK(c.rhyme.id != kUnknownRhymeId);
        classes.insert(c.rhyme.id);
        CHECK(c.pass_tag == PassTag::first);
    }
    CHECK(classes.size() == 13);
    check_annotations(pool);
}

TEST_CASE("impoverished mode rotates a small class window per sentence") {
    GeneratorHandle gen;
    gen.mock.mode = MockGenConfig::Mode::impoverished;
    gen.mock.classes_per_sentence = 2;
    GenerationParams params;
    ScorerHandle scorer;

    auto p3 = generate_candidates(spec_of(3, "line three", 4), std::nullopt, gen, params,
                                  scorer, scorer, data(), 1, PassTag::first, "");
    REQUIRE(p3.size() == 2);
    std::set<int> got3;
    for (const auto& c : p3) got3.insert(c.rhyme.id);
    CHECK(got3 == std::set<int>{3, 4});

    // the window wraps around past the last class
    auto p12 = generate_candidates(spec_of(12, "line twelve", 4), std::nullopt, gen, params,
                                   scorer, scorer, data(), 1, PassTag::first, "");
    std::set<int> got12;
    for (const auto& c : p12) got12.insert(c.rhyme.id);
    CHECK(got12 == std::set<int>{0, 12});
}

TEST_CASE("sampled mode honors rhyme adherence and length jitter") {
    GeneratorHandle gen;
    gen.mock.rhyme_adherence = 1.0;
    gen.mock.length_jitter = 0.0;
    GenerationParams params;
    params.n_samples = 40;
    SentenceSpec s = spec_of(1, "edelweiss every morning", 6);
    auto target = data().rhymes.class_of("an");
    REQUIRE(target.has_value());

    auto strict = generate_texts(s, *target, gen, params, data(), 5);
    for (const auto& text : strict) {
        CHECK(count_chinese_length(text) == 6);
        CHECK(rhyme_class(text, data()).id == target->id);
    }

    gen.mock.rhyme_adherence = 0.0;
    auto loose = generate_texts(s, *target, gen, params, data(), 5);
    bool off_target = false;
    for (const auto& text : loose)
        if (rhyme_class(text, data()).id != target->id) off_target = true;
    CHECK(off_target);

    gen.mock.length_jitter = 1.0;
    auto jittered = generate_texts(s, std::nullopt, gen, params, data(), 5);
    bool off_length = false;
    for (const auto& text : jittered) {
        int len = count_chinese_length(text);
        CHECK(len >= 5);
        CHECK(len <= 7);
        if (len != 6) off_length = true;
    }
    CHECK(off_length);
}

TEST_CASE("allowed_classes restricts every mode") {
    GeneratorHandle gen;
    gen.mock.allowed_classes = {2, 7};
    GenerationParams params;
    params.n_samples = 30;
    SentenceSpec s = spec_of(0, "so long farewell", 4);

    for (auto mode : {MockGenConfig::Mode::sampled, MockGenConfig::Mode::exhaustive,
                      MockGenConfig::Mode::impoverished}) {
        gen.mock.mode = mode;
        auto texts = generate_texts(s, std::nullopt, gen, params, data(), 3);
        REQUIRE(!texts.empty());
        for (const auto& text : texts) {
            int id = rhyme_class(text, data()).id;
            CHECK((id == 2 || id == 7));
        }
    }

    gen.mock.allowed_classes = {55};
    CHECK_THROWS_AS(generate_texts(s, std::nullopt, gen, params, data(), 3), Error);
}

TEST_CASE("generate_candidates deduplicates and annotates") {
    GeneratorHandle gen;
    GenerationParams params;
    params.n_samples = 40;
    ScorerHandle scorer;
    SentenceSpec s = spec_of(4, "climb every mountain", 5);

    auto pool = generate_candidates(s, std::nullopt, gen, params, scorer, scorer,
                                    data(), 11, PassTag::second, "climb every mountain");
    REQUIRE(!pool.empty());
    CHECK(pool.size() <= 40);
    std::set<std::string> texts;
    for (const auto& c : pool) {
        CHECK(texts.insert(c.text).second);
        CHECK(c.pass_tag == PassTag::second);
    }
    check_annotations(pool);

    // deterministic end to end
    auto again = generate_candidates(s, std::nullopt, gen, params, scorer, scorer,
                                     data(), 11, PassTag::second, "climb every mountain");
    REQUIRE(again.size() == pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
        CHECK(again[i].text == pool[i].text);
        CHECK(again[i].r_bas.value == pool[i].r_bas.value);
        CHECK(again[i].r_adv.value == pool[i].r_adv.value);
    }

    params.n_samples = 0;
    CHECK_THROWS_AS(generate_candidates(s, std::nullopt, gen, params, scorer, scorer,
                                        data(), 11, PassTag::first, ""),
                    Error);
}

TEST_CASE("http generator round trip") {
    TestServer srv([](int, const std::string& body) {
        auto j = nlohmann::json::parse(body);
        REQUIRE(j.at("n").get<int>() == 4);
        REQUIRE(j.at("temperature").get<double>() == 0.7);
        REQUIRE(j.at("top_p").get<double>() == 0.95);
        REQUIRE(j.at("max_tokens").get<int>() == 64);
        REQUIRE(j.at("prompt").get<std::string>().find("exactly 4 characters") !=
                std::string::npos);
        return nlohmann::json::array({"你好月亮", "  带空格的 ", "", "你好月亮"}).dump();
    });
    GeneratorHandle gen;
    gen.kind = GeneratorHandle::Kind::http;
    gen.endpoint = srv.endpoint();
    GenerationParams params;
    params.n_samples = 4;
    ScorerHandle scorer;
    SentenceSpec s = spec_of(0, "hello moon", 4);

    auto pool = generate_candidates(s, std::nullopt, gen, params, scorer, scorer,
                                    data(), 0, PassTag::first, "");
    REQUIRE(pool.size() == 2);  // blank dropped, duplicate merged, whitespace trimmed
    CHECK(pool[0].text == "你好月亮");
    CHECK(pool[1].text == "带空格的");
    check_annotations(pool);
}

TEST_CASE("http generator accepts the texts envelope") {
    TestServer srv([](int, const std::string&) {
        return nlohmann::json{{"texts", {"月亮河流"}}}.dump();
    });
    GeneratorHandle gen;
    gen.kind = GeneratorHandle::Kind::http;
    gen.endpoint = srv.endpoint();
    GenerationParams params;
    params.n_samples = 1;

    auto texts = generate_texts(spec_of(0, "moon river", 4), std::nullopt, gen, params,
                                data(), 0);
    REQUIRE(texts.size() == 1);
    CHECK(texts[0] == "月亮河流");
}

TEST_CASE("http generator retries a malformed reply once") {
    TestServer srv([](int hit, const std::string&) {
        return hit == 1 ? std::string("oops not json")
                        : nlohmann::json::array({"风吹雨打"}).dump();
    });
    GeneratorHandle gen;
    gen.kind = GeneratorHandle::Kind::http;
    gen.endpoint = srv.endpoint();
    GenerationParams params;
    params.n_samples = 1;

    auto texts = generate_texts(spec_of(0, "wind and rain", 4), std::nullopt, gen, params,
                                data(), 0);
    REQUIRE(texts.size() == 1);
    CHECK(srv.hits.load() == 2);
}

TEST_CASE("http generator failures carry the sentence index") {
    TestServer srv([](int, const std::string&) { return std::string("#500"); });
    GeneratorHandle gen;
    gen.kind = GeneratorHandle::Kind::http;
    gen.endpoint = srv.endpoint();
    GenerationParams params;
    params.n_samples = 2;

    try {
        generate_texts(spec_of(6, "so long", 3), std::nullopt, gen, params, data(), 0);
        FAIL("expected backend error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::backend);
        CHECK(std::string(e.what()).find("sentence 6") != std::string::npos);
    }
}

TEST_CASE("all-blank generations raise an empty pool error") {
    TestServer srv([](int, const std::string&) {
        return nlohmann::json::array({"", "   ", "\n"}).dump();
    });
    GeneratorHandle gen;
    gen.kind = GeneratorHandle::Kind::http;
    gen.endpoint = srv.endpoint();
    GenerationParams params;
    params.n_samples = 3;
    ScorerHandle scorer;

    try {
        generate_candidates(spec_of(2, "empty", 3), std::nullopt, gen, params, scorer,
                            scorer, data(), 0, PassTag::first, "");
        FAIL("expected backend error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::backend);
        CHECK(std::string(e.what()).find("sentence 2") != std::string::npos);
    }
}
