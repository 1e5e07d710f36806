#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "tutor_eval/corpus.hpp"
#include "test_support.hpp"

using namespace tutor_eval;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    auto dir = fs::temp_directory_path() / "tutor_eval_corpus_tests";
    fs::create_directories(dir);
    return dir / name;
}

Dialogue dialogue_with_words(const std::string& id, std::size_t words) {
    std::string text;
    for (std::size_t i = 0; i < words; ++i) text += "word ";
    return Dialogue::make(id, Source::Synthetic,
                          {{0, Speaker::Tutor, text}}, text.size());
}

} // namespace

TEST_CASE("parse_transcript handles explicit speaker tags") {
    auto d = parse_transcript("Tutor: hi\nStudent: hello", "t1", Source::RealLife);
    REQUIRE(d.utterances().size() == 2);
    CHECK(d.utterances()[0].speaker == Speaker::Tutor);
    CHECK(d.utterances()[0].text == "hi");
    CHECK(d.utterances()[1].speaker == Speaker::Student);
    CHECK(d.utterances()[1].text == "hello");
    CHECK(d.byte_size() == std::string("Tutor: hi\nStudent: hello").size());
}

TEST_CASE("parse_transcript on the bundled worked example") {
    auto d = test_support::load_reference_dialogue();
    REQUIRE(!d.utterances().empty());
    CHECK(d.utterances()[0].speaker == Speaker::Student);
    CHECK(d.utterances()[0].text.rfind("So, I have the equation 4y + 7 = 31", 0) == 0);
    REQUIRE(d.utterances().size() == 14);
    for (std::size_t i = 0; i < d.utterances().size(); ++i) {
        Speaker expected = i % 2 == 0 ? Speaker::Student : Speaker::Tutor;
        CHECK(d.utterances()[i].speaker == expected);
    }
}

TEST_CASE("parse_transcript falls back to alternation starting with the tutor") {
    auto d = parse_transcript("welcome back\nthanks", "t2", Source::RealLife);
    REQUIRE(d.utterances().size() == 2);
    CHECK(d.utterances()[0].speaker == Speaker::Tutor);
    CHECK(d.utterances()[1].speaker == Speaker::Student);
}

TEST_CASE("parse_transcript merges consecutive same-speaker tagged lines") {
    auto d = parse_transcript("Tutor: hi\nTutor: again\nStudent: hello", "t3", Source::RealLife);
    REQUIRE(d.utterances().size() == 2);
    CHECK(d.utterances()[0].text == "hi again");
}

TEST_CASE("parse_transcript appends untagged continuation lines") {
    auto d = parse_transcript("Tutor: first part\nsecond part\nStudent: ok", "t4",
                              Source::RealLife);
    REQUIRE(d.utterances().size() == 2);
    CHECK(d.utterances()[0].text == "first part second part");
}

TEST_CASE("parse_transcript error cases") {
    CHECK_THROWS_AS(parse_transcript("\n  \n", "t5", Source::RealLife), EmptyTranscript);
    CHECK_THROWS_AS(parse_transcript("Teacher: hi\nStudent: hello", "t6", Source::RealLife),
                    UnresolvableSpeakers);
}

TEST_CASE("filter_by_size uses inclusive default bounds") {
    std::vector<Dialogue> ds;
    auto with_size = [](const std::string& id, std::size_t size) {
        return Dialogue::make(id, Source::RealLife, {{0, Speaker::Tutor, "hi"}}, size);
    };
    ds.push_back(with_size("tiny", 100));
    ds.push_back(with_size("low_edge", 2048));
    ds.push_back(with_size("mid", 5000));
    ds.push_back(with_size("high_edge", 8192));
    ds.push_back(with_size("huge", 37 * 1024));

    auto kept = filter_by_size(ds);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].id() == "low_edge");
    CHECK(kept[1].id() == "mid");
    CHECK(kept[2].id() == "high_edge");
}

TEST_CASE("filter_by_size output is an in-order subsequence partitioning the input") {
    std::mt19937 rng(7);
    std::vector<Dialogue> ds;
    for (int i = 0; i < 60; ++i)
        ds.push_back(Dialogue::make("d" + std::to_string(i), Source::RealLife,
                                    {{0, Speaker::Tutor, "x"}}, rng() % 10000));
    auto kept = filter_by_size(ds, 2048, 8192);
    std::size_t dropped = 0;
    std::size_t ki = 0;
    for (const auto& d : ds) {
        if (ki < kept.size() && kept[ki].id() == d.id()) {
            CHECK(d.byte_size() >= 2048);
            CHECK(d.byte_size() <= 8192);
            ++ki;
        } else {
            CHECK((d.byte_size() < 2048 || d.byte_size() > 8192));
            ++dropped;
        }
    }
    CHECK(ki == kept.size());
    CHECK(kept.size() + dropped == ds.size());
}

TEST_CASE("corpus_stats examples") {
    SECTION("single dialogue") {
        std::vector<Dialogue> ds{dialogue_with_words("a", 10)};
        auto s = corpus_stats(ds);
        CHECK(s.mean_words == 10.0);
        CHECK(s.sd_words == 0.0);
        CHECK(s.n_dialogues == 1);
    }
    SECTION("two dialogues") {
        std::vector<Dialogue> ds{dialogue_with_words("a", 100), dialogue_with_words("b", 200)};
        auto s = corpus_stats(ds);
        CHECK(s.mean_words == Catch::Approx(150.0));
        CHECK(s.sd_words == Catch::Approx(70.7107).margin(1e-4));
    }
    SECTION("three dialogues") {
        std::vector<Dialogue> ds{dialogue_with_words("a", 150), dialogue_with_words("b", 156),
                                 dialogue_with_words("c", 162)};
        auto s = corpus_stats(ds);
        CHECK(s.mean_words == Catch::Approx(156.0));
        CHECK(s.sd_words == Catch::Approx(6.0));
    }
    SECTION("empty corpus") {
        CHECK_THROWS_AS(corpus_stats({}), EmptyCorpus);
    }
}

TEST_CASE("corpus_stats matches a brute-force recomputation") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        std::size_t n = 1 + rng() % 40;
        std::vector<Dialogue> ds;
        std::vector<double> words;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t w = 1 + rng() % 300;
            words.push_back(static_cast<double>(w));
            ds.push_back(dialogue_with_words("d" + std::to_string(i), w));
        }
        double mean = 0;
        for (double w : words) mean += w;
        mean /= static_cast<double>(n);
        double sd = 0;
        if (n > 1) {
            double ss = 0;
            for (double w : words) ss += (w - mean) * (w - mean);
            sd = std::sqrt(ss / static_cast<double>(n - 1));
        }
        auto s = corpus_stats(ds);
        CHECK(std::abs(s.mean_words - mean) < 1e-9);
        CHECK(std::abs(s.sd_words - sd) < 1e-9);
        double min = *std::min_element(words.begin(), words.end());
        double max = *std::max_element(words.begin(), words.end());
        CHECK(s.mean_words >= min);
        CHECK(s.mean_words <= max);
    }
}

TEST_CASE("save/load round-trips a corpus") {
    auto path = temp_file("roundtrip.jsonl");
    std::vector<Dialogue> ds{test_support::load_reference_dialogue(),
                             parse_transcript("Tutor: hi\nStudent: hello", "t1",
                                              Source::RealLife)};
    save_corpus(ds, path);
    auto loaded = load_corpus(path);
    REQUIRE(loaded.size() == 2);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(loaded[i].id() == ds[i].id());
        CHECK(loaded[i].source() == ds[i].source());
        CHECK(loaded[i].byte_size() == ds[i].byte_size());
        CHECK(loaded[i].word_count() == ds[i].word_count());
        REQUIRE(loaded[i].utterances().size() == ds[i].utterances().size());
        for (std::size_t u = 0; u < ds[i].utterances().size(); ++u) {
            CHECK(loaded[i].utterances()[u].speaker == ds[i].utterances()[u].speaker);
            CHECK(loaded[i].utterances()[u].text == ds[i].utterances()[u].text);
            CHECK(loaded[i].utterances()[u].index == u);
        }
    }
}

TEST_CASE("load_corpus edge cases") {
    SECTION("empty file yields empty list") {
        auto path = temp_file("empty.jsonl");
        std::ofstream(path).close();
        CHECK(load_corpus(path).empty());
    }
    SECTION("missing speaker field reports the line number") {
        auto path = temp_file("bad.jsonl");
        {
            std::ofstream out(path);
            out << R"({"id":"ok","source":"real_life","utterances":[{"speaker":"Tutor","text":"hi"}],"byte_size":2})"
                << "\n";
            out << R"({"id":"bad","source":"real_life","utterances":[{"text":"hi"}],"byte_size":2})"
                << "\n";
        }
        try {
            load_corpus(path);
            FAIL("expected MalformedRecord");
        } catch (const MalformedRecord& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }
    SECTION("missing file") {
        CHECK_THROWS_AS(load_corpus(temp_file("nonexistent.jsonl")), IoFailure);
    }
}

TEST_CASE("dialogue word count matches recomputation from utterances") {
    auto d = test_support::load_reference_dialogue();
    std::size_t words = 0;
    for (const auto& u : d.utterances()) words += detail::count_words(u.text);
    CHECK(d.word_count() == words);
}
