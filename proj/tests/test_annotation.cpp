#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "tutor_eval/annotation.hpp"
#include "test_support.hpp"

using namespace tutor_eval;
namespace fs = std::filesystem;

namespace {

Annotation make(const std::string& dialogue, const std::string& grader, Verdict v) {
    return {dialogue, grader, v, ""};
}

Verdict scored(int a, int b, int c, int d, int e) {
    return Verdict::scored({{a, b, c, d, e}});
}

} // namespace

TEST_CASE("record has upsert semantics") {
    AnnotationSet set;
    CHECK_FALSE(set.record(make("d1", "g1", scored(1, 1, 1, 1, 1))));
    CHECK(set.size() == 1);
    CHECK(set.record(make("d1", "g1", Verdict::no_error())));
    CHECK(set.size() == 1);
    CHECK(set.verdict_for("d1", "g1")->is_no_error());
    CHECK_FALSE(set.record(make("d1", "g2", scored(0, 0, 0, 0, 0))));
    CHECK(set.size() == 2);
}

TEST_CASE("pairwise_labels worked example") {
    AnnotationSet set;
    set.record(make("d1", "g1", Verdict::no_error()));
    set.record(make("d2", "g1", scored(1, 1, 1, 1, 1)));
    set.record(make("d1", "g2", Verdict::no_error()));
    set.record(make("d2", "g2", scored(1, 0, 1, 1, 1)));

    SECTION("no-error flag target") {
        auto labels = set.pairwise_labels("g1", "g2", AgreementTarget{NoErrorFlag{}});
        CHECK(labels.labels_a == std::vector<int>{1, 0});
        CHECK(labels.labels_b == std::vector<int>{1, 0});
        CHECK(labels.dialogue_ids == std::vector<std::string>{"d1", "d2"});
    }
    SECTION("criterion target restricts to both-scored dialogues") {
        auto labels = set.pairwise_labels("g1", "g2", AgreementTarget{std::size_t{1}});
        CHECK(labels.labels_a == std::vector<int>{1});
        CHECK(labels.labels_b == std::vector<int>{0});
        CHECK(labels.dialogue_ids == std::vector<std::string>{"d2"});
    }
    SECTION("labels align with direct lookups") {
        auto labels = set.pairwise_labels("g1", "g2", AgreementTarget{NoErrorFlag{}});
        REQUIRE(labels.labels_a.size() == labels.labels_b.size());
        REQUIRE(labels.labels_a.size() == labels.dialogue_ids.size());
        for (std::size_t i = 0; i < labels.dialogue_ids.size(); ++i) {
            const auto& id = labels.dialogue_ids[i];
            CHECK(labels.labels_a[i] == (set.verdict_for(id, "g1")->is_no_error() ? 1 : 0));
            CHECK(labels.labels_b[i] == (set.verdict_for(id, "g2")->is_no_error() ? 1 : 0));
        }
    }
}

TEST_CASE("pairwise_labels error cases") {
    AnnotationSet set;
    set.record(make("d1", "g1", Verdict::no_error()));
    set.record(make("d2", "g2", Verdict::no_error()));
    CHECK_THROWS_AS(set.pairwise_labels("g1", "gx", AgreementTarget{NoErrorFlag{}}),
                    UnknownGrader);
    CHECK_THROWS_AS(set.pairwise_labels("g1", "g2", AgreementTarget{NoErrorFlag{}}), NoOverlap);
}

TEST_CASE("annotation CSV import") {
    auto path = fs::temp_directory_path() / "tutor_eval_ann_import.csv";
    {
        std::ofstream out(path);
        out << "dialogue_id,grader_id,c1,c2,c3,c4,c5\n";
        out << "d7,g1,-1,-1,-1,-1,-1\n";
        out << "d3,g2,1,1,0,1,1\n";
    }
    auto set = import_annotations(path);
    CHECK(set.size() == 2);
    CHECK(set.verdict_for("d7", "g1")->is_no_error());
    CHECK(set.verdict_for("d3", "g2")->scores() == CriterionScores{{1, 1, 0, 1, 1}});
}

TEST_CASE("annotation CSV rejects bad rows") {
    auto path = fs::temp_directory_path() / "tutor_eval_ann_bad.csv";
    SECTION("mixed sentinel") {
        std::ofstream(path) << "dialogue_id,grader_id,c1,c2,c3,c4,c5\nd3,g2,1,-1,0,1,1\n";
        CHECK_THROWS_AS(import_annotations(path), InconsistentSentinel);
    }
    SECTION("short row reports its number") {
        std::ofstream(path) << "dialogue_id,grader_id,c1,c2,c3,c4,c5\nd1,g1,1,1,1,1,1\nd2,g1,1\n";
        try {
            import_annotations(path);
            FAIL("expected MalformedRow");
        } catch (const MalformedRow& e) {
            CHECK(std::string(e.what()).find("row 3") != std::string::npos);
        }
    }
    SECTION("non-integer score") {
        std::ofstream(path) << "dialogue_id,grader_id,c1,c2,c3,c4,c5\nd1,g1,1,x,1,1,1\n";
        CHECK_THROWS_AS(import_annotations(path), MalformedRow);
    }
}

TEST_CASE("export/import round trip preserves every verdict bit") {
    AnnotationSet set;
    set.record(make("d1", "g1", Verdict::no_error()));
    set.record(make("d2", "g1", scored(1, 0, 1, 0, 1)));
    set.record(make("d2", "g2", scored(0, 1, 0, 1, 0)));
    auto path = fs::temp_directory_path() / "tutor_eval_ann_rt.csv";
    export_annotations(set, path);
    auto loaded = import_annotations(path);
    REQUIRE(loaded.size() == set.size());
    for (const auto& a : set.entries())
        CHECK(*loaded.verdict_for(a.dialogue_id, a.grader_id) == a.verdict);
}

TEST_CASE("reference grader must exist in the set") {
    AnnotationSet set;
    set.record(make("d1", "g1", Verdict::no_error()));
    CHECK_THROWS_AS(set.set_reference_grader("g9"), UnknownGrader);
    set.set_reference_grader("g1");
    CHECK(set.reference_grader() == "g1");
}

TEST_CASE("bundled fixture annotations load cleanly") {
    auto set = import_annotations(test_support::fixtures_dir() / "annotations.csv");
    CHECK(set.graders() == std::vector<std::string>{"g1", "g2"});
    CHECK(set.size() == 22);
    CHECK(set.verdict_for("d00", "g1")->is_scored());
    CHECK(total_score(set.verdict_for("d00", "g1")->scores()) == 5);
}
