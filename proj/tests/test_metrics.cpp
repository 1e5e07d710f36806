#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "tutor_eval/metrics.hpp"

using namespace tutor_eval;

namespace {

// Brute-force oracle: direct counting over the paired labels.
struct OracleCounts {
    std::size_t agree = 0, tp = 0, fp = 0, fn = 0, tn = 0, n = 0;
};

OracleCounts oracle(const std::vector<int>& ref, const std::vector<int>& pred) {
    OracleCounts c;
    c.n = ref.size();
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (ref[i] == pred[i]) ++c.agree;
        if (ref[i] == 1 && pred[i] == 1) ++c.tp;
        if (ref[i] == 0 && pred[i] == 1) ++c.fp;
        if (ref[i] == 1 && pred[i] == 0) ++c.fn;
        if (ref[i] == 0 && pred[i] == 0) ++c.tn;
    }
    return c;
}

double oracle_kappa(const std::vector<int>& a, const std::vector<int>& b, bool& degenerate) {
    auto c = oracle(a, b);
    double n = static_cast<double>(c.n);
    double po = static_cast<double>(c.agree) / n;
    double pa1 = 0, pb1 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        pa1 += a[i];
        pb1 += b[i];
    }
    pa1 /= n;
    pb1 /= n;
    double pe = pa1 * pb1 + (1 - pa1) * (1 - pb1);
    degenerate = pe >= 1.0;
    if (degenerate) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

} // namespace

TEST_CASE("percent_agreement examples") {
    CHECK(percent_agreement({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(percent_agreement({1, 1, 0, 0}, {1, 0, 0, 1}) == 0.5);
    CHECK(percent_agreement({1}, {0}) == 0.0);
    CHECK_THROWS_AS(percent_agreement({1, 0}, {1}), LengthMismatch);
    CHECK_THROWS_AS(percent_agreement({}, {}), EmptyVectors);
}

TEST_CASE("cohen_kappa hand-computed example") {
    // cells: both-yes 20, a-yes/b-no 5, a-no/b-yes 10, both-no 15
    std::vector<int> a, b;
    auto add = [&](int va, int vb, int count) {
        for (int i = 0; i < count; ++i) {
            a.push_back(va);
            b.push_back(vb);
        }
    };
    add(1, 1, 20);
    add(1, 0, 5);
    add(0, 1, 10);
    add(0, 0, 15);
    CHECK(cohen_kappa(a, b) == Catch::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("cohen_kappa degenerate and identity cases") {
    CHECK(cohen_kappa({1, 0, 1}, {1, 0, 1}) == 1.0);
    CHECK(cohen_kappa({1, 1, 1}, {1, 1, 1}) == 1.0);  // p_e = 1, perfect agreement
    CHECK(cohen_kappa({1, 1, 1}, {1, 1, 0}) == 0.0);  // p_e = 1 rule, mismatch
}

TEST_CASE("kappa symmetry property") {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + rng() % 50;
        std::vector<int> a(n), b(n);
        for (auto& x : a) x = static_cast<int>(rng() % 2);
        for (auto& x : b) x = static_cast<int>(rng() % 2);
        CHECK(cohen_kappa(a, b) == Catch::Approx(cohen_kappa(b, a)).margin(1e-15));
    }
}

TEST_CASE("kappa_band thresholds reproduce the interpretation labels") {
    CHECK(kappa_band(0.59) == "moderate");
    CHECK(kappa_band(0.57) == "moderate");
    CHECK(kappa_band(0.50) == "moderate");
    CHECK(kappa_band(0.54) == "moderate");
    CHECK(kappa_band(1.00) == "perfect");
    CHECK(kappa_band(-0.1) == "poor");
    CHECK(kappa_band(0.0) == "slight");
    CHECK(kappa_band(0.20) == "slight");
    CHECK(kappa_band(0.21) == "fair");
    CHECK(kappa_band(0.40) == "fair");
    CHECK(kappa_band(0.60) == "moderate");
    CHECK(kappa_band(0.61) == "substantial");
    CHECK(kappa_band(0.80) == "substantial");
    CHECK(kappa_band(0.81) == "almost perfect");
    CHECK(kappa_band(0.999) == "almost perfect");
    CHECK_THROWS_AS(kappa_band(1.5), OutOfRange);
}

TEST_CASE("confusion examples") {
    auto c = confusion({1, 1, 1, 0}, {1, 1, 0, 1});
    CHECK(c == ConfusionCounts{2, 1, 1, 0});
    CHECK(confusion({1, 1, 1, 1}, {1, 1, 1, 1}) == ConfusionCounts{4, 0, 0, 0});
    CHECK(confusion({0, 0}, {0, 0}) == ConfusionCounts{0, 0, 0, 2});
}

TEST_CASE("performance examples and degenerate flags") {
    auto p = performance({3, 1, 1, 0});
    CHECK(p.precision == Catch::Approx(0.75));
    CHECK(p.recall == Catch::Approx(0.75));
    CHECK(p.f1 == Catch::Approx(0.75));
    CHECK(p.degenerate_flags.empty());

    auto none_predicted = performance({0, 0, 3, 2});
    CHECK(none_predicted.precision == 0.0);
    CHECK(none_predicted.f1 == 0.0);
    CHECK(none_predicted.degenerate_flags.count(DegenerateFlag::NoPositivePredictions) == 1);

    auto none_referenced = performance({0, 2, 0, 3});
    CHECK(none_referenced.recall == 0.0);
    CHECK(none_referenced.degenerate_flags.count(DegenerateFlag::NoPositiveReferences) == 1);
}

TEST_CASE("f1 reproduces published precision/recall pairs") {
    struct Row {
        double p, r, f1;
    };
    // two models x five criteria
    const Row rows[] = {
        {0.46, 0.67, 0.55}, {0.64, 0.82, 0.72}, {0.58, 0.64, 0.61}, {0.74, 0.88, 0.80},
        {0.74, 0.88, 0.80}, {0.57, 0.73, 0.64}, {0.71, 0.75, 0.73}, {0.59, 0.67, 0.63},
        {1.0, 0.87, 0.93},  {1.0, 0.91, 0.95},
    };
    for (const auto& row : rows) {
        INFO("P=" << row.p << " R=" << row.r);
        CHECK(std::abs(f1_score(row.p, row.r) - row.f1) <= 0.005);
    }
}

TEST_CASE("performance is scale-invariant") {
    ConfusionCounts base{6, 2, 3, 9};
    auto p1 = performance(base);
    for (std::size_t k : {2, 5, 17}) {
        auto pk = performance({base.tp * k, base.fp * k, base.fn * k, base.tn * k});
        CHECK(pk.precision == Catch::Approx(p1.precision));
        CHECK(pk.recall == Catch::Approx(p1.recall));
        CHECK(pk.f1 == Catch::Approx(p1.f1));
    }
}

TEST_CASE("metrics match the brute-force oracle on random vectors") {
    std::mt19937 rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        std::size_t n = 1 + rng() % 200;
        std::vector<int> a(n), b(n);
        for (auto& x : a) x = static_cast<int>(rng() % 2);
        for (auto& x : b) x = static_cast<int>(rng() % 2);
        auto o = oracle(a, b);
        CHECK(percent_agreement(a, b) ==
              static_cast<double>(o.agree) / static_cast<double>(o.n));
        auto c = confusion(a, b);
        CHECK(c == ConfusionCounts{o.tp, o.fp, o.fn, o.tn});
        CHECK(c.total() == n);
        bool degenerate = false;
        double expected = oracle_kappa(a, b, degenerate);
        if (!degenerate)
            CHECK(cohen_kappa(a, b) == Catch::Approx(expected).margin(1e-12));
        else
            CHECK(cohen_kappa(a, b) == expected);
    }
}

TEST_CASE("error_detection_accuracy") {
    VerdictById ref = {{"d1", Verdict::no_error()},
                       {"d2", Verdict::no_error()},
                       {"d3", Verdict::no_error()},
                       {"d4", Verdict::scored({{1, 1, 1, 1, 1}})}};
    VerdictById pred = {{"d1", Verdict::no_error()},
                        {"d2", Verdict::scored({{0, 0, 0, 0, 0}})},
                        {"d3", Verdict::no_error()},
                        {"d4", Verdict::scored({{1, 1, 1, 1, 1}})}};
    CHECK(error_detection_accuracy(ref, pred) == Catch::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(error_detection_accuracy(ref, ref) == 1.0);

    VerdictById all_scored = {{"d1", Verdict::scored({{1, 0, 0, 0, 0}})}};
    CHECK_THROWS_AS(error_detection_accuracy(all_scored, all_scored), NoReferenceNegatives);

    VerdictById missing = {{"d1", Verdict::no_error()}};
    CHECK_THROWS_AS(error_detection_accuracy(missing, {}), MissingPrediction);
}

TEST_CASE("concordant_error_subset") {
    auto scored = Verdict::scored({{1, 0, 1, 0, 1}});
    VerdictById ref = {{"d1", Verdict::no_error()}, {"d2", scored}, {"d4", scored}};
    VerdictById pred = {{"d1", scored}, {"d2", scored}, {"d4", Verdict::no_error()}};
    CHECK(concordant_error_subset(ref, pred) == std::vector<std::string>{"d2"});

    VerdictById disjoint_pred = {{"d1", scored},
                                 {"d2", Verdict::no_error()},
                                 {"d4", Verdict::no_error()}};
    CHECK(concordant_error_subset(ref, disjoint_pred).empty());

    VerdictById big_ref, big_pred;
    for (int i = 0; i < 50; ++i) {
        big_ref.emplace_back("x" + std::to_string(i), scored);
        big_pred.emplace_back("x" + std::to_string(i), scored);
    }
    CHECK(concordant_error_subset(big_ref, big_pred).size() == 50);
}

TEST_CASE("usable_count partitions results") {
    std::vector<JudgeResult> results;
    auto push = [&](std::variant<Verdict, ParseFailure, TransportFailure> outcome) {
        JudgeResult r;
        r.dialogue_id = "d";
        r.outcome = std::move(outcome);
        results.push_back(std::move(r));
    };
    CHECK(usable_count({}).usable == 0);
    for (int i = 0; i < 23; ++i) push(Verdict::no_error());
    for (int i = 0; i < 27; ++i) push(ParseFailure{"NoObjectFound"});
    auto c = usable_count(results);
    CHECK(c.usable == 23);
    CHECK(c.parse_failures == 27);
    CHECK(c.transport_failures == 0);
    push(TransportFailure{"timeout"});
    c = usable_count(results);
    CHECK(c.usable + c.parse_failures + c.transport_failures == results.size());
}

TEST_CASE("cost_estimate reproduces the published rate gap") {
    RatePlan cheap{"gpt-3.5-turbo", 0.0015, 0.0015};
    RatePlan expensive{"gpt-4", 0.03, 0.03};
    auto low = cost_estimate(2000, 0, cheap, false);
    CHECK(low.usd == Catch::Approx(0.003).epsilon(1e-12));
    auto high = cost_estimate(2000, 0, expensive, false);
    CHECK(high.usd == Catch::Approx(0.06).epsilon(1e-12));
    CHECK(high.usd / low.usd == Catch::Approx(20.0).margin(1e-9));
    CHECK(cost_estimate(0, 0, expensive, false).usd == 0.0);
}
