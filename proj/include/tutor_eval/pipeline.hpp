#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "tutor_eval/annotation.hpp"
#include "tutor_eval/corpus.hpp"
#include "tutor_eval/errors.hpp"
#include "tutor_eval/judge.hpp"
#include "tutor_eval/metrics.hpp"
#include "tutor_eval/report.hpp"

namespace tutor_eval {

// Whole-file atomic write: temp file in the same directory, then rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoFailure("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw IoFailure("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

// --- JudgeResult files: line-delimited JSON -------------------------------

inline nlohmann::json result_to_json(const JudgeResult& r) {
    nlohmann::json j = {{"dialogue_id", r.dialogue_id},
                        {"model_id", r.model_id},
                        {"raw_response", r.raw_response},
                        {"prompt_tokens", r.prompt_tokens},
                        {"completion_tokens", r.completion_tokens},
                        {"tokens_approximate", r.tokens_approximate},
                        {"latency_ms", r.latency_ms}};
    if (const auto* v = std::get_if<Verdict>(&r.outcome)) {
        if (v->is_no_error()) {
            j["outcome"] = {{"type", "no_error"}};
        } else {
            nlohmann::json scores = nlohmann::json::array();
            for (int s : v->scores().values) scores.push_back(s);
            j["outcome"] = {{"type", "scored"}, {"scores", std::move(scores)}};
        }
    } else if (const auto* pf = std::get_if<ParseFailure>(&r.outcome)) {
        j["outcome"] = {{"type", "parse_failure"}, {"reason", pf->reason}};
    } else {
        j["outcome"] = {{"type", "transport_failure"},
                        {"reason", std::get<TransportFailure>(r.outcome).reason}};
    }
    return j;
}

inline JudgeResult result_from_json(const nlohmann::json& j) {
    JudgeResult r;
    r.dialogue_id = j.at("dialogue_id").get<std::string>();
    r.model_id = j.at("model_id").get<std::string>();
    r.raw_response = j.value("raw_response", std::string{});
    r.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
    r.completion_tokens = j.value("completion_tokens", std::size_t{0});
    r.tokens_approximate = j.value("tokens_approximate", false);
    r.latency_ms = j.value("latency_ms", std::size_t{0});
    const auto& o = j.at("outcome");
    std::string type = o.at("type").get<std::string>();
    if (type == "no_error") {
        r.outcome = Verdict::no_error();
    } else if (type == "scored") {
        CriterionScores s;
        const auto& scores = o.at("scores");
        if (scores.size() != kCriterionCount)
            throw MalformedRecord("scored outcome must carry five scores");
        for (std::size_t i = 0; i < kCriterionCount; ++i) s[i] = scores[i].get<int>();
        r.outcome = Verdict::scored(s);
    } else if (type == "parse_failure") {
        r.outcome = ParseFailure{o.value("reason", std::string{})};
    } else if (type == "transport_failure") {
        r.outcome = TransportFailure{o.value("reason", std::string{})};
    } else {
        throw MalformedRecord("unknown outcome type: " + type);
    }
    return r;
}

inline void save_results(const std::vector<JudgeResult>& results,
                         const std::filesystem::path& path) {
    std::string content;
    for (const auto& r : results) content += result_to_json(r).dump() + '\n';
    write_atomic(path, content);
}

inline std::vector<JudgeResult> load_results(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open results: " + path.string());
    std::vector<JudgeResult> results;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw MalformedRecord("results line " + std::to_string(lineno) + ": invalid JSON");
        results.push_back(result_from_json(j));
    }
    return results;
}

// Splits a generation response into per-transcript blocks. Transcripts are
// blank-line separated; decorative header/divider lines are dropped and a
// block only counts when it carries at least one speaker-tagged line.
inline std::vector<std::string> split_generated_transcripts(const std::string& text) {
    std::vector<std::string> blocks;
    std::string current;
    bool has_tag = false;
    auto flush = [&] {
        if (!current.empty() && has_tag) blocks.push_back(current);
        current.clear();
        has_tag = false;
    };
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::string t = detail::trim(line);
        if (t.empty()) {
            flush();
            continue;
        }
        std::string lower = detail::lowercase(t);
        if (lower.rfind("transcript", 0) == 0 || lower.rfind("dialogue", 0) == 0 ||
            lower.rfind("###", 0) == 0 || lower.rfind("---", 0) == 0) {
            flush();
            continue;
        }
        auto [kind, rest] = detail::split_speaker_tag(t);
        if (kind == detail::TagKind::Tutor || kind == detail::TagKind::Student) has_tag = true;
        if (!current.empty()) current += '\n';
        current += t;
    }
    flush();
    return blocks;
}

// --- Rate plans -----------------------------------------------------------

inline std::map<std::string, RatePlan> load_rate_plans(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open rate plan file: " + path.string());
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_array())
        throw MalformedRecord("rate plan file must be a JSON array");
    std::map<std::string, RatePlan> plans;
    for (const auto& e : j) {
        RatePlan p;
        p.model_id = e.at("model_id").get<std::string>();
        p.input_usd_per_1k_tokens = e.at("input_usd_per_1k").get<double>();
        // output rate defaults to the input rate when unpublished
        p.output_usd_per_1k_tokens = e.value("output_usd_per_1k", p.input_usd_per_1k_tokens);
        plans[p.model_id] = p;
    }
    return plans;
}

// --- Report assembly ------------------------------------------------------

struct EvaluationInputs {
    std::vector<Dialogue> dialogues;
    AnnotationSet annotations;  // reference grader must be set
    std::map<std::string, std::vector<JudgeResult>> results_by_model;
    std::map<std::string, RatePlan> rate_plans;
    std::size_t min_bytes = kDefaultMinBytes;
    std::size_t max_bytes = kDefaultMaxBytes;
    double temperature = 0.0;
};

namespace detail {

inline VerdictById reference_verdicts(const AnnotationSet& set, const std::string& grader) {
    VerdictById out;
    for (const auto& id : set.dialogues_for(grader))
        out.emplace_back(id, *set.verdict_for(id, grader));
    return out;
}

inline VerdictById usable_predictions(const std::vector<JudgeResult>& results) {
    VerdictById out;
    for (const auto& r : results)
        if (r.has_verdict()) out.emplace_back(r.dialogue_id, r.verdict());
    return out;
}

inline const Verdict* find_verdict(const VerdictById& v, const std::string& id) {
    for (const auto& [vid, verdict] : v)
        if (vid == id) return &verdict;
    return nullptr;
}

} // namespace detail

inline EvaluationReport build_evaluation_report(const EvaluationInputs& in) {
    EvaluationReport report;
    report.corpus = corpus_stats(in.dialogues);
    report.min_bytes = in.min_bytes;
    report.max_bytes = in.max_bytes;
    report.temperature = in.temperature;

    const std::string& ref_grader = in.annotations.reference_grader();
    if (ref_grader.empty())
        throw UnknownGrader("evaluation requires a reference grader");

    // Agreement table needs exactly two graders (Table-1 layout).
    auto graders = in.annotations.graders();
    if (graders.size() == 2) {
        const auto& a = graders[0];
        const auto& b = graders[1];
        for (std::size_t c = 0; c < kCriterionCount; ++c) {
            try {
                auto labels = in.annotations.pairwise_labels(a, b, AgreementTarget{c});
                report.agreement_rows.push_back(
                    {criteria()[c].name, agreement_report(labels.labels_a, labels.labels_b)});
            } catch (const NoOverlap&) {
                report.warnings.push_back("no shared scored dialogues for criterion " +
                                          criteria()[c].code + "; agreement row omitted");
            }
        }
        try {
            auto labels = in.annotations.pairwise_labels(a, b, AgreementTarget{NoErrorFlag{}});
            report.agreement_rows.push_back(
                {"no error", agreement_report(labels.labels_a, labels.labels_b)});
        } catch (const NoOverlap&) {
            report.warnings.push_back("graders share no dialogues; no-error row omitted");
        }
    } else {
        report.warnings.push_back("agreement table requires exactly two graders, found " +
                                  std::to_string(graders.size()));
    }

    VerdictById reference = detail::reference_verdicts(in.annotations, ref_grader);
    std::size_t ref_negatives = 0;
    for (const auto& [id, v] : reference)
        if (v.is_no_error()) ++ref_negatives;

    for (const auto& [model, results] : in.results_by_model) {
        report.model_ids.push_back(model);

        ModelSummary summary;
        summary.model_id = model;
        summary.usable = usable_count(results);

        VerdictById predictions = detail::usable_predictions(results);

        // Restriction to dialogues with a usable prediction mirrors the
        // concordance rule; the all-annotated variant treats unusable
        // responses as misses.
        VerdictById ref_covered;
        for (const auto& [id, v] : reference)
            if (detail::find_verdict(predictions, id) != nullptr) ref_covered.emplace_back(id, v);

        if (ref_negatives > 0) {
            std::size_t agreed = 0;
            for (const auto& [id, v] : reference) {
                if (!v.is_no_error()) continue;
                const Verdict* pred = detail::find_verdict(predictions, id);
                if (pred != nullptr && pred->is_no_error()) ++agreed;
            }
            summary.error_detection_all =
                static_cast<double>(agreed) / static_cast<double>(ref_negatives);
            try {
                summary.error_detection_usable =
                    error_detection_accuracy(ref_covered, predictions);
            } catch (const NoReferenceNegatives&) {
                // all no-error dialogues were unusable for this model
            }
        } else {
            report.warnings.push_back("no reference no-error dialogues; error detection n/a");
        }

        auto concordant = concordant_error_subset(ref_covered, predictions);
        summary.concordant_n = concordant.size();
        if (concordant.empty()) {
            report.warnings.push_back("model " + model +
                                      ": no concordant error dialogues; comparison empty");
        }
        std::array<CriterionPerformance, kCriterionCount> perf{};
        for (std::size_t c = 0; c < kCriterionCount; ++c) {
            std::vector<int> ref_bits, pred_bits;
            for (const auto& id : concordant) {
                ref_bits.push_back(detail::find_verdict(reference, id)->scores()[c]);
                pred_bits.push_back(detail::find_verdict(predictions, id)->scores()[c]);
            }
            if (!ref_bits.empty()) perf[c] = performance(confusion(ref_bits, pred_bits));
        }
        report.comparison[model] = perf;

        std::size_t prompt_tokens = 0, completion_tokens = 0;
        bool approximate = false;
        for (const auto& r : results) {
            prompt_tokens += r.prompt_tokens;
            completion_tokens += r.completion_tokens;
            if (r.tokens_approximate && !std::holds_alternative<TransportFailure>(r.outcome))
                approximate = true;
        }
        RatePlan plan;
        auto it = in.rate_plans.find(model);
        if (it != in.rate_plans.end()) {
            plan = it->second;
        } else {
            plan.model_id = model;
            report.warnings.push_back("no rate plan for model " + model +
                                      "; cost reported as zero");
        }
        summary.cost = cost_estimate(prompt_tokens, completion_tokens, plan, approximate);
        report.models.push_back(std::move(summary));
    }
    return report;
}

// Output files: <run-id>.report.md, .agreement.csv, .comparison.csv,
// .summary.txt plus the machine-readable .report.json.
inline void write_report_files(const EvaluationReport& report,
                               const std::filesystem::path& output_dir,
                               const std::string& run_id) {
    std::filesystem::create_directories(output_dir);
    std::string md = "# Evaluation Report\n\n## Agreement Among Human Graders\n\n" +
                     render_agreement_markdown(report);
    std::string comparison = render_comparison_markdown(report);
    if (!comparison.empty()) md += "\n## Model Performance Comparison\n\n" + comparison;
    md += "\n## Run Summary\n\n```\n" + render_run_summary(report) + "```\n";
    write_atomic(output_dir / (run_id + ".report.md"), md);
    write_atomic(output_dir / (run_id + ".agreement.csv"), render_agreement_csv(report));
    write_atomic(output_dir / (run_id + ".comparison.csv"), render_comparison_csv(report));
    write_atomic(output_dir / (run_id + ".summary.txt"), render_run_summary(report));
    write_atomic(output_dir / (run_id + ".report.json"), report_to_json(report).dump(2) + "\n");
}

} // namespace tutor_eval
