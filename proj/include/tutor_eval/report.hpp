#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tutor_eval/corpus.hpp"
#include "tutor_eval/metrics.hpp"
#include "tutor_eval/rubric.hpp"

namespace tutor_eval {

struct AgreementRow {
    std::string label;  // criterion name or "no error"
    AgreementReport stats;
};

struct ModelSummary {
    std::string model_id;
    UsableCounts usable;
    // over all annotated no-error dialogues (failures count as misses) and
    // over usable responses only
    std::optional<double> error_detection_all;
    std::optional<double> error_detection_usable;
    std::size_t concordant_n = 0;
    CostEstimate cost;
};

struct EvaluationReport {
    CorpusStats corpus;
    std::size_t min_bytes = kDefaultMinBytes;
    std::size_t max_bytes = kDefaultMaxBytes;
    double temperature = 0.0;
    std::vector<AgreementRow> agreement_rows;  // C1..C5 order, then no-error
    std::vector<std::string> model_ids;
    std::map<std::string, std::array<CriterionPerformance, kCriterionCount>> comparison;
    std::vector<ModelSummary> models;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

// Display rounding: percentages one decimal, everything else two.
inline std::string fmt_percent(double fraction) { return fixed(fraction * 100.0, 1) + "%"; }
inline std::string fmt2(double value) { return fixed(value, 2); }

} // namespace detail

inline std::string render_agreement_markdown(const EvaluationReport& report) {
    std::string out;
    out += "| Criteria | Agreement Score | Cohen's Kappa | Interpretation |\n";
    out += "|---|---|---|---|\n";
    for (const auto& row : report.agreement_rows) {
        out += "| " + row.label + " | " + detail::fmt_percent(row.stats.percent) + " | " +
               detail::fmt2(row.stats.kappa) + " | " + row.stats.band + " |\n";
    }
    return out;
}

inline std::string render_agreement_csv(const EvaluationReport& report) {
    std::string out = "criteria,agreement_score,cohen_kappa,interpretation,n\n";
    for (const auto& row : report.agreement_rows) {
        out += row.label + "," + detail::fmt_percent(row.stats.percent) + "," +
               detail::fmt2(row.stats.kappa) + "," + row.stats.band + "," +
               std::to_string(row.stats.n) + "\n";
    }
    return out;
}

inline std::string render_comparison_markdown(const EvaluationReport& report) {
    if (report.model_ids.empty()) return "";
    std::string out = "| Criteria |";
    for (const auto& m : report.model_ids)
        out += " " + m + " Precision | " + m + " Recall | " + m + " F1 Score |";
    out += "\n|---|";
    for (std::size_t i = 0; i < report.model_ids.size() * 3; ++i) out += "---|";
    out += "\n";
    for (std::size_t c = 0; c < kCriterionCount; ++c) {
        out += "| " + criteria()[c].name + " |";
        for (const auto& m : report.model_ids) {
            const auto& p = report.comparison.at(m)[c];
            out += " " + detail::fmt2(p.precision) + " | " + detail::fmt2(p.recall) + " | " +
                   detail::fmt2(p.f1) + " |";
        }
        out += "\n";
    }
    return out;
}

inline std::string render_comparison_csv(const EvaluationReport& report) {
    std::string out = "criteria,model,precision,recall,f1\n";
    for (std::size_t c = 0; c < kCriterionCount; ++c)
        for (const auto& m : report.model_ids) {
            const auto& p = report.comparison.at(m)[c];
            out += criteria()[c].name + "," + m + "," + detail::fmt2(p.precision) + "," +
                   detail::fmt2(p.recall) + "," + detail::fmt2(p.f1) + "\n";
        }
    return out;
}

inline std::string render_run_summary(const EvaluationReport& report) {
    std::string out;
    out += std::to_string(report.corpus.n_dialogues) + " dialogues (" +
           std::to_string(report.min_bytes) + "-" + std::to_string(report.max_bytes) +
           " bytes)\n";
    out += "words per dialogue: mean " + detail::fixed(report.corpus.mean_words, 1) + ", sd " +
           detail::fixed(report.corpus.sd_words, 1) + "\n";
    out += "utterances per dialogue: mean " + detail::fixed(report.corpus.mean_utterances, 1) +
           ", sd " + detail::fixed(report.corpus.sd_utterances, 1) + "\n";
    out += "temperature: " + detail::fixed(report.temperature, 1) + "\n";
    for (const auto& m : report.models) {
        out += "model " + m.model_id + ": usable " + std::to_string(m.usable.usable) +
               ", parse failures " + std::to_string(m.usable.parse_failures) +
               ", transport failures " + std::to_string(m.usable.transport_failures) + "\n";
        out += "  error detection (all annotated): " +
               (m.error_detection_all ? detail::fmt_percent(*m.error_detection_all)
                                      : std::string("n/a")) +
               "\n";
        out += "  error detection (usable only): " +
               (m.error_detection_usable ? detail::fmt_percent(*m.error_detection_usable)
                                         : std::string("n/a")) +
               "\n";
        out += "  concordant error dialogues: " + std::to_string(m.concordant_n) + "\n";
        out += "  total cost: $" + detail::fixed(m.cost.usd, 4) +
               (m.cost.approximate ? " (approximate)" : "") + "\n";
    }
    if (!report.warnings.empty()) {
        out += "warnings:\n";
        for (const auto& w : report.warnings) out += "  - " + w + "\n";
    }
    return out;
}

// Full-precision machine form; the renderers above apply display rounding.
inline nlohmann::json report_to_json(const EvaluationReport& r) {
    nlohmann::json j;
    j["corpus"] = {{"n_dialogues", r.corpus.n_dialogues},
                   {"mean_words", r.corpus.mean_words},
                   {"sd_words", r.corpus.sd_words},
                   {"mean_utterances", r.corpus.mean_utterances},
                   {"sd_utterances", r.corpus.sd_utterances}};
    j["min_bytes"] = r.min_bytes;
    j["max_bytes"] = r.max_bytes;
    j["temperature"] = r.temperature;
    j["agreement_rows"] = nlohmann::json::array();
    for (const auto& row : r.agreement_rows)
        j["agreement_rows"].push_back({{"label", row.label},
                                       {"percent", row.stats.percent},
                                       {"kappa", row.stats.kappa},
                                       {"band", row.stats.band},
                                       {"n", row.stats.n}});
    j["model_ids"] = r.model_ids;
    j["comparison"] = nlohmann::json::object();
    for (const auto& [model, perf] : r.comparison) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& p : perf)
            rows.push_back(
                {{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}});
        j["comparison"][model] = std::move(rows);
    }
    j["models"] = nlohmann::json::array();
    for (const auto& m : r.models) {
        nlohmann::json mj = {{"model_id", m.model_id},
                             {"usable", m.usable.usable},
                             {"parse_failures", m.usable.parse_failures},
                             {"transport_failures", m.usable.transport_failures},
                             {"concordant_n", m.concordant_n},
                             {"cost_usd", m.cost.usd},
                             {"prompt_tokens", m.cost.prompt_tokens},
                             {"completion_tokens", m.cost.completion_tokens},
                             {"cost_approximate", m.cost.approximate}};
        if (m.error_detection_all) mj["error_detection_all"] = *m.error_detection_all;
        if (m.error_detection_usable) mj["error_detection_usable"] = *m.error_detection_usable;
        j["models"].push_back(std::move(mj));
    }
    j["warnings"] = r.warnings;
    return j;
}

inline EvaluationReport report_from_json(const nlohmann::json& j) {
    EvaluationReport r;
    const auto& c = j.at("corpus");
    r.corpus.n_dialogues = c.at("n_dialogues").get<std::size_t>();
    r.corpus.mean_words = c.at("mean_words").get<double>();
    r.corpus.sd_words = c.at("sd_words").get<double>();
    r.corpus.mean_utterances = c.at("mean_utterances").get<double>();
    r.corpus.sd_utterances = c.at("sd_utterances").get<double>();
    r.min_bytes = j.at("min_bytes").get<std::size_t>();
    r.max_bytes = j.at("max_bytes").get<std::size_t>();
    r.temperature = j.at("temperature").get<double>();
    for (const auto& row : j.at("agreement_rows")) {
        AgreementRow ar;
        ar.label = row.at("label").get<std::string>();
        ar.stats.percent = row.at("percent").get<double>();
        ar.stats.kappa = row.at("kappa").get<double>();
        ar.stats.band = row.at("band").get<std::string>();
        ar.stats.n = row.at("n").get<std::size_t>();
        r.agreement_rows.push_back(std::move(ar));
    }
    r.model_ids = j.at("model_ids").get<std::vector<std::string>>();
    for (const auto& [model, rows] : j.at("comparison").items()) {
        std::array<CriterionPerformance, kCriterionCount> perf;
        for (std::size_t i = 0; i < kCriterionCount && i < rows.size(); ++i) {
            perf[i].precision = rows[i].at("precision").get<double>();
            perf[i].recall = rows[i].at("recall").get<double>();
            perf[i].f1 = rows[i].at("f1").get<double>();
        }
        r.comparison[model] = perf;
    }
    for (const auto& mj : j.at("models")) {
        ModelSummary m;
        m.model_id = mj.at("model_id").get<std::string>();
        m.usable.usable = mj.at("usable").get<std::size_t>();
        m.usable.parse_failures = mj.at("parse_failures").get<std::size_t>();
        m.usable.transport_failures = mj.at("transport_failures").get<std::size_t>();
        m.concordant_n = mj.at("concordant_n").get<std::size_t>();
        m.cost.usd = mj.at("cost_usd").get<double>();
        m.cost.prompt_tokens = mj.at("prompt_tokens").get<std::size_t>();
        m.cost.completion_tokens = mj.at("completion_tokens").get<std::size_t>();
        m.cost.approximate = mj.at("cost_approximate").get<bool>();
        if (mj.contains("error_detection_all"))
            m.error_detection_all = mj.at("error_detection_all").get<double>();
        if (mj.contains("error_detection_usable"))
            m.error_detection_usable = mj.at("error_detection_usable").get<double>();
        r.models.push_back(std::move(m));
    }
    r.warnings = j.at("warnings").get<std::vector<std::string>>();
    return r;
}

} // namespace tutor_eval
