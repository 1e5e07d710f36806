#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tutor_eval/errors.hpp"
#include "tutor_eval/judge.hpp"
#include "tutor_eval/rubric.hpp"

namespace tutor_eval {

namespace detail {

inline void check_pair(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw LengthMismatch("label vectors differ in length: " + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()));
    if (a.empty()) throw EmptyVectors("label vectors are empty");
}

} // namespace detail

inline double percent_agreement(const std::vector<int>& a, const std::vector<int>& b) {
    detail::check_pair(a, b);
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == b[i]) ++same;
    return static_cast<double>(same) / static_cast<double>(a.size());
}

// Chance-corrected agreement over binary labels. When expected agreement
// is 1 (both raters constant and equal marginals), returns 1.0 on perfect
// agreement and 0.0 otherwise.
inline double cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    detail::check_pair(a, b);
    double n = static_cast<double>(a.size());
    double po = percent_agreement(a, b);
    double a_pos = 0, b_pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        a_pos += a[i] != 0 ? 1 : 0;
        b_pos += b[i] != 0 ? 1 : 0;
    }
    double pa1 = a_pos / n, pb1 = b_pos / n;
    double pe = pa1 * pb1 + (1.0 - pa1) * (1.0 - pb1);
    if (pe >= 1.0) return po >= 1.0 ? 1.0 : 0.0;
    return (po - pe) / (1.0 - pe);
}

inline std::string kappa_band(double kappa) {
    if (kappa < -1.0 || kappa > 1.0)
        throw OutOfRange("kappa out of [-1, 1]: " + std::to_string(kappa));
    if (kappa < 0.0) return "poor";
    if (kappa <= 0.20) return "slight";
    if (kappa <= 0.40) return "fair";
    if (kappa <= 0.60) return "moderate";
    if (kappa <= 0.80) return "substantial";
    if (kappa < 1.00) return "almost perfect";
    return "perfect";
}

struct AgreementReport {
    double percent = 0.0;
    double kappa = 0.0;
    std::string band;
    std::size_t n = 0;
};

inline AgreementReport agreement_report(const std::vector<int>& a, const std::vector<int>& b) {
    AgreementReport r;
    r.percent = percent_agreement(a, b);
    r.kappa = cohen_kappa(a, b);
    r.band = kappa_band(r.kappa);
    r.n = a.size();
    return r;
}

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline ConfusionCounts confusion(const std::vector<int>& reference,
                                 const std::vector<int>& predicted) {
    detail::check_pair(reference, predicted);
    ConfusionCounts c;
    for (std::size_t i = 0; i < reference.size(); ++i) {
        bool ref = reference[i] != 0;
        bool pred = predicted[i] != 0;
        if (ref && pred)
            ++c.tp;
        else if (!ref && pred)
            ++c.fp;
        else if (ref && !pred)
            ++c.fn;
        else
            ++c.tn;
    }
    return c;
}

enum class DegenerateFlag { NoPositivePredictions, NoPositiveReferences };

struct CriterionPerformance {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::set<DegenerateFlag> degenerate_flags;
};

inline double f1_score(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

// Zero denominators yield 0.0 with an explicit flag instead of an error,
// so corpus sweeps never abort.
inline CriterionPerformance performance(const ConfusionCounts& c) {
    CriterionPerformance p;
    if (c.tp + c.fp == 0)
        p.degenerate_flags.insert(DegenerateFlag::NoPositivePredictions);
    else
        p.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (c.tp + c.fn == 0)
        p.degenerate_flags.insert(DegenerateFlag::NoPositiveReferences);
    else
        p.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    p.f1 = f1_score(p.precision, p.recall);
    return p;
}

using VerdictById = std::vector<std::pair<std::string, Verdict>>;

namespace detail {

inline const Verdict& prediction_for(const VerdictById& predicted, const std::string& id) {
    for (const auto& [pid, v] : predicted)
        if (pid == id) return v;
    throw MissingPrediction("no prediction for dialogue " + id);
}

} // namespace detail

// Fraction of reference-NoError dialogues the model also marks NoError.
inline double error_detection_accuracy(const VerdictById& reference,
                                       const VerdictById& predicted) {
    std::size_t negatives = 0, agreed = 0;
    for (const auto& [id, ref] : reference) {
        if (!ref.is_no_error()) continue;
        ++negatives;
        if (detail::prediction_for(predicted, id).is_no_error()) ++agreed;
    }
    if (negatives == 0)
        throw NoReferenceNegatives("no reference no-error dialogues to evaluate");
    return static_cast<double>(agreed) / static_cast<double>(negatives);
}

// Dialogues where both human and model say an error occurred; per-criterion
// performance is computed only there.
inline std::vector<std::string> concordant_error_subset(const VerdictById& reference,
                                                        const VerdictById& predicted) {
    std::vector<std::string> ids;
    for (const auto& [id, ref] : reference) {
        if (!ref.is_scored()) continue;
        if (detail::prediction_for(predicted, id).is_scored()) ids.push_back(id);
    }
    return ids;
}

struct UsableCounts {
    std::size_t usable = 0;
    std::size_t parse_failures = 0;
    std::size_t transport_failures = 0;
};

inline UsableCounts usable_count(const std::vector<JudgeResult>& results) {
    UsableCounts c;
    for (const auto& r : results) {
        if (std::holds_alternative<Verdict>(r.outcome))
            ++c.usable;
        else if (std::holds_alternative<ParseFailure>(r.outcome))
            ++c.parse_failures;
        else
            ++c.transport_failures;
    }
    return c;
}

struct RatePlan {
    std::string model_id;
    double input_usd_per_1k_tokens = 0.0;
    double output_usd_per_1k_tokens = 0.0;
};

struct CostEstimate {
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    double usd = 0.0;
    bool approximate = false;
};

inline CostEstimate cost_estimate(std::size_t prompt_tokens, std::size_t completion_tokens,
                                  const RatePlan& plan, bool approximate) {
    if (plan.input_usd_per_1k_tokens < 0 || plan.output_usd_per_1k_tokens < 0)
        throw InvalidParameter("rate plan rates must be non-negative");
    CostEstimate e;
    e.prompt_tokens = prompt_tokens;
    e.completion_tokens = completion_tokens;
    e.usd = static_cast<double>(prompt_tokens) / 1000.0 * plan.input_usd_per_1k_tokens +
            static_cast<double>(completion_tokens) / 1000.0 * plan.output_usd_per_1k_tokens;
    e.approximate = approximate;
    return e;
}

} // namespace tutor_eval
