#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "tutor_eval/errors.hpp"
#include "tutor_eval/rubric.hpp"
#include "tutor_eval/text.hpp"

namespace tutor_eval {

struct Annotation {
    std::string dialogue_id;
    std::string grader_id;
    Verdict verdict;
    std::string annotated_at;  // optional ISO-8601 timestamp

    friend bool operator==(const Annotation&, const Annotation&) = default;
};

// Labels an agreement computation either with one criterion bit or with
// the no-error flag.
struct NoErrorFlag {};
using AgreementTarget = std::variant<std::size_t, NoErrorFlag>;  // criterion index 0..4

struct PairwiseLabels {
    std::vector<int> labels_a;
    std::vector<int> labels_b;
    std::vector<std::string> dialogue_ids;
};

// Store of per-grader verdicts, one per (dialogue, grader).
class AnnotationSet {
public:
    // Upsert; returns true when an existing entry was replaced.
    bool record(Annotation annotation) {
        auto key = std::pair{annotation.dialogue_id, annotation.grader_id};
        bool replaced = entries_.count(key) > 0;
        entries_[key] = std::move(annotation);
        return replaced;
    }

    std::size_t size() const { return entries_.size(); }

    const std::string& reference_grader() const { return reference_grader_; }
    void set_reference_grader(std::string grader_id) {
        if (!has_grader(grader_id))
            throw UnknownGrader("reference grader '" + grader_id + "' has no annotations");
        reference_grader_ = std::move(grader_id);
    }

    bool has_grader(const std::string& grader_id) const {
        return std::any_of(entries_.begin(), entries_.end(), [&](const auto& kv) {
            return kv.first.second == grader_id;
        });
    }

    std::vector<std::string> graders() const {
        std::set<std::string> ids;
        for (const auto& [key, a] : entries_) ids.insert(key.second);
        return {ids.begin(), ids.end()};
    }

    std::optional<Verdict> verdict_for(const std::string& dialogue_id,
                                       const std::string& grader_id) const {
        auto it = entries_.find({dialogue_id, grader_id});
        if (it == entries_.end()) return std::nullopt;
        return it->second.verdict;
    }

    // Dialogue ids annotated by the given grader, in id order.
    std::vector<std::string> dialogues_for(const std::string& grader_id) const {
        std::vector<std::string> ids;
        for (const auto& [key, a] : entries_)
            if (key.second == grader_id) ids.push_back(key.first);
        return ids;
    }

    // Index-aligned label vectors for two graders over their shared
    // dialogues. Criterion targets additionally require both verdicts to
    // be scored.
    PairwiseLabels pairwise_labels(const std::string& grader_a, const std::string& grader_b,
                                   const AgreementTarget& target) const {
        if (!has_grader(grader_a)) throw UnknownGrader("unknown grader: " + grader_a);
        if (!has_grader(grader_b)) throw UnknownGrader("unknown grader: " + grader_b);

        PairwiseLabels out;
        for (const auto& id : dialogues_for(grader_a)) {
            auto va = verdict_for(id, grader_a);
            auto vb = verdict_for(id, grader_b);
            if (!vb) continue;
            if (std::holds_alternative<NoErrorFlag>(target)) {
                out.labels_a.push_back(va->is_no_error() ? 1 : 0);
                out.labels_b.push_back(vb->is_no_error() ? 1 : 0);
                out.dialogue_ids.push_back(id);
            } else {
                if (!va->is_scored() || !vb->is_scored()) continue;
                std::size_t c = std::get<std::size_t>(target);
                out.labels_a.push_back(va->scores()[c]);
                out.labels_b.push_back(vb->scores()[c]);
                out.dialogue_ids.push_back(id);
            }
        }
        if (out.dialogue_ids.empty())
            throw NoOverlap("graders '" + grader_a + "' and '" + grader_b +
                            "' share no comparable dialogues for this target");
        return out;
    }

    std::vector<Annotation> entries() const {
        std::vector<Annotation> out;
        for (const auto& [key, a] : entries_) out.push_back(a);
        return out;
    }

private:
    std::map<std::pair<std::string, std::string>, Annotation> entries_;
    std::string reference_grader_;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

inline Verdict verdict_from_csv_fields(const std::vector<std::string>& fields,
                                       std::size_t first, std::size_t row) {
    std::array<long, kCriterionCount> values{};
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
        const std::string& raw = fields.at(first + i);
        try {
            values[i] = parse_score_value("c" + std::to_string(i + 1), raw);
        } catch (const InvalidValue&) {
            throw MalformedRow("row " + std::to_string(row) + ": score '" + raw +
                               "' is not an integer");
        }
    }
    std::size_t sentinels = 0;
    for (long v : values) {
        if (v == -1)
            ++sentinels;
        else if (v != 0 && v != 1)
            throw MalformedRow("row " + std::to_string(row) + ": score outside {-1, 0, 1}");
    }
    if (sentinels == kCriterionCount) return Verdict::no_error();
    if (sentinels > 0)
        throw InconsistentSentinel("row " + std::to_string(row) +
                                   ": mixed -1 sentinel with 0/1 scores");
    CriterionScores scores;
    for (std::size_t i = 0; i < kCriterionCount; ++i) scores[i] = static_cast<int>(values[i]);
    return Verdict::scored(scores);
}

} // namespace detail

inline constexpr const char* kAnnotationCsvHeader =
    "dialogue_id,grader_id,c1,c2,c3,c4,c5,annotated_at";

inline std::string annotation_csv_row(const Annotation& a) {
    std::string row = a.dialogue_id + "," + a.grader_id;
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
        int v = a.verdict.is_no_error() ? -1 : a.verdict.scores()[i];
        row += "," + std::to_string(v);
    }
    row += "," + a.annotated_at;
    return row;
}

// CSV: dialogue_id,grader_id,c1..c5[,annotated_at]; no-error rows carry
// the all minus-one sentinel.
inline AnnotationSet import_annotations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open annotations: " + path.string());
    AnnotationSet set;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (row == 1 && t.rfind("dialogue_id", 0) == 0) continue;  // header
        auto fields = detail::split_csv_line(t);
        if (fields.size() < 2 + kCriterionCount)
            throw MalformedRow("row " + std::to_string(row) + ": expected at least " +
                               std::to_string(2 + kCriterionCount) + " fields");
        Annotation a;
        a.dialogue_id = fields[0];
        a.grader_id = fields[1];
        a.verdict = detail::verdict_from_csv_fields(fields, 2, row);
        if (fields.size() > 2 + kCriterionCount) a.annotated_at = fields[2 + kCriterionCount];
        if (a.dialogue_id.empty() || a.grader_id.empty())
            throw MalformedRow("row " + std::to_string(row) + ": empty dialogue or grader id");
        set.record(std::move(a));
    }
    return set;
}

inline void export_annotations(const AnnotationSet& set, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot write annotations: " + path.string());
    out << kAnnotationCsvHeader << '\n';
    for (const auto& a : set.entries()) out << annotation_csv_row(a) << '\n';
}

} // namespace tutor_eval
