#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tutor_eval/errors.hpp"

namespace tutor_eval {

inline constexpr std::size_t kCriterionCount = 5;

struct Criterion {
    std::string code;        // C1..C5
    std::string name;        // process-focused .. accurate
    std::string description;
};

// Fixed C1..C5 ordering.
inline const std::array<Criterion, kCriterionCount>& criteria() {
    static const std::array<Criterion, kCriterionCount> all = {{
        {"C1", "process-focused",
         "Praises the student's effort and genuine attempt rather than correctness."},
        {"C2", "motivating",
         "Avoids negative language and encourages the student to find the mistake on their own."},
        {"C3", "indirect",
         "Calls attention to the error indirectly with leading questions, avoiding words like "
         "\"mistake\" or \"error\"."},
        {"C4", "immediate",
         "Stays relevant to the current problem, referring to specific steps and numbers."},
        {"C5", "accurate",
         "Sincere, truthful praise and mathematically correct guidance."},
    }};
    return all;
}

inline std::vector<std::pair<std::string, std::string>> criterion_labels() {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& c : criteria()) out.emplace_back(c.code, c.name);
    return out;
}

struct CriterionScores {
    std::array<int, kCriterionCount> values{}; // each 0 or 1

    int& operator[](std::size_t i) { return values[i]; }
    int operator[](std::size_t i) const { return values[i]; }

    friend bool operator==(const CriterionScores&, const CriterionScores&) = default;
};

inline int total_score(const CriterionScores& scores) {
    int total = 0;
    for (int v : scores.values) total += v;
    return total;
}

// Either the no-error sentinel or a full five-bit score vector.
class Verdict {
public:
    static Verdict no_error() { return Verdict{}; }
    static Verdict scored(CriterionScores scores) {
        Verdict v;
        for (int x : scores.values)
            if (x != 0 && x != 1)
                throw InvalidValue("criterion score must be 0 or 1, got " + std::to_string(x));
        v.scores_ = scores;
        return v;
    }

    bool is_no_error() const { return !scores_.has_value(); }
    bool is_scored() const { return scores_.has_value(); }
    const CriterionScores& scores() const {
        if (!scores_) throw InvalidValue("no-error verdict carries no scores");
        return *scores_;
    }

    friend bool operator==(const Verdict&, const Verdict&) = default;

private:
    std::optional<CriterionScores> scores_;
};

// Canonical serialized form, "{C1: v, C2: v, C3: v, C4: v, C5: v}".
inline std::string canonical_verdict(const Verdict& v) {
    std::string out = "{";
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
        if (i > 0) out += ", ";
        int value = v.is_no_error() ? -1 : v.scores()[i];
        out += criteria()[i].code + ": " + std::to_string(value);
    }
    out += "}";
    return out;
}

namespace detail {

struct ScoreToken {
    std::string key;
    long value;
};

inline void skip_ws(std::string_view s, std::size_t& i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

inline std::string trim_token(std::string s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    return s.substr(b);
}

inline long parse_score_value(const std::string& key, const std::string& raw) {
    if (raw.empty()) throw InvalidValue("empty value for key '" + key + "'");
    std::size_t pos = 0;
    long value = 0;
    try {
        value = std::stol(raw, &pos);
    } catch (const std::exception&) {
        throw InvalidValue("value '" + raw + "' for key '" + key + "' is not an integer");
    }
    if (pos != raw.size())
        throw InvalidValue("value '" + raw + "' for key '" + key + "' is not an integer");
    return value;
}

// Parses key/value pairs out of one brace-delimited object body.
inline std::vector<ScoreToken> parse_object_body(std::string_view body) {
    std::vector<ScoreToken> out;
    std::size_t i = 0;
    while (true) {
        skip_ws(body, i);
        if (i >= body.size()) break;
        if (body[i] == ',') {
            ++i;
            continue;
        }
        // key, optionally quoted
        std::string key;
        if (body[i] == '"' || body[i] == '\'') {
            char quote = body[i++];
            while (i < body.size() && body[i] != quote) key += body[i++];
            if (i >= body.size()) throw InvalidValue("unterminated quoted key");
            ++i;
        } else {
            while (i < body.size() && (std::isalnum(static_cast<unsigned char>(body[i])) ||
                                       body[i] == '_'))
                key += body[i++];
        }
        if (key.empty()) throw InvalidValue(std::string("unexpected character '") + body[i] +
                                            "' in score object");
        skip_ws(body, i);
        if (i >= body.size() || body[i] != ':')
            throw InvalidValue("expected ':' after key '" + key + "'");
        ++i;
        skip_ws(body, i);
        // value, optionally quoted integer
        std::string raw;
        if (i < body.size() && (body[i] == '"' || body[i] == '\'')) {
            char quote = body[i++];
            while (i < body.size() && body[i] != quote) raw += body[i++];
            if (i >= body.size()) throw InvalidValue("unterminated quoted value");
            ++i;
        } else {
            while (i < body.size() && body[i] != ',' &&
                   !std::isspace(static_cast<unsigned char>(body[i])))
                raw += body[i++];
        }
        raw = trim_token(raw);
        out.push_back({key, parse_score_value(key, raw)});
    }
    return out;
}

} // namespace detail

// Lenient extraction of a score vector from a model's free-text response.
// Takes the first brace-delimited object; accepts quoted/unquoted keys in
// any order, code fences, and surrounding prose.
inline Verdict parse_model_scores(const std::string& raw) {
    auto open = raw.find('{');
    if (open == std::string::npos)
        throw NoObjectFound("no brace-delimited object in response");
    auto close = raw.find('}', open);
    if (close == std::string::npos)
        throw NoObjectFound("unclosed brace-delimited object in response");

    auto tokens = detail::parse_object_body(
        std::string_view(raw).substr(open + 1, close - open - 1));

    std::map<std::string, long> byCode;
    for (const auto& t : tokens) {
        std::string code = t.key;
        for (auto& ch : code) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
        byCode[code] = t.value; // later duplicate wins, first object only
    }

    std::array<long, kCriterionCount> values{};
    for (std::size_t i = 0; i < kCriterionCount; ++i) {
        auto it = byCode.find(criteria()[i].code);
        if (it == byCode.end())
            throw MissingCriterion("response object lacks key " + criteria()[i].code);
        values[i] = it->second;
    }

    std::size_t sentinels = 0;
    for (long v : values) {
        if (v == -1) {
            ++sentinels;
        } else if (v != 0 && v != 1) {
            throw InvalidValue("score value " + std::to_string(v) + " outside {-1, 0, 1}");
        }
    }
    if (sentinels == kCriterionCount) return Verdict::no_error();
    if (sentinels > 0)
        throw InconsistentSentinel("mixed -1 sentinel with 0/1 scores");

    CriterionScores scores;
    for (std::size_t i = 0; i < kCriterionCount; ++i)
        scores[i] = static_cast<int>(values[i]);
    return Verdict::scored(scores);
}

} // namespace tutor_eval
