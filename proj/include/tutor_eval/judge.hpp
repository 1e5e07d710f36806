#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "tutor_eval/backend.hpp"
#include "tutor_eval/corpus.hpp"
#include "tutor_eval/errors.hpp"
#include "tutor_eval/prompts.hpp"
#include "tutor_eval/rubric.hpp"

namespace tutor_eval {

struct ParseFailure {
    std::string reason;  // error code from the score parser
    friend bool operator==(const ParseFailure&, const ParseFailure&) = default;
};

struct TransportFailure {
    std::string reason;
    friend bool operator==(const TransportFailure&, const TransportFailure&) = default;
};

struct JudgeResult {
    std::string dialogue_id;
    std::string model_id;
    std::variant<Verdict, ParseFailure, TransportFailure> outcome;
    std::string raw_response;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool tokens_approximate = false;
    std::size_t latency_ms = 0;

    bool has_verdict() const { return std::holds_alternative<Verdict>(outcome); }
    const Verdict& verdict() const { return std::get<Verdict>(outcome); }
};

// One dialogue, one request. Parse failures keep the raw text.
inline JudgeResult judge_dialogue(ChatBackend& backend, const Dialogue& dialogue) {
    JudgeResult result;
    result.dialogue_id = dialogue.id();
    result.model_id = backend.model_id();
    std::string prompt = render_assessment_prompt(dialogue);
    auto started = std::chrono::steady_clock::now();
    ChatResponse response;
    try {
        response = backend.complete(prompt);
    } catch (const Error& e) {
        result.outcome = TransportFailure{std::string(e.code()) + ": " + e.what()};
        return result;
    }
    if (!backend.deterministic()) {
        auto elapsed = std::chrono::steady_clock::now() - started;
        result.latency_ms = static_cast<std::size_t>(
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());
    }
    result.raw_response = response.text;
    result.prompt_tokens = response.prompt_tokens;
    result.completion_tokens = response.completion_tokens;
    result.tokens_approximate = !response.usage_reported;
    try {
        result.outcome = parse_model_scores(response.text);
    } catch (const Error& e) {
        result.outcome = ParseFailure{e.code()};
    }
    return result;
}

// Bounded-concurrency fan-out over a corpus. Output order always matches
// input order; every dialogue yields exactly one result.
inline std::vector<JudgeResult> judge_corpus(ChatBackend& backend,
                                             const std::vector<Dialogue>& dialogues,
                                             int parallelism = 1) {
    if (dialogues.empty()) throw EmptyCorpus("judge_corpus: no dialogues");
    if (parallelism < 1) throw InvalidParameter("judge_corpus: parallelism must be >= 1");

    std::vector<JudgeResult> results(dialogues.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= dialogues.size()) break;
            results[i] = judge_dialogue(backend, dialogues[i]);
        }
    };
    int threads = std::min<int>(parallelism, static_cast<int>(dialogues.size()));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return results;
}

// Free-text probe; the response is returned verbatim.
inline std::string probe_error_location(ChatBackend& backend, const Dialogue& dialogue) {
    return backend.complete(render_probe_prompt(dialogue)).text;
}

// ---------------------------------------------------------------------------
// Deterministic lexicon-rule baseline, usable offline and in tests.

struct Lexicons {
    std::vector<std::string> student_error;     // student admits or shows an error
    std::vector<std::string> correction_cue;    // tutor reacts to the error
    std::vector<std::string> effort_praise;     // C1
    std::vector<std::string> motivation;        // C2
    std::vector<std::string> leading_question;  // C3
    std::vector<std::string> false_statements;  // C5

    static Lexicons builtin();
    static Lexicons load(const std::filesystem::path& dir);
};

namespace detail {

inline bool matches_any(const std::string& text, const std::vector<std::string>& phrases) {
    std::string lower = lowercase(text);
    for (const auto& p : phrases)
        if (!p.empty() && lower.find(lowercase(p)) != std::string::npos) return true;
    return false;
}

inline std::vector<std::string> load_phrase_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoFailure("cannot open lexicon file: " + path.string());
    std::vector<std::string> phrases;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (!t.empty() && t[0] != '#') phrases.push_back(std::move(t));
    }
    return phrases;
}

inline bool references_step_or_number(const std::string& text) {
    std::string lower = lowercase(text);
    if (lower.find("step") != std::string::npos) return true;
    return std::any_of(text.begin(), text.end(),
                       [](unsigned char c) { return std::isdigit(c) != 0; });
}

} // namespace detail

inline Lexicons Lexicons::builtin() {
    Lexicons lx;
    lx.student_error = {"my mistake", "i see my mistake", "i forgot", "oops",
                        "i got it wrong", "i was wrong", "i messed up"};
    lx.correction_cue = {"what should",   "take a closer look", "look back",
                         "not quite",     "but remember",       "but what",
                         "go through this", "try again",        "think about what"};
    lx.effort_praise = {"worked hard", "attempt", "effort"};
    lx.motivation = {"you got this", "keep", "you're doing", "you are doing"};
    lx.leading_question = {"what should", "take a closer look", "explain to me",
                           "how did you", "can you"};
    lx.false_statements = {"divided by zero is equal to 1", "anything divided by zero",
                           "to add fractions you add the denominators"};
    return lx;
}

inline Lexicons Lexicons::load(const std::filesystem::path& dir) {
    Lexicons lx;
    lx.student_error = detail::load_phrase_file(dir / "student_error.txt");
    lx.correction_cue = detail::load_phrase_file(dir / "correction_cue.txt");
    lx.effort_praise = detail::load_phrase_file(dir / "effort_praise.txt");
    lx.motivation = detail::load_phrase_file(dir / "motivation.txt");
    lx.leading_question = detail::load_phrase_file(dir / "leading_question.txt");
    lx.false_statements = detail::load_phrase_file(dir / "false_statements.txt");
    return lx;
}

// Rule-based verdict. No error unless a student utterance shows an error
// and the tutor reacts to it. C3 only inspects tutor turns before the
// student first self-identifies the error.
inline JudgeResult baseline_judge(const Dialogue& dialogue,
                                  const Lexicons& lexicons = Lexicons::builtin()) {
    if (dialogue.utterances().empty())
        throw EmptyDialogue("baseline_judge: dialogue '" + dialogue.id() + "' is empty");

    const auto& utts = dialogue.utterances();

    std::optional<std::size_t> self_identified;
    bool student_error = false;
    bool correction = false;
    for (const auto& u : utts) {
        if (u.speaker == Speaker::Student && detail::matches_any(u.text, lexicons.student_error)) {
            student_error = true;
            if (!self_identified) self_identified = u.index;
        }
        if (u.speaker == Speaker::Tutor && detail::matches_any(u.text, lexicons.correction_cue))
            correction = true;
    }

    JudgeResult result;
    result.dialogue_id = dialogue.id();
    result.model_id = "baseline";
    std::string prompt = render_assessment_prompt(dialogue);
    result.prompt_tokens = approx_tokens(prompt);
    result.tokens_approximate = true;

    if (!student_error || !correction) {
        result.outcome = Verdict::no_error();
        result.raw_response = canonical_verdict(Verdict::no_error());
        result.completion_tokens = approx_tokens(result.raw_response);
        return result;
    }

    std::size_t window_end = self_identified.value_or(utts.size());
    CriterionScores scores{};
    bool c3_blocked = false;
    bool c3_leading = false;
    for (const auto& u : utts) {
        if (u.speaker != Speaker::Tutor) continue;
        if (detail::matches_any(u.text, lexicons.effort_praise)) scores[0] = 1;
        if (detail::matches_any(u.text, lexicons.motivation)) scores[1] = 1;
        if (u.index < window_end) {
            std::string lower = detail::lowercase(u.text);
            if (lower.find("mistake") != std::string::npos ||
                lower.find("error") != std::string::npos)
                c3_blocked = true;
            if (detail::matches_any(u.text, lexicons.leading_question) ||
                (u.text.find('?') != std::string::npos &&
                 detail::references_step_or_number(u.text)))
                c3_leading = true;
        }
        if (detail::references_step_or_number(u.text)) scores[3] = 1;
    }
    scores[2] = (!c3_blocked && c3_leading) ? 1 : 0;
    scores[4] = 1;
    for (const auto& u : utts)
        if (u.speaker == Speaker::Tutor &&
            detail::matches_any(u.text, lexicons.false_statements))
            scores[4] = 0;

    Verdict verdict = Verdict::scored(scores);
    result.outcome = verdict;
    result.raw_response = canonical_verdict(verdict);
    result.completion_tokens = approx_tokens(result.raw_response);
    return result;
}

} // namespace tutor_eval
