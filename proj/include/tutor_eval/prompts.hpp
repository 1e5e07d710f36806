#pragma once

#include <string>

#include "tutor_eval/corpus.hpp"
#include "tutor_eval/errors.hpp"

namespace tutor_eval {

inline constexpr const char* kTranscriptStartDelim = "Transcript Start ---";
inline constexpr const char* kTranscriptEndDelim = "--- Transcript End.";

namespace detail {

inline const std::string& assessment_preamble() {
    static const std::string text =
        "Please score the following tutor-student transcript for five criteria that represent "
        "how effective the tutor is in reacting to a middle school student who has made an error "
        "in a virtual tutoring session. If the student does not make an error, immediately score "
        "the transcript with a -1 and ignore the rest of the prompt. The following are criteria "
        "for assessing the tutor:\n"
        "C1) Process or effort-focused- meaning the tutor praises the student for effort, and "
        "not necessarily getting the answer correct. An example of effort-focused praise would "
        "be a tutor saying to a student, \"I love how you worked hard on that problem,\" "
        "\"Really insightful attempt on that step,\" or \"Good work on that step\";\n"
        "C2) Motivating- such as encouraging the student by prompting the student to identify "
        "their own mistake. An example of motivating the student would be saying, \"You're "
        "doing very well,\" \"Keep working hard as you are doing already,\" or \"You got "
        "this!\";\n"
        "C3) Indirect attention to the actual error- by using leading questions. An example of "
        "being indirect to the actual error would be saying, \"You have the right idea\", "
        "\"Take a closer look\" or \"Explain to me what you did here\";\n"
        "C4) Immediate, focused on the current scenario- An example of being immediate would be "
        "referring to particular steps of the current problem such as saying \"Look back at "
        "step 3 of the problem\" or \"Analyze what you did when subtracting the fractions in "
        "step 5\";\n"
        "C5) Sincere, truthful, and mathematically accurate- An example of being sincere would "
        "be saying, \"Great effort so far\" only after a student has put forth effort. Being "
        "mathematically accurate means the tutor instructs using the correct mathematical "
        "principles, for example, saying that, \"Area equals length times width\" or \"To add "
        "fractions of different denominators, we need a common denominator.\"\n"
        "Score each transcript on each of the 5 criteria independently, providing a score of 0, "
        "if the individual criterion is not met, and 1, otherwise. Please provide a separate "
        "score of 0 or 1 for each of the five criteria: C1) process or effort-focused; C2) "
        "motivating; C3) indirect attention to the actual error; C4) immediate; C5) sincere. If "
        "the student does not make a mistake or error in the transcript, please immediately "
        "return -1 for all criteria.\n";
    return text;
}

inline const std::string& assessment_epilogue() {
    static const std::string text =
        "\nGiven the earlier transcript, please return your scores as a JSON file following the "
        "format, {C1: 0/1/-1, C2: 0/1/-1, C3: 0/1/-1, C4: 0/1/-1, C5: 0/1/-1}, e.g., "
        "{C1: 0, C2: 1, C3: 1, C4: 1, C5: 0}. Your JSON: ";
    return text;
}

inline std::string delimited_transcript(const Dialogue& dialogue) {
    if (dialogue.utterances().empty())
        throw EmptyDialogue("dialogue '" + dialogue.id() + "' has no utterances");
    return std::string(kTranscriptStartDelim) + dialogue.labeled_transcript() +
           kTranscriptEndDelim;
}

} // namespace detail

// Full scoring prompt with the transcript substituted between the delimiters.
inline std::string render_assessment_prompt(const Dialogue& dialogue) {
    return detail::assessment_preamble() + detail::delimited_transcript(dialogue) +
           detail::assessment_epilogue();
}

// Generation prompt for synthetic tutoring dialogues.
inline std::string render_synthesis_prompt(int count, int avg_words) {
    if (count < 1 || avg_words < 1)
        throw InvalidParameter("render_synthesis_prompt: count and avg_words must be >= 1");
    return "Provide me with a transcript of a tutoring session between a tutor and a middle "
           "school student. In this transcript, the student makes a math error (a common math "
           "mistake, or forgets to do something). Then, the tutor responds to the student's "
           "error, and they have a conversation. Provide me with " +
           std::to_string(count) +
           " tutor and student transcripts with each one approximately " +
           std::to_string(avg_words) +
           " words on average. The tutors in each of the transcripts should be of varying "
           "experience levels, with performance ranging from poor to very well on how they "
           "react to a student making an error. Label every line with \"Tutor:\" or "
           "\"Student:\" and separate transcripts with a blank line.";
}

// Free-text probe used when the model claims an error the human did not mark.
inline std::string render_probe_prompt(const Dialogue& dialogue) {
    return "Point out the area of text where the student made an error.\n" +
           detail::delimited_transcript(dialogue);
}

} // namespace tutor_eval
