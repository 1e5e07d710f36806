#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "tutor_eval/annotation.hpp"
#include "tutor_eval/corpus.hpp"
#include "tutor_eval/errors.hpp"
#include "tutor_eval/rubric.hpp"
#include "tutor_eval/text.hpp"

namespace tutor_eval {

// Interactive labeling loop. Asks the no-error question first, then the
// five criteria in C1..C5 order. Appends a CSV row after every completed
// dialogue so an interrupted session loses nothing.
// Returns the number of dialogues annotated in this session.
inline std::size_t annotate_session(std::istream& in, std::ostream& out,
                                    const std::vector<Dialogue>& dialogues,
                                    const std::string& grader_id,
                                    const std::filesystem::path& csv_path) {
    std::set<std::string> already;
    if (std::filesystem::exists(csv_path)) {
        auto existing = import_annotations(csv_path);
        for (const auto& a : existing.entries())
            if (a.grader_id == grader_id) already.insert(a.dialogue_id);
    } else {
        std::ofstream header(csv_path);
        if (!header) throw IoFailure("cannot create " + csv_path.string());
        header << kAnnotationCsvHeader << '\n';
    }

    auto ask = [&](const std::string& question,
                   const std::set<std::string>& accepted) -> std::string {
        while (true) {
            out << question << " " << std::flush;
            std::string answer;
            if (!std::getline(in, answer)) return "quit";
            answer = detail::lowercase(detail::trim(answer));
            if (accepted.count(answer)) return answer;
            out << "please answer one of:";
            for (const auto& t : accepted) out << " " << t;
            out << "\n";
        }
    };

    std::size_t annotated = 0;
    for (const auto& d : dialogues) {
        if (already.count(d.id())) continue;
        out << "\n=== dialogue " << d.id() << " ===\n" << d.labeled_transcript() << "\n\n";

        auto answer = ask("Did the student make a math error? [y/n/skip/quit]",
                          {"y", "n", "skip", "quit"});
        if (answer == "quit") break;
        if (answer == "skip") continue;

        Annotation a;
        a.dialogue_id = d.id();
        a.grader_id = grader_id;
        if (answer == "n") {
            a.verdict = Verdict::no_error();
        } else {
            CriterionScores scores;
            bool quit = false;
            for (std::size_t c = 0; c < kCriterionCount && !quit; ++c) {
                auto v = ask(criteria()[c].code + " (" + criteria()[c].name + ") met? [0/1/quit]",
                             {"0", "1", "quit"});
                if (v == "quit") {
                    quit = true;
                    break;
                }
                scores[c] = v == "1" ? 1 : 0;
            }
            if (quit) break;
            a.verdict = Verdict::scored(scores);
            out << "total " << total_score(scores) << "/5\n";
        }

        std::ofstream csv(csv_path, std::ios::app);
        if (!csv) throw IoFailure("cannot append to " + csv_path.string());
        csv << annotation_csv_row(a) << '\n';
        ++annotated;
    }
    out << "\nannotated " << annotated << " dialogue(s) this session\n";
    return annotated;
}

} // namespace tutor_eval
