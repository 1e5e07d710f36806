#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tutor_eval/errors.hpp"
#include "tutor_eval/text.hpp"

namespace tutor_eval {

enum class Speaker { Tutor, Student };
enum class Source { RealLife, Synthetic };

inline std::string to_string(Speaker s) {
    return s == Speaker::Tutor ? "Tutor" : "Student";
}

inline std::string to_string(Source s) {
    return s == Source::RealLife ? "real_life" : "synthetic";
}

inline Source source_from_string(std::string_view s) {
    if (s == "real_life") return Source::RealLife;
    if (s == "synthetic") return Source::Synthetic;
    throw MalformedRecord("unknown source tag: " + std::string(s));
}

struct Utterance {
    std::size_t index = 0;
    Speaker speaker = Speaker::Tutor;
    std::string text;
};

// One tutoring dialogue. Immutable after construction via make().
class Dialogue {
public:
    static Dialogue make(std::string id, Source source,
                         std::vector<Utterance> utterances, std::size_t byte_size) {
        if (utterances.empty())
            throw EmptyTranscript("dialogue '" + id + "' has no utterances");
        for (std::size_t i = 0; i < utterances.size(); ++i) {
            utterances[i].index = i;
            utterances[i].text = detail::trim(utterances[i].text);
            if (utterances[i].text.empty())
                throw MalformedRecord("dialogue '" + id + "': empty utterance text at index " +
                                      std::to_string(i));
        }
        std::size_t words = 0;
        for (const auto& u : utterances) words += detail::count_words(u.text);
        Dialogue d;
        d.id_ = std::move(id);
        d.source_ = source;
        d.utterances_ = std::move(utterances);
        d.byte_size_ = byte_size;
        d.word_count_ = words;
        return d;
    }

    const std::string& id() const { return id_; }
    Source source() const { return source_; }
    const std::vector<Utterance>& utterances() const { return utterances_; }
    std::size_t byte_size() const { return byte_size_; }
    std::size_t word_count() const { return word_count_; }

    // Speaker-labeled transcript lines, "Tutor: ..." / "Student: ...".
    std::string labeled_transcript() const {
        std::string out;
        for (const auto& u : utterances_) {
            if (!out.empty()) out += '\n';
            out += to_string(u.speaker) + ": " + u.text;
        }
        return out;
    }

private:
    Dialogue() = default;

    std::string id_;
    Source source_ = Source::RealLife;
    std::vector<Utterance> utterances_;
    std::size_t byte_size_ = 0;
    std::size_t word_count_ = 0;
};

struct CorpusStats {
    std::size_t n_dialogues = 0;
    double mean_words = 0.0;
    double sd_words = 0.0;
    double mean_utterances = 0.0;
    double sd_utterances = 0.0;
};

namespace detail {

// Recognizes an explicit "Tutor:" / "Student:" prefix. A leading
// single-word-colon prefix with any other word is a foreign tag.
enum class TagKind { None, Tutor, Student, Foreign };

inline std::pair<TagKind, std::string> split_speaker_tag(const std::string& line) {
    auto colon = line.find(':');
    if (colon == std::string::npos) return {TagKind::None, line};
    std::string head = trim(line.substr(0, colon));
    if (head.empty() || head.size() > 16) return {TagKind::None, line};
    if (!std::all_of(head.begin(), head.end(),
                     [](unsigned char c) { return std::isalpha(c) != 0; }))
        return {TagKind::None, line};
    std::string lower = lowercase(head);
    std::string rest = trim(line.substr(colon + 1));
    if (lower == "tutor") return {TagKind::Tutor, rest};
    if (lower == "student") return {TagKind::Student, rest};
    return {TagKind::Foreign, head};
}

} // namespace detail

// Diarizes a raw transcript. Tagged lines take precedence; when no line
// carries a tag, speakers alternate starting with the tutor.
inline Dialogue parse_transcript(const std::string& raw, std::string id, Source source) {
    std::vector<std::string> lines;
    {
        std::istringstream in(raw);
        std::string line;
        while (std::getline(in, line)) {
            std::string t = detail::trim(line);
            if (!t.empty()) lines.push_back(std::move(t));
        }
    }
    if (lines.empty())
        throw EmptyTranscript("transcript '" + id + "' contains no non-blank lines");

    bool tagged = false;
    for (const auto& line : lines) {
        auto [kind, _] = detail::split_speaker_tag(line);
        if (kind == detail::TagKind::Tutor || kind == detail::TagKind::Student) {
            tagged = true;
            break;
        }
    }

    std::vector<Utterance> utterances;
    if (tagged) {
        for (const auto& line : lines) {
            auto [kind, text] = detail::split_speaker_tag(line);
            switch (kind) {
            case detail::TagKind::Foreign:
                throw UnresolvableSpeakers("transcript '" + id + "': unknown speaker tag '" +
                                           text + "'");
            case detail::TagKind::Tutor:
            case detail::TagKind::Student: {
                Speaker sp = kind == detail::TagKind::Tutor ? Speaker::Tutor : Speaker::Student;
                if (!utterances.empty() && utterances.back().speaker == sp)
                    utterances.back().text += " " + text;
                else
                    utterances.push_back({utterances.size(), sp, text});
                break;
            }
            case detail::TagKind::None:
                // continuation of the previous utterance
                if (utterances.empty())
                    throw UnresolvableSpeakers("transcript '" + id +
                                               "': leading untagged line in tagged transcript");
                utterances.back().text += " " + line;
                break;
            }
        }
    } else {
        // strict alternation, tutor first
        for (std::size_t i = 0; i < lines.size(); ++i) {
            Speaker sp = i % 2 == 0 ? Speaker::Tutor : Speaker::Student;
            utterances.push_back({i, sp, lines[i]});
        }
    }

    return Dialogue::make(std::move(id), source, std::move(utterances), raw.size());
}

constexpr std::size_t kDefaultMinBytes = 2048;
constexpr std::size_t kDefaultMaxBytes = 8192;

inline std::vector<Dialogue> filter_by_size(const std::vector<Dialogue>& dialogues,
                                            std::size_t min_bytes = kDefaultMinBytes,
                                            std::size_t max_bytes = kDefaultMaxBytes) {
    if (min_bytes > max_bytes)
        throw InvalidParameter("filter_by_size: min_bytes > max_bytes");
    std::vector<Dialogue> kept;
    for (const auto& d : dialogues)
        if (d.byte_size() >= min_bytes && d.byte_size() <= max_bytes) kept.push_back(d);
    return kept;
}

inline CorpusStats corpus_stats(const std::vector<Dialogue>& dialogues) {
    if (dialogues.empty()) throw EmptyCorpus("corpus_stats: empty corpus");
    auto mean_sd = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        if (xs.size() == 1) return std::pair{mean, 0.0};
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        return std::pair{mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
    };
    std::vector<double> words, utts;
    for (const auto& d : dialogues) {
        words.push_back(static_cast<double>(d.word_count()));
        utts.push_back(static_cast<double>(d.utterances().size()));
    }
    CorpusStats s;
    s.n_dialogues = dialogues.size();
    std::tie(s.mean_words, s.sd_words) = mean_sd(words);
    std::tie(s.mean_utterances, s.sd_utterances) = mean_sd(utts);
    return s;
}

inline nlohmann::json dialogue_to_json(const Dialogue& d) {
    nlohmann::json utts = nlohmann::json::array();
    for (const auto& u : d.utterances())
        utts.push_back({{"speaker", to_string(u.speaker)}, {"text", u.text}});
    return {{"id", d.id()},
            {"source", to_string(d.source())},
            {"utterances", std::move(utts)},
            {"byte_size", d.byte_size()}};
}

inline Dialogue dialogue_from_json(const nlohmann::json& j) {
    if (!j.contains("id") || !j.contains("source") || !j.contains("utterances") ||
        !j.contains("byte_size"))
        throw MalformedRecord("dialogue record missing a required field");
    std::vector<Utterance> utts;
    for (const auto& u : j.at("utterances")) {
        if (!u.contains("speaker") || !u.contains("text"))
            throw MalformedRecord("utterance record missing speaker or text");
        std::string sp = u.at("speaker").get<std::string>();
        std::string lower = detail::lowercase(sp);
        Speaker speaker;
        if (lower == "tutor")
            speaker = Speaker::Tutor;
        else if (lower == "student")
            speaker = Speaker::Student;
        else
            throw MalformedRecord("unknown speaker: " + sp);
        utts.push_back({utts.size(), speaker, u.at("text").get<std::string>()});
    }
    return Dialogue::make(j.at("id").get<std::string>(),
                          source_from_string(j.at("source").get<std::string>()),
                          std::move(utts), j.at("byte_size").get<std::size_t>());
}

// Corpus files are UTF-8 JSON lines, one dialogue per line.
inline void save_corpus(const std::vector<Dialogue>& dialogues,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure("cannot open for writing: " + path.string());
    for (const auto& d : dialogues) out << dialogue_to_json(d).dump() << '\n';
    if (!out) throw IoFailure("write failed: " + path.string());
}

inline std::vector<Dialogue> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open for reading: " + path.string());
    std::vector<Dialogue> dialogues;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw MalformedRecord("corpus line " + std::to_string(lineno) + ": invalid JSON");
        try {
            dialogues.push_back(dialogue_from_json(j));
        } catch (const MalformedRecord& e) {
            throw MalformedRecord("corpus line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return dialogues;
}

} // namespace tutor_eval
