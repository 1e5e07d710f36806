#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tutor_eval/corpus.hpp"

#ifndef TUTOR_EVAL_FIXTURES
#error "TUTOR_EVAL_FIXTURES must be defined by the build"
#endif

namespace test_support {

inline std::filesystem::path fixtures_dir() { return TUTOR_EVAL_FIXTURES; }

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

inline tutor_eval::Dialogue load_reference_dialogue() {
    return tutor_eval::parse_transcript(
        read_file(fixtures_dir() / "transcripts" / "d00.txt"), "d00",
        tutor_eval::Source::Synthetic);
}

} // namespace test_support
