#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "tutor_eval/errors.hpp"

namespace tutor_eval {

enum class BackendKind { Live, Replay, Baseline };

struct BackendDescriptor {
    BackendKind kind = BackendKind::Replay;
    std::string model_id;
    std::string endpoint;                  // Live only, e.g. https://host/v1/chat/completions
    double temperature = 0.0;
    int max_attempts = 3;
    int retry_initial_delay_ms = 1000;
    int parallelism = 1;
    std::filesystem::path cassette_path;   // Replay only
    std::string api_key_env = "TUTOR_EVAL_API_KEY";
};

struct ChatResponse {
    std::string text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
    bool usage_reported = false;  // false means token counts are approximated
};

// Offline token approximation used by Replay/Baseline backends.
inline std::size_t approx_tokens(const std::string& text) {
    return (text.size() + 3) / 4;
}

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const std::string& prompt) = 0;
    virtual const std::string& model_id() const = 0;
    // Deterministic backends report zero latency so replay runs stay
    // byte-identical.
    virtual bool deterministic() const { return false; }
};

namespace detail {

inline std::string format_temperature(double t) {
    std::ostringstream out;
    out << t;
    return out.str();
}

inline std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

} // namespace detail

// Stable request key: hash of (model_id, temperature, full prompt text).
inline std::string cassette_key(const std::string& model_id, double temperature,
                                const std::string& prompt) {
    std::string material =
        model_id + '\x1f' + detail::format_temperature(temperature) + '\x1f' + prompt;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(material)));
    return buf;
}

struct CassetteEntry {
    std::string key;
    std::string request_summary;
    std::string response_text;
    std::size_t prompt_tokens = 0;
    std::size_t completion_tokens = 0;
};

// Line-delimited JSON cassette of recorded responses.
class Cassette {
public:
    Cassette() = default;

    static Cassette load(const std::filesystem::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoFailure("cannot open cassette: " + path.string());
        Cassette c;
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.contains("key") || !j.contains("response_text"))
                throw MalformedRecord("cassette line " + std::to_string(lineno) +
                                      ": invalid record");
            CassetteEntry e;
            e.key = j.at("key").get<std::string>();
            e.request_summary = j.value("request_summary", std::string{});
            e.response_text = j.at("response_text").get<std::string>();
            e.prompt_tokens = j.value("prompt_tokens", std::size_t{0});
            e.completion_tokens = j.value("completion_tokens", std::size_t{0});
            c.entries_[e.key] = std::move(e);
        }
        return c;
    }

    void insert(CassetteEntry entry) { entries_[entry.key] = std::move(entry); }

    bool contains(const std::string& key) const { return entries_.count(key) > 0; }

    const CassetteEntry& at(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw CassetteMiss("no cassette entry for key " + key);
        return it->second;
    }

    void save(const std::filesystem::path& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoFailure("cannot write cassette: " + path.string());
        for (const auto& [key, e] : entries_) {
            nlohmann::json j = {{"key", e.key},
                                {"request_summary", e.request_summary},
                                {"response_text", e.response_text},
                                {"prompt_tokens", e.prompt_tokens},
                                {"completion_tokens", e.completion_tokens}};
            out << j.dump() << '\n';
        }
    }

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, CassetteEntry> entries_;
};

// Deterministic playback of a recorded cassette. Instrumented with request
// counters so tests can assert the concurrency bound.
class ReplayBackend : public ChatBackend {
public:
    ReplayBackend(BackendDescriptor descriptor, Cassette cassette)
        : descriptor_(std::move(descriptor)), cassette_(std::move(cassette)) {}

    ChatResponse complete(const std::string& prompt) override {
        int active = ++in_flight_;
        update_max(active);
        const auto& entry = lookup(prompt);
        ChatResponse r;
        r.text = entry.response_text;
        r.prompt_tokens =
            entry.prompt_tokens > 0 ? entry.prompt_tokens : approx_tokens(prompt);
        r.completion_tokens = entry.completion_tokens > 0 ? entry.completion_tokens
                                                          : approx_tokens(entry.response_text);
        --in_flight_;
        ++request_count_;
        return r;
    }

    const std::string& model_id() const override { return descriptor_.model_id; }
    bool deterministic() const override { return true; }

    int max_in_flight() const { return max_in_flight_.load(); }
    int request_count() const { return request_count_.load(); }

private:
    const CassetteEntry& lookup(const std::string& prompt) {
        auto key = cassette_key(descriptor_.model_id, descriptor_.temperature, prompt);
        if (!cassette_.contains(key)) {
            --in_flight_;
            throw CassetteMiss("cassette has no entry for model " + descriptor_.model_id +
                               ", key " + key);
        }
        return cassette_.at(key);
    }

    void update_max(int active) {
        int prev = max_in_flight_.load();
        while (active > prev && !max_in_flight_.compare_exchange_weak(prev, active)) {
        }
    }

    BackendDescriptor descriptor_;
    Cassette cassette_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> max_in_flight_{0};
    std::atomic<int> request_count_{0};
};

} // namespace tutor_eval
