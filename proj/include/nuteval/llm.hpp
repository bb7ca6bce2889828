#pragma once

#include <cstddef>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nuteval::llm {

// Chat-style completion endpoint: one system prompt, one user message.
class LlmClient {
public:
    virtual ~LlmClient() = default;
    // Throws LlmError on transport failure or a missing recorded reply.
    virtual std::string complete(std::string_view system_prompt, std::string_view user_text) = 0;
    virtual std::string model_version() const = 0;
};

// FNV-1a over system_prompt + '\x1f' + user_text, 16 hex digits.
std::string prompt_hash(std::string_view system_prompt, std::string_view user_text);

struct TranscriptRecord {
    std::string prompt_hash;
    std::string system_prompt;
    std::string user_text;
    std::string reply;
};

// JSON Lines, one record per line, in call order.
std::vector<TranscriptRecord> parse_transcript(std::string_view text);
std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path);
void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records);

// Serves replies from a recorded transcript.
//
// Keyed mode looks replies up by prompt hash; repeated identical prompts
// (retries) consume that prompt's records in order. Sequential mode demands
// that calls arrive in exactly the recorded order.
class ReplayLlmClient final : public LlmClient {
public:
    enum class Mode { Keyed, Sequential };

    explicit ReplayLlmClient(std::vector<TranscriptRecord> records, Mode mode = Mode::Keyed,
                             std::string model_version = "replay");

    std::string complete(std::string_view system_prompt, std::string_view user_text) override;
    std::string model_version() const override { return version_; }

    std::size_t remaining() const;

private:
    std::vector<TranscriptRecord> records_;
    Mode mode_;
    std::string version_;
    mutable std::mutex mutex_;
    std::size_t cursor_ = 0;
    std::unordered_map<std::string, std::deque<std::size_t>> by_hash_;
};

// Returns canned replies in order regardless of the prompt. Test double and
// building block for writing transcripts.
class ScriptedLlmClient final : public LlmClient {
public:
    explicit ScriptedLlmClient(std::vector<std::string> replies, std::string model_version = "scripted")
        : replies_(std::move(replies)), version_(std::move(model_version)) {}

    std::string complete(std::string_view system_prompt, std::string_view user_text) override;
    std::string model_version() const override { return version_; }
    std::size_t calls() const;

private:
    std::vector<std::string> replies_;
    std::string version_;
    mutable std::mutex mutex_;
    std::size_t next_ = 0;
};

// Forwards to another client and keeps a transcript of every exchange.
class RecordingLlmClient final : public LlmClient {
public:
    explicit RecordingLlmClient(LlmClient& inner) : inner_(inner) {}

    std::string complete(std::string_view system_prompt, std::string_view user_text) override;
    std::string model_version() const override { return inner_.model_version(); }

    std::vector<TranscriptRecord> records() const;
    void save(const std::filesystem::path& path) const { save_transcript(path, records()); }

private:
    LlmClient& inner_;
    mutable std::mutex mutex_;
    std::vector<TranscriptRecord> records_;
};

struct HttpClientConfig {
    std::string base_url = "https://api.openai.com";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "gpt-4.1-2025-04-14";
    std::string api_key;
    double temperature = 0.0;
    int timeout_seconds = 120;
};

// OpenAI-compatible chat-completions client. Live calls are never made by the
// test suite; pair with RecordingLlmClient to capture a replayable transcript.
class HttpLlmClient final : public LlmClient {
public:
    explicit HttpLlmClient(HttpClientConfig config) : config_(std::move(config)) {}

    std::string complete(std::string_view system_prompt, std::string_view user_text) override;
    std::string model_version() const override { return config_.model; }

private:
    HttpClientConfig config_;
};

}  // namespace nuteval::llm
