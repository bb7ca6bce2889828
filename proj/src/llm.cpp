#include "nuteval/llm.hpp"

#include <nlohmann/json.hpp>

#include "nuteval/error.hpp"
#include "nuteval/hash.hpp"
#include "nuteval/io.hpp"

namespace nuteval::llm {

using nlohmann::json;

std::string prompt_hash(std::string_view system_prompt, std::string_view user_text) {
    return to_hex(fnv1a64(user_text, fnv1a64("\x1f", fnv1a64(system_prompt))));
}

std::vector<TranscriptRecord> parse_transcript(std::string_view text) {
    std::vector<TranscriptRecord> records;
    io::for_each_line(text, [&](std::size_t line, std::string_view raw) {
        const auto where = "transcript line " + std::to_string(line) + ": ";
        try {
            const auto obj = json::parse(raw);
            TranscriptRecord r;
            r.system_prompt = obj.value("system_prompt", std::string());
            r.user_text = obj.value("user_text", std::string());
            r.reply = obj.at("reply").get<std::string>();
            const bool has_prompt = obj.contains("system_prompt") || obj.contains("user_text");
            const auto computed = prompt_hash(r.system_prompt, r.user_text);
            r.prompt_hash = obj.value("prompt_hash", has_prompt ? computed : std::string());
            if (r.prompt_hash.empty()) throw ValidationError(where + "record needs prompt_hash or the prompt text");
            if (has_prompt && r.prompt_hash != computed) {
                throw ValidationError(where + "prompt_hash does not match system_prompt/user_text");
            }
            records.push_back(std::move(r));
        } catch (const json::exception& e) {
            throw ValidationError(where + e.what());
        }
    });
    return records;
}

std::vector<TranscriptRecord> load_transcript(const std::filesystem::path& path) {
    return parse_transcript(io::read_file(path));
}

void save_transcript(const std::filesystem::path& path, const std::vector<TranscriptRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        json obj;
        obj["prompt_hash"] = r.prompt_hash;
        obj["system_prompt"] = r.system_prompt;
        obj["user_text"] = r.user_text;
        obj["reply"] = r.reply;
        out += obj.dump();
        out += '\n';
    }
    io::write_file(path, out);
}

// ---------------------------------------------------------------------------

ReplayLlmClient::ReplayLlmClient(std::vector<TranscriptRecord> records, Mode mode, std::string model_version)
    : records_(std::move(records)), mode_(mode), version_(std::move(model_version)) {
    for (std::size_t i = 0; i < records_.size(); ++i) by_hash_[records_[i].prompt_hash].push_back(i);
}

std::string ReplayLlmClient::complete(std::string_view system_prompt, std::string_view user_text) {
    const auto hash = prompt_hash(system_prompt, user_text);
    std::lock_guard lock(mutex_);
    if (mode_ == Mode::Sequential) {
        if (cursor_ >= records_.size()) throw LlmError("replay transcript exhausted at prompt " + hash);
        const auto& r = records_[cursor_];
        if (r.prompt_hash != hash) {
            throw LlmError("replay out of order: call " + std::to_string(cursor_ + 1) + " has prompt " + hash +
                           ", transcript expects " + r.prompt_hash);
        }
        ++cursor_;
        return r.reply;
    }
    const auto it = by_hash_.find(hash);
    if (it == by_hash_.end() || it->second.empty()) throw LlmError("no recorded reply for prompt " + hash);
    const auto idx = it->second.front();
    it->second.pop_front();
    ++cursor_;
    return records_[idx].reply;
}

std::size_t ReplayLlmClient::remaining() const {
    std::lock_guard lock(mutex_);
    return records_.size() - cursor_;
}

std::string ScriptedLlmClient::complete(std::string_view, std::string_view) {
    std::lock_guard lock(mutex_);
    if (next_ >= replies_.size()) throw LlmError("scripted client has no reply left");
    return replies_[next_++];
}

std::size_t ScriptedLlmClient::calls() const {
    std::lock_guard lock(mutex_);
    return next_;
}

std::string RecordingLlmClient::complete(std::string_view system_prompt, std::string_view user_text) {
    auto reply = inner_.complete(system_prompt, user_text);
    std::lock_guard lock(mutex_);
    records_.push_back({prompt_hash(system_prompt, user_text), std::string(system_prompt), std::string(user_text), reply});
    return reply;
}

std::vector<TranscriptRecord> RecordingLlmClient::records() const {
    std::lock_guard lock(mutex_);
    return records_;
}

}  // namespace nuteval::llm
