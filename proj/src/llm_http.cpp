#include <nlohmann/json.hpp>

#include "httplib.h"
#include "nuteval/error.hpp"
#include "nuteval/llm.hpp"

namespace nuteval::llm {

std::string HttpLlmClient::complete(std::string_view system_prompt, std::string_view user_text) {
    using nlohmann::json;
    json body;
    body["model"] = config_.model;
    body["temperature"] = config_.temperature;
    body["messages"] = json::array({
        {{"role", "system"}, {"content", std::string(system_prompt)}},
        {{"role", "user"}, {"content", std::string(user_text)}},
    });

    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const auto res = client.Post(config_.path, headers, body.dump(), "application/json");
    if (!res) throw LlmError("HTTP request to " + config_.base_url + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw LlmError("HTTP " + std::to_string(res->status) + " from " + config_.base_url + ": " +
                       res->body.substr(0, 200));
    }
    try {
        const auto reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw LlmError(std::string("unexpected chat-completions response: ") + e.what());
    }
}

}  // namespace nuteval::llm
