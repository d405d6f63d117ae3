#include "subix/llm_client.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "subix/error.hpp"

namespace subix {

using nlohmann::json;
using nlohmann::ordered_json;

void LlmEndpoint::validate() const {
    if (timeout.count() <= 0) {
        throw ValidationError("LLM timeout must be > 0");
    }
    if (max_parallel < 1) {
        throw ValidationError("LLM parallelism must be >= 1");
    }
    if (max_retries < 0) {
        throw ValidationError("LLM retry count must be >= 0");
    }
    if (!base_url.starts_with("http://")) {
        throw ValidationError("LLM endpoint must be an http:// URL, got '" + base_url + "'");
    }
}

LlmClient::LlmClient(LlmEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    const auto authority = endpoint_.base_url.find("://") + 3;
    const auto slash = endpoint_.base_url.find('/', authority);
    host_ = endpoint_.base_url.substr(0, slash);
    std::string prefix = slash == std::string::npos ? "" : endpoint_.base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') {
        prefix.pop_back();
    }
    path_ = prefix + "/v1/chat/completions";
}

std::string build_chat_request(const LlmEndpoint& endpoint, const std::string& system,
                               const std::string& user) {
    ordered_json body;
    body["model"] = endpoint.model;
    body["messages"] = ordered_json::array({
        ordered_json{{"role", "system"}, {"content", system}},
        ordered_json{{"role", "user"}, {"content", user}},
    });
    body["temperature"] = endpoint.temperature;
    body["max_tokens"] = endpoint.max_tokens;
    return body.dump();
}

std::string parse_chat_response(const std::string& body) {
    json reply;
    try {
        reply = json::parse(body);
    } catch (const json::parse_error&) {
        throw ProtocolError("endpoint returned a non-JSON body");
    }
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) {
            throw ProtocolError("choices[0].message.content is not a string");
        }
        return content.get<std::string>();
    } catch (const json::exception&) {
        throw ProtocolError("reply lacks choices[0].message.content");
    }
}

std::string LlmClient::chat(const std::string& system, const std::string& user) {
    const std::string body = build_chat_request(endpoint_, system, user);
    const auto seconds = endpoint_.timeout.count() / 1000;
    const auto micros = (endpoint_.timeout.count() % 1000) * 1000;
    std::string last_error;

    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0) {
            telemetry_.retries.fetch_add(1);
            std::this_thread::sleep_for(endpoint_.backoff * (1 << (attempt - 1)));
        }
        telemetry_.requests.fetch_add(1);
        httplib::Client client(host_);
        client.set_connection_timeout(seconds, micros);
        client.set_read_timeout(seconds, micros);
        client.set_write_timeout(seconds, micros);
        auto response = client.Post(path_, body, "application/json");
        if (!response) {
            last_error = httplib::to_string(response.error());
            continue;
        }
        if (response->status >= 500) {
            last_error = "HTTP " + std::to_string(response->status);
            continue;
        }
        if (response->status != 200) {
            telemetry_.failures.fetch_add(1);
            throw ProtocolError("endpoint " + endpoint_.base_url + " rejected the request: HTTP " +
                                std::to_string(response->status));
        }
        try {
            return parse_chat_response(response->body);
        } catch (const ProtocolError& e) {
            telemetry_.failures.fetch_add(1);
            throw ProtocolError("endpoint " + endpoint_.base_url + ": " + e.what());
        }
    }
    telemetry_.failures.fetch_add(1);
    throw TransportError("endpoint " + endpoint_.base_url + " failed after " +
                         std::to_string(endpoint_.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace subix
