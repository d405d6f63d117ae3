#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <string>

namespace subix {

/// An OpenAI-compatible chat-completion endpoint.
struct LlmEndpoint {
    std::string base_url = "http://127.0.0.1:8000";  ///< requests go to <base>/v1/chat/completions
    std::string model = "default";
    std::chrono::milliseconds timeout{60'000};
    std::size_t max_parallel = 4;
    double temperature = 0.0;
    int max_tokens = 2048;
    int max_retries = 3;
    std::chrono::milliseconds backoff{250};  ///< first retry delay, doubled each time

    void validate() const;
};

struct TelemetrySnapshot {
    std::uint64_t requests = 0;
    std::uint64_t retries = 0;
    std::uint64_t failures = 0;
    std::uint64_t parse_failures = 0;
};

/// Counters shared by concurrent requests.
struct LlmTelemetry {
    std::atomic<std::uint64_t> requests{0};
    std::atomic<std::uint64_t> retries{0};
    std::atomic<std::uint64_t> failures{0};
    std::atomic<std::uint64_t> parse_failures{0};

    TelemetrySnapshot snapshot() const {
        return {requests.load(), retries.load(), failures.load(), parse_failures.load()};
    }
};

/// Thread-safe chat client; every call opens its own connection.
class LlmClient {
public:
    explicit LlmClient(LlmEndpoint endpoint);

    /// Sends one system + user exchange and returns choices[0].message.content.
    /// Transport errors and 5xx replies are retried with exponential backoff;
    /// throws TransportError once retries run out and ProtocolError when the
    /// reply is not a chat completion.
    std::string chat(const std::string& system, const std::string& user);

    const LlmEndpoint& endpoint() const { return endpoint_; }
    LlmTelemetry& telemetry() { return telemetry_; }
    const LlmTelemetry& telemetry() const { return telemetry_; }

private:
    LlmEndpoint endpoint_;
    std::string host_;  // scheme://host[:port]
    std::string path_;  // <prefix>/v1/chat/completions
    LlmTelemetry telemetry_;
};

/// Request body for one exchange, with fields in a fixed order.
std::string build_chat_request(const LlmEndpoint& endpoint, const std::string& system,
                               const std::string& user);

/// Extracts choices[0].message.content; throws ProtocolError otherwise.
std::string parse_chat_response(const std::string& body);

}  // namespace subix
