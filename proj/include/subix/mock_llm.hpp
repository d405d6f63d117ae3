#pragma once

#include <chrono>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace subix {

/// Deterministic stand-in for a chat-completion model.
///
/// It recognises the three system prompts: translation maps words through a
/// two-language glossary, synthesis writes a record from the requested
/// keywords, and ranking scores each keyword by how much of it appears in
/// the text. Any other exchange is echoed back (the user message).
class MockResponder {
public:
    MockResponder() = default;

    /// Glossary rows: a word in language `first` and its counterpart in `second`.
    void add_glossary_entry(const std::string& first_language, const std::string& first,
                            const std::string& second_language, const std::string& second);
    /// Loads a TSV with header `<lang_a><TAB><lang_b>`.
    void load_glossary(const std::string& path);

    std::string respond(const std::string& system, const std::string& user) const;

private:
    // target language name -> (source word, folded) -> target word
    std::map<std::string, std::map<std::string, std::string>> glossary_;

    std::string translate(const std::string& user) const;
    std::string synthesize(const std::string& user) const;
    std::string rank(const std::string& user) const;
};

/// In-process HTTP server speaking the chat-completion protocol on 127.0.0.1.
class MockLlmServer {
public:
    explicit MockLlmServer(MockResponder responder = {});
    ~MockLlmServer();
    MockLlmServer(const MockLlmServer&) = delete;
    MockLlmServer& operator=(const MockLlmServer&) = delete;

    /// Binds to `port` (0 = any free port) and serves on a background thread.
    void start(int port = 0);
    void stop();
    int port() const { return port_; }
    std::string base_url() const;

    /// Statuses to answer with before normal replies, e.g. {500, 500}.
    void script_statuses(std::vector<int> statuses);
    /// Completion contents to return (in order) instead of the responder's.
    void script_replies(std::vector<std::string> replies);
    /// Raw HTTP bodies to return (in order) with status 200, bypassing JSON.
    void script_raw_bodies(std::vector<std::string> bodies);
    void set_delay(std::chrono::milliseconds delay);

    std::size_t request_count() const;
    std::vector<std::string> request_bodies() const;

private:
    struct State;
    std::unique_ptr<State> state_;
    std::thread thread_;
    int port_ = 0;
};

}  // namespace subix
