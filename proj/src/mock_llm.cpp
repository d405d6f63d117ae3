#include "subix/mock_llm.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cctype>

#include "subix/error.hpp"
#include "subix/fileio.hpp"
#include "subix/prompts.hpp"
#include "subix/text.hpp"
#include "subix/vocabulary.hpp"

namespace subix {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

/// Text between `before` and `after` (or the end when `after` is empty).
std::string between(const std::string& text, std::string_view before, std::string_view after) {
    auto start = text.find(before);
    if (start == std::string::npos) {
        return {};
    }
    start += before.size();
    if (after.empty()) {
        return text.substr(start);
    }
    const auto end = text.find(after, start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (c == ' ' || c == '\n') {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
            words.emplace_back(1, c);
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
    if (needle.empty() || needle.size() > haystack.size()) {
        return false;
    }
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace

void MockResponder::add_glossary_entry(const std::string& first_language, const std::string& first,
                                       const std::string& second_language,
                                       const std::string& second) {
    glossary_[language_name(second_language)][fold_case(first)] = second;
    glossary_[language_name(first_language)][fold_case(second)] = first;
}

void MockResponder::load_glossary(const std::string& path) {
    const auto text = read_file(path);
    std::string first_language;
    std::string second_language;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) {
            if (!line.empty()) {
                throw ValidationError(path + ":" + std::to_string(line_no) + ": expected two columns");
            }
            return;
        }
        const std::string a(line.substr(0, tab));
        const std::string b(line.substr(tab + 1));
        if (line_no == 1) {
            first_language = a;
            second_language = b;
        } else {
            add_glossary_entry(first_language, a, second_language, b);
        }
    });
}

std::string MockResponder::respond(const std::string& system, const std::string& user) const {
    if (system == prompts::kTranslationSystem) {
        return translate(user);
    }
    if (system == prompts::kSynthesisSystem) {
        return synthesize(user);
    }
    if (system == prompts::kRankingSystem) {
        return rank(user);
    }
    return user;
}

std::string MockResponder::translate(const std::string& user) const {
    const std::string language = between(user, "Give this title and description in ", ":\n\n");
    const std::string text = between(user, language + ":\n\n", "");
    auto it = glossary_.find(language);
    std::string out;
    for (auto& word : split_words(text)) {
        if (word == " " || word == "\n" || it == glossary_.end()) {
            out += word;
            continue;
        }
        // keep trailing punctuation out of the lookup
        std::size_t end = word.size();
        while (end > 0 && std::ispunct(static_cast<unsigned char>(word[end - 1]))) {
            --end;
        }
        auto hit = it->second.find(fold_case(word.substr(0, end)));
        if (hit == it->second.end()) {
            out += word;
            continue;
        }
        std::string replacement = hit->second;
        if (!word.empty() && std::isupper(static_cast<unsigned char>(word[0])) &&
            !replacement.empty()) {
            replacement[0] =
                static_cast<char>(std::toupper(static_cast<unsigned char>(replacement[0])));
        }
        out += replacement + word.substr(end);
    }
    // the prompt separates title and description by a blank line; reply with one newline
    const auto blank = out.find("\n\n");
    if (blank != std::string::npos) {
        out.replace(blank, 2, "\n");
    }
    return out;
}

std::string MockResponder::synthesize(const std::string& user) const {
    const std::string keywords =
        between(user, "Create a new title and description that match the following subject keywords: ", "");
    // "...keywords: OLD\n\n<title>\n\n<description>\n\nGenerate a new document..."
    const std::string example = between(user, "\n\n", "\n\nGenerate a new document");
    const std::string title_desc = between(example, "\n\n", "");
    const std::string example_text = between(title_desc, "\n\n", "");
    std::string title;
    std::size_t start = 0;
    while (start <= keywords.size()) {
        auto comma = keywords.find(", ", start);
        if (comma == std::string::npos) {
            comma = keywords.size();
        }
        if (!title.empty()) {
            title += " - ";
        }
        title += keywords.substr(start, comma - start);
        start = comma + 2;
    }
    std::string description = example_text.empty() ? title : example_text;
    description += " " + keywords + ".";
    return title + "\n" + description;
}

std::string MockResponder::rank(const std::string& user) const {
    const std::string text = between(user, "Here is the text:\n", "\n\nAnd here are the keywords:\n");
    const std::string list = between(user, "And here are the keywords:\n", "");
    const auto text_tokens = normalize(text);
    ordered_json scores = ordered_json::object();
    std::size_t start = 0;
    while (start < list.size()) {
        auto newline = list.find('\n', start);
        if (newline == std::string::npos) {
            newline = list.size();
        }
        const std::string keyword = list.substr(start, newline - start);
        start = newline + 1;
        if (keyword.empty()) {
            continue;
        }
        const auto tokens = normalize(keyword);
        int score = 0;
        if (contains_run(text_tokens, tokens)) {
            score = 100;
        } else if (!tokens.empty()) {
            std::size_t present = 0;
            for (const auto& token : tokens) {
                present += std::find(text_tokens.begin(), text_tokens.end(), token) !=
                                   text_tokens.end()
                               ? 1
                               : 0;
            }
            score = static_cast<int>(40 * present / tokens.size());
        }
        scores[keyword] = score;
    }
    return scores.dump();
}

// ---------------------------------------------------------------------------

struct MockLlmServer::State {
    MockResponder responder;
    httplib::Server server;
    mutable std::mutex mutex;
    std::deque<int> statuses;
    std::deque<std::string> replies;
    std::deque<std::string> raw_bodies;
    std::chrono::milliseconds delay{0};
    std::vector<std::string> bodies;
};

MockLlmServer::MockLlmServer(MockResponder responder) : state_(std::make_unique<State>()) {
    state_->responder = std::move(responder);
    State* state = state_.get();
    state_->server.Post("/v1/chat/completions", [state](const httplib::Request& request,
                                                        httplib::Response& response) {
        std::optional<int> status;
        std::optional<std::string> reply;
        std::optional<std::string> raw;
        std::chrono::milliseconds delay{0};
        {
            std::lock_guard lock(state->mutex);
            state->bodies.push_back(request.body);
            delay = state->delay;
            if (!state->statuses.empty()) {
                status = state->statuses.front();
                state->statuses.pop_front();
            } else if (!state->raw_bodies.empty()) {
                raw = state->raw_bodies.front();
                state->raw_bodies.pop_front();
            } else if (!state->replies.empty()) {
                reply = state->replies.front();
                state->replies.pop_front();
            }
        }
        if (delay.count() > 0) {
            std::this_thread::sleep_for(delay);
        }
        if (status && *status != 200) {
            response.status = *status;
            response.set_content("{\"error\":\"scripted failure\"}", "application/json");
            return;
        }
        if (raw) {
            response.set_content(*raw, "text/plain");
            return;
        }
        auto body = json::parse(request.body, nullptr, false);
        if (body.is_discarded() || !body.contains("messages") || !body["messages"].is_array()) {
            response.status = 400;
            response.set_content("{\"error\":\"bad request\"}", "application/json");
            return;
        }
        std::string system;
        std::string user;
        for (const auto& message : body["messages"]) {
            const auto role = message.value("role", "");
            if (role == "system") {
                system = message.value("content", "");
            } else if (role == "user") {
                user = message.value("content", "");
            }
        }
        const std::string content = reply ? *reply : state->responder.respond(system, user);
        ordered_json out;
        out["id"] = "mock-completion";
        out["object"] = "chat.completion";
        out["model"] = body.value("model", "mock");
        out["choices"] = ordered_json::array({ordered_json{
            {"index", 0},
            {"message", ordered_json{{"role", "assistant"}, {"content", content}}},
            {"finish_reason", "stop"}}});
        response.set_content(out.dump(), "application/json");
    });
}

MockLlmServer::~MockLlmServer() { stop(); }

void MockLlmServer::start(int port) {
    if (thread_.joinable()) {
        return;
    }
    if (port == 0) {
        port_ = state_->server.bind_to_any_port("127.0.0.1");
    } else if (state_->server.bind_to_port("127.0.0.1", port)) {
        port_ = port;
    } else {
        port_ = -1;
    }
    if (port_ <= 0) {
        throw TransportError("mock LLM server could not bind");
    }
    thread_ = std::thread([this] { state_->server.listen_after_bind(); });
    state_->server.wait_until_ready();
}

void MockLlmServer::stop() {
    if (thread_.joinable()) {
        state_->server.stop();
        thread_.join();
    }
}

std::string MockLlmServer::base_url() const {
    return "http://127.0.0.1:" + std::to_string(port_);
}

void MockLlmServer::script_statuses(std::vector<int> statuses) {
    std::lock_guard lock(state_->mutex);
    state_->statuses.assign(statuses.begin(), statuses.end());
}

void MockLlmServer::script_replies(std::vector<std::string> replies) {
    std::lock_guard lock(state_->mutex);
    state_->replies.assign(replies.begin(), replies.end());
}

void MockLlmServer::script_raw_bodies(std::vector<std::string> bodies) {
    std::lock_guard lock(state_->mutex);
    state_->raw_bodies.assign(bodies.begin(), bodies.end());
}

void MockLlmServer::set_delay(std::chrono::milliseconds delay) {
    std::lock_guard lock(state_->mutex);
    state_->delay = delay;
}

std::size_t MockLlmServer::request_count() const {
    std::lock_guard lock(state_->mutex);
    return state_->bodies.size();
}

std::vector<std::string> MockLlmServer::request_bodies() const {
    std::lock_guard lock(state_->mutex);
    return state_->bodies;
}

}  // namespace subix
