// Standalone chat-completion stand-in for local pipeline runs.
#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "subix/error.hpp"
#include "subix/mock_llm.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void on_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deterministic mock LLM server", "subix-mock-llm"};
    int port = 8000;
    std::string glossary;
    app.add_option("--port", port, "0 picks a free port")->capture_default_str();
    app.add_option("--glossary", glossary, "Two-column TSV used for translation");
    CLI11_PARSE(app, argc, argv);

    try {
        subix::MockResponder responder;
        if (!glossary.empty()) responder.load_glossary(glossary);
        subix::MockLlmServer server(std::move(responder));
        server.start(port);
        std::cout << server.base_url() << std::endl;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!g_stop) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        server.stop();
    } catch (const subix::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
