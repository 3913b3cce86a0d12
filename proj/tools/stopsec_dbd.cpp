// stopsec-dbd: stand-alone HTTP service for the interference-report store.
// PU-side writers use the write token, SUs the read token.

#include <atomic>
#include <chrono>
#include <csignal>
#include <memory>
#include <thread>
#include <iostream>

#include "CLI11.hpp"
#include "stopsec/db_service.hpp"
#include "stopsec/version.hpp"

namespace {
std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop = true; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"StopSec interference database service"};
    app.set_version_flag("--version", stopsec::kVersion);

    int port = 8750;
    double ttl_s = 10.0;
    std::string journal;
    std::string write_token = "pu-token";
    std::string read_token = "su-token";
    app.add_option("--port", port, "listen port on 127.0.0.1");
    app.add_option("--ttl", ttl_s, "report TTL in seconds");
    app.add_option("--journal", journal, "single-file journal path (persistent mode)");
    app.add_option("--write-token", write_token, "bearer token granting PU write access");
    app.add_option("--read-token", read_token, "bearer token granting SU read access");
    CLI11_PARSE(app, argc, argv);

    try {
        stopsec::DbConfig cfg;
        cfg.ttl_seconds = ttl_s;
        auto db = journal.empty() ? std::make_unique<stopsec::InterferenceDb>(cfg)
                                  : std::make_unique<stopsec::InterferenceDb>(journal, cfg);
        stopsec::DbHttpService service(*db, {{write_token, stopsec::Role::kPrimaryUser},
                                            {read_token, stopsec::Role::kSecondaryUser}});
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        const int bound = service.start(port);
        std::cerr << "stopsec-dbd listening on 127.0.0.1:" << bound << "\n";
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
        service.stop();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
