// blocklotd: lottery HTTP service over a simulated replicated ledger.

#include "blocklot/beacon.hpp"
#include "blocklot/errors.hpp"
#include "blocklot/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <pthread.h>

int main(int argc, char** argv) {
    using namespace blocklot;

    ServiceConfig config;
    try {
        config = ServiceConfig::from_env();
    } catch (const Error& e) {
        std::cerr << "blocklotd: " << e.what() << '\n';
        return 2;
    }

    CLI::App app{"blocklotd: verifiable lottery service"};
    std::string beacon_mode = config.beacon.mode == BeaconMode::Live ? "live" : "fixture";
    std::string fixture = config.beacon.fixture_path.string();
    std::string data_dir = config.data_dir ? config.data_dir->string() : "";
    std::string ui_dir = config.ui_dir ? config.ui_dir->string() : "";
    std::string port_file;
    bool no_access_log = false;

    app.add_option("--listen", config.listen_address, "Listen address");
    app.add_option("--port", config.port, "Port (0 picks a free one)");
    app.add_option("--port-file", port_file, "Write the bound port to this file");
    app.add_option("--peers", config.peer_count, "Simulated ledger peers (odd)");
    app.add_option("--confirmations", config.confirmation_depth, "Blocks required above the target block");
    app.add_option("--channel", config.channel_id, "Ledger channel id");
    app.add_flag("--strict-identities", config.strict_identities, "Reject a repeated identity per event");
    app.add_option("--data-dir", data_dir, "Persist peer logs here");
    app.add_option("--ui-dir", ui_dir, "Serve static files from here under /ui");
    app.add_option("--workers", config.worker_threads, "HTTP worker threads");
    app.add_flag("--no-access-log", no_access_log, "Disable per-request log lines");
    app.add_option("--beacon-mode", beacon_mode, "live or fixture")->check(CLI::IsMember({"live", "fixture"}));
    app.add_option("--beacon-url", config.beacon.base_url, "Block explorer base URL");
    app.add_option("--beacon-fixture", fixture, "Header fixture file");
    CLI11_PARSE(app, argc, argv);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        config.beacon.mode = parse_beacon_mode(beacon_mode);
        config.beacon.fixture_path = fixture;
        if (app.count("--beacon-fixture") && !app.count("--beacon-mode")) config.beacon.mode = BeaconMode::Fixture;
        if (!data_dir.empty()) config.data_dir = data_dir;
        if (!ui_dir.empty()) config.ui_dir = ui_dir;
        if (no_access_log) config.access_log = false;

        auto beacon = std::make_shared<BeaconClient>(config.beacon);
        LotteryService service(config, beacon);
        HttpServer server(service);
        const int port = server.bind(config.listen_address, config.port);
        if (!port_file.empty()) {
            std::ofstream(port_file) << port << '\n';
        }
        std::cerr << "blocklotd listening on " << config.listen_address << ':' << port << " ("
                  << config.peer_count << " peers, beacon " << beacon_mode << ")" << std::endl;

        std::thread waiter([&] {
            int sig = 0;
            sigwait(&signals, &sig);
            std::cerr << "blocklotd: shutting down" << std::endl;
            server.stop();
        });
        server.serve();
        if (waiter.joinable()) {
            pthread_kill(waiter.native_handle(), SIGTERM);
            waiter.join();
        }
    } catch (const Error& e) {
        std::cerr << "blocklotd: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 2;
    }
    return 0;
}
