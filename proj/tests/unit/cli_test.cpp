#include "blocklot/serialize.hpp"
#include "blocklot/time.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>

extern char** environ;

namespace {

namespace fs = std::filesystem;

struct CliRun {
    int status;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(BLOCKLOT_CLI_PATH) + " " + args + " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, n);
    const int raw = ::pclose(pipe);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::map<std::string, std::string> fields(const std::string& out) {
    std::map<std::string, std::string> m;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        const auto colon = line.find(": ");
        if (colon != std::string::npos) m[line.substr(0, colon)] = line.substr(colon + 2);
    }
    return m;
}

std::string quote(const std::string& s) {
    return "'" + s + "'";
}

class CliHarness : public ::testing::Test {
protected:
    void SetUp() override {
        std::random_device rd;
        dir = fs::temp_directory_path() / ("blocklot_cli_" + std::to_string(rd()));
        fs::create_directories(dir);
        const std::string port_file = (dir / "port").string();
        const std::string fixture = blocklot::testing::fixture("genesis_chain.csv").string();
        std::vector<std::string> args = {BLOCKLOTD_PATH,   "--port", "0",  "--port-file", port_file,
                                         "--beacon-fixture", fixture, "--confirmations", "0",
                                         "--no-access-log"};
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        ASSERT_EQ(::posix_spawn(&pid, BLOCKLOTD_PATH, nullptr, nullptr, argv.data(), environ), 0);
        for (int i = 0; i < 500 && url.empty(); ++i) {
            std::ifstream in(port_file);
            int port = 0;
            if (in >> port && port > 0) url = "http://127.0.0.1:" + std::to_string(port);
            std::this_thread::sleep_for(std::chrono::milliseconds(10));
        }
        ASSERT_FALSE(url.empty()) << "daemon did not start";
    }

    void TearDown() override {
        if (pid > 0) {
            ::kill(pid, SIGTERM);
            int status = 0;
            ::waitpid(pid, &status, 0);
            EXPECT_TRUE(WIFEXITED(status) && WEXITSTATUS(status) == 0);
        }
        fs::remove_all(dir);
    }

    CliRun cli(const std::string& args) { return run("--url " + url + " " + args); }

    pid_t pid = -1;
    fs::path dir;
    std::string url;
};

} // namespace

TEST_F(CliHarness, FullFlowThroughTheCli) {
    using namespace std::chrono;
    const auto date = blocklot::utc_now() + seconds(2);
    const CliRun opened = cli("open --name " + quote("cli raffle") + " --date " + blocklot::format_utc(date) +
                           " --winners 1 --note " + quote("from the cli"));
    ASSERT_EQ(opened.status, 0) << opened.out;
    auto o = fields(opened.out);
    const std::string id = o["event_id"];
    ASSERT_EQ(id.size(), 32u);
    EXPECT_EQ(o["target_height"], "7");

    std::vector<std::string> tokens;
    for (const char* who : {"ann", "ben", "cat"}) {
        const CliRun sub = cli("subscribe --event " + id + " --identity " + who);
        ASSERT_EQ(sub.status, 0);
        tokens.push_back(fields(sub.out)["token"]);
    }

    const CliRun early = cli("draw --event " + id + " --token " + o["organizer_token"]);
    EXPECT_EQ(early.status, 2);

    std::this_thread::sleep_until(system_clock::time_point(date) + milliseconds(1100));
    const CliRun drawn = cli("draw --event " + id + " --token " + o["organizer_token"]);
    ASSERT_EQ(drawn.status, 0) << drawn.out;

    int winners = 0;
    const char* names[] = {"ann", "ben", "cat"};
    for (int i = 0; i < 3; ++i) {
        const CliRun chk = cli("check --event " + id + " --identity " + names[i] + " --token " + tokens[i]);
        ASSERT_TRUE(chk.status == 0 || chk.status == 1);
        if (chk.status == 0) ++winners;
    }
    EXPECT_EQ(winners, 1);

    const CliRun verified = cli("verify --event " + id);
    EXPECT_EQ(verified.status, 0) << verified.out;
    EXPECT_NE(verified.out.find("PASSED"), std::string::npos);

    const CliRun listed = cli("query");
    EXPECT_NE(listed.out.find(id), std::string::npos);
    EXPECT_EQ(cli("--json query --event " + id).status, 0);

    // offline verification of the exported record
    const std::string record = (dir / "record.txt").string();
    ASSERT_EQ(cli("export --event " + id + " --token " + o["organizer_token"] + " -o " + record).status, 0);
    const std::string headers = blocklot::testing::fixture("genesis_chain.csv").string();
    const CliRun offline = run("verify-offline --event " + record + " --header " + headers);
    EXPECT_EQ(offline.status, 0) << offline.out;
    EXPECT_NE(offline.out.find("majority_checked: false"), std::string::npos);

    std::ifstream in(record);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    text.replace(text.find("note=from the cli"), 17, "note=from the CLI");
    const std::string forged = (dir / "forged.txt").string();
    std::ofstream(forged) << text;
    const CliRun tampered = run("verify-offline --event " + forged + " --header " + headers);
    EXPECT_EQ(tampered.status, 1);
    EXPECT_NE(tampered.out.find("event_integrity_ok: false"), std::string::npos);

    const CliRun audit = cli("audit --event " + id + " --runs 3000");
    EXPECT_EQ(audit.status, 0);
    EXPECT_NE(audit.out.find("# passed=true"), std::string::npos);
}

TEST_F(CliHarness, ErrorsMapToExitCodes) {
    EXPECT_EQ(cli("query --event " + std::string(32, '0')).status, 2);
    EXPECT_EQ(cli("open --name x --date notadate").status, 2);
    EXPECT_EQ(run("--url http://127.0.0.1:1 query").status, 3);
    EXPECT_EQ(run("frobnicate").status, 2);
    EXPECT_EQ(run("").status, 2);
}

TEST(CliAudit, SyntheticAuditReport) {
    const CliRun ok = run("audit --participants 10 --winners 1 --runs 2000 --workers 2");
    EXPECT_EQ(ok.status, 0);
    EXPECT_NE(ok.out.find("# runs=2000\n# participants=10\n"), std::string::npos);
    EXPECT_EQ(run("audit --participants 10 --runs 10").status, 2);
    EXPECT_EQ(run("audit --participants 10 --runs 2000 --zmax 0.01").status, 1);
}
