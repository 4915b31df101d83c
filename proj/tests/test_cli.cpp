#include <arpa/inet.h>
#include <gtest/gtest.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "dpkit_cli.hpp"

namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dpkit");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dpkit::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dpkit_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return (dir_ / name).string();
  }

  fs::path dir_;
};

TEST_F(CliTest, RunWisInstanceAndExport) {
  const auto inst = write("ex.json", R"({"problem":"wis","intervals":[{"s":1,"f":3,"w":2},{"s":2,"f":5,"w":4},{"s":4,"f":6,"w":4}]})");
  const auto trace_path = (dir_ / "t.json").string();
  const auto r = run_cli({"run", "wis", "--instance", inst, "--export", trace_path});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "6\n");
  std::ifstream in(trace_path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto trace = dpkit::deserialize_trace(ss.str());
  EXPECT_EQ(trace.frames.size(), 5u);
}

TEST_F(CliTest, RunEditDistance) {
  EXPECT_EQ(run_cli({"run", "edit", "--x", "", "--y", ""}).out, "0\n");
  EXPECT_EQ(run_cli({"run", "edit", "--x", "kitten", "--y", "sitting"}).out, "24\n");
  EXPECT_EQ(run_cli({"run", "edit_distance", "--x", "a", "--y", "", "--delete", "3"}).out, "3\n");
}

TEST_F(CliTest, RunGeneratedMatchesOracle) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto r = run_cli({"run", "wis", "--n", "9", "--seed", std::to_string(seed)});
    ASSERT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("seed: " + std::to_string(seed)), std::string::npos);
    std::mt19937_64 rng(seed);
    const auto intervals = dpkit::corpus::random_intervals(9, rng);
    EXPECT_EQ(r.out, dpkit::cli::format_value(dpkit::corpus::brute_force_wis(intervals)) + "\n");
  }
  const auto alloc = run_cli({"run", "alloc", "--n", "2", "--H", "3", "--seed", "5"});
  ASSERT_EQ(alloc.code, 0);
  std::mt19937_64 rng(5);
  const auto inst = dpkit::corpus::random_alloc(2, 3, rng);
  EXPECT_EQ(alloc.out, dpkit::cli::format_value(dpkit::corpus::brute_force_time_allocation(inst)) + "\n");
}

TEST_F(CliTest, UsageAndRuntimeErrors) {
  EXPECT_EQ(run_cli({"run", "nosuch", "--n", "3"}).code, 2);
  EXPECT_EQ(run_cli({"run", "nosuch"}).code, 2);
  EXPECT_EQ(run_cli({}).code, 2);
  EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
  EXPECT_EQ(run_cli({"run", "wis"}).code, 2);  // neither instance nor generator params
  const auto inst = write("ex.json", R"({"problem":"wis","intervals":[]})");
  EXPECT_EQ(run_cli({"run", "wis", "--instance", inst, "--n", "3"}).code, 2);

  EXPECT_EQ(run_cli({"run", "wis", "--instance", (dir_ / "missing.json").string()}).code, 1);
  EXPECT_EQ(run_cli({"run", "wis", "--instance", write("bad.json", "{oops")}).code, 1);
  EXPECT_EQ(run_cli({"run", "edit", "--instance", inst}).code, 1);  // wrong problem
  EXPECT_EQ(run_cli({"run", "wis", "--n", "3", "--seed", "1", "--export", dir_.string()}).code, 1);
}

TEST_F(CliTest, ExportCommand) {
  const auto trace_path = (dir_ / "t.json").string();
  ASSERT_EQ(run_cli({"run", "edit", "--x", "ab", "--y", "b", "--export", trace_path}).code, 0);
  const auto page = (dir_ / "p.html").string();
  EXPECT_EQ(run_cli({"export", trace_path, "--out", page}).code, 0);
  EXPECT_TRUE(fs::exists(page));
  EXPECT_EQ(run_cli({"export", trace_path, "--out", dir_.string()}).code, 1);
  EXPECT_EQ(run_cli({"export", write("bad.json", R"({"schema":1})"), "--out", page}).code, 1);
  EXPECT_EQ(run_cli({"export", trace_path}).code, 2);
}

int free_port() {
  const int sock = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(sock, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
  socklen_t len = sizeof(addr);
  ::getsockname(sock, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(sock);
  return ntohs(addr.sin_port);
}

TEST_F(CliTest, ServeCommand) {
  const auto trace_path = (dir_ / "t.json").string();
  ASSERT_EQ(run_cli({"run", "wis", "--n", "4", "--seed", "7", "--export", trace_path}).code, 0);
  const int port = free_port();

  dpkit::cli::shutdown_requested().store(false);
  int code = -1;
  std::thread serving([&] { code = run_cli({"serve", trace_path, "--port", std::to_string(port)}).code; });
  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int attempt = 0; attempt < 100 && !res; ++attempt) {
    res = client.Get("/healthz");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);

  // Second server on the same port fails and names the port.
  const auto clash = run_cli({"serve", trace_path, "--port", std::to_string(port)});
  EXPECT_EQ(clash.code, 1);
  EXPECT_NE(clash.err.find(std::to_string(port)), std::string::npos);

  dpkit::cli::shutdown_requested().store(true);
  serving.join();
  EXPECT_EQ(code, 0);
  dpkit::cli::shutdown_requested().store(false);

  EXPECT_EQ(run_cli({"serve", (dir_ / "missing.json").string()}).code, 1);
}

#ifdef DPKIT_CLI_BINARY
TEST_F(CliTest, BinaryExitCodes) {
  const std::string bin = DPKIT_CLI_BINARY;
  auto status = [](const std::string& cmd) {
    const int raw = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  EXPECT_EQ(status(bin + " run edit --x abc --y abd"), 0);
  EXPECT_EQ(status(bin + " run nosuch"), 2);
  EXPECT_EQ(status(bin + " export " + (dir_ / "none.json").string() + " --out x.html"), 1);
}
#endif

}  // namespace
