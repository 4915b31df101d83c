#pragma once

// Command-line front end: run | serve | export.
// Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "dpkit/dpkit.hpp"

namespace dpkit::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_usage = 2;

inline std::atomic<bool>& shutdown_requested() {
  static std::atomic<bool> flag{false};
  return flag;
}

inline std::string format_value(double v) { return json_detail::number(v).dump(); }

inline std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunConfig {
  std::string problem;
  std::string instance_path;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> hours;
  std::optional<std::string> x;
  std::optional<std::string> y;
  corpus::EditCosts costs;
  std::string export_path;

  bool has_generator_params() const { return n || seed || hours || x || y; }
};

namespace detail {

inline std::optional<std::string> canonical_problem(const std::string& name) {
  if (name == "wis") return "wis";
  if (name == "edit" || name == "edit_distance") return "edit_distance";
  if (name == "alloc" || name == "time_allocation") return "time_allocation";
  return std::nullopt;
}

inline std::string problem_of(const corpus::Instance& inst) {
  if (std::holds_alternative<std::vector<corpus::Interval>>(inst)) return "wis";
  if (std::holds_alternative<corpus::EditInstance>(inst)) return "edit_distance";
  return "time_allocation";
}

// Generator seed: given or drawn, and always reported on stderr.
inline std::mt19937_64 seeded_rng(const RunConfig& cfg, std::ostream& err) {
  const std::uint64_t seed = cfg.seed ? *cfg.seed : std::random_device{}();
  err << "seed: " << seed << "\n";
  return std::mt19937_64(seed);
}

inline corpus::Instance generate(const std::string& problem, const RunConfig& cfg, std::ostream& err) {
  if (problem == "wis") {
    auto rng = seeded_rng(cfg, err);
    return corpus::random_intervals(cfg.n.value_or(8), rng);
  }
  if (problem == "edit_distance") {
    if (cfg.x || cfg.y) return corpus::EditInstance{cfg.x.value_or(""), cfg.y.value_or(""), cfg.costs};
    auto rng = seeded_rng(cfg, err);
    const std::size_t len = cfg.n.value_or(6);
    auto x = corpus::random_string(len, rng);
    auto y = corpus::random_string(len, rng);
    return corpus::EditInstance{std::move(x), std::move(y), cfg.costs};
  }
  auto rng = seeded_rng(cfg, err);
  return corpus::random_alloc(cfg.n.value_or(3), cfg.hours.value_or(6), rng);
}

inline int cmd_run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto problem = canonical_problem(cfg.problem);
  if (!problem) {
    err << "unknown problem '" << cfg.problem << "' (expected wis, edit or alloc)\n";
    return exit_usage;
  }
  if (cfg.instance_path.empty() != cfg.has_generator_params()) {
    err << "give exactly one of --instance or generator parameters\n";
    return exit_usage;
  }

  corpus::Instance instance;
  if (!cfg.instance_path.empty()) {
    const auto text = read_file(cfg.instance_path);
    if (!text) {
      err << "cannot read instance " << cfg.instance_path << "\n";
      return exit_runtime;
    }
    try {
      instance = corpus::parse_instance(nlohmann::json::parse(*text));
    } catch (const nlohmann::json::exception& e) {
      err << "instance " << cfg.instance_path << ": " << e.what() << "\n";
      return exit_runtime;
    } catch (const Error& e) {
      err << cfg.instance_path << ": " << e.what() << "\n";
      return exit_runtime;
    }
    if (problem_of(instance) != *problem) {
      err << cfg.instance_path << " holds a " << problem_of(instance) << " instance, not " << *problem << "\n";
      return exit_runtime;
    }
  } else {
    instance = generate(*problem, cfg, err);
  }

  double value = 0;
  Trace trace;
  try {
    if (const auto* wis = std::get_if<std::vector<corpus::Interval>>(&instance)) {
      auto sol = corpus::solve_wis(corpus::WisInstance::from_intervals(*wis));
      value = sol.value;
      trace = std::move(sol.trace);
    } else if (const auto* e = std::get_if<corpus::EditInstance>(&instance)) {
      auto sol = corpus::solve_edit_distance(e->x, e->y, e->costs);
      value = sol.cost;
      trace = std::move(sol.trace);
    } else {
      auto sol = corpus::solve_time_allocation(std::get<corpus::TimeAllocInstance>(instance));
      value = sol.gpa;
      trace = std::move(sol.trace);
    }
  } catch (const Error& e) {
    err << "invalid instance: " << e.what() << "\n";
    return exit_runtime;
  }

  if (!cfg.export_path.empty()) {
    std::ofstream file(cfg.export_path, std::ios::binary | std::ios::trunc);
    if (!file || !(file << serialize_trace(trace)) || !file.flush()) {
      err << "cannot write " << cfg.export_path << "\n";
      return exit_runtime;
    }
  }
  out << format_value(value) << "\n";
  return exit_ok;
}

inline std::optional<Trace> load_trace(const std::string& path, std::ostream& err) {
  const auto text = read_file(path);
  if (!text) {
    err << "cannot read trace " << path << "\n";
    return std::nullopt;
  }
  try {
    return deserialize_trace(*text);
  } catch (const ParseError& e) {
    err << path << ": invalid trace: " << e.what() << "\n";
    return std::nullopt;
  }
}

inline int cmd_serve(const std::string& path, const std::string& host, int port, std::ostream& out,
                     std::ostream& err) {
  auto trace = load_trace(path, err);
  if (!trace) return exit_runtime;
  SessionServer server(std::move(*trace));
  try {
    port = server.start(host, port);
  } catch (const StartupError& e) {
    err << "cannot serve on port " << port << ": " << e.what() << "\n";
    return exit_runtime;
  }
  out << "serving " << path << " at http://" << host << ":" << port << "/" << std::endl;
  while (!shutdown_requested().load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  server.stop();
  return exit_ok;
}

inline int cmd_export(const std::string& path, const std::string& out_path, std::ostream& out, std::ostream& err) {
  auto trace = load_trace(path, err);
  if (!trace) return exit_runtime;
  try {
    export_static(*trace, out_path);
  } catch (const IoError& e) {
    err << e.what() << "\n";
    return exit_runtime;
  }
  out << "wrote " << out_path << "\n";
  return exit_ok;
}

}  // namespace detail

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"dpkit: record, animate and self-test dynamic programs"};
  app.require_subcommand(1);

  RunConfig cfg;
  auto* run_cmd = app.add_subcommand("run", "solve a corpus problem and print the optimal value");
  run_cmd->add_option("problem", cfg.problem, "wis | edit | alloc")->required();
  run_cmd->add_option("--instance", cfg.instance_path, "instance JSON file");
  run_cmd->add_option("--n", cfg.n, "generated size (intervals, string length or classes)");
  run_cmd->add_option("--seed", cfg.seed, "generator seed");
  run_cmd->add_option("--H", cfg.hours, "generated total hours (alloc)");
  run_cmd->add_option("--x", cfg.x, "source string (edit)");
  run_cmd->add_option("--y", cfg.y, "target string (edit)");
  run_cmd->add_option("--insert", cfg.costs.insert, "insertion cost (edit)");
  run_cmd->add_option("--delete", cfg.costs.del, "deletion cost (edit)");
  run_cmd->add_option("--replace", cfg.costs.replace, "replacement cost (edit)");
  run_cmd->add_option("--export", cfg.export_path, "write the trace JSON here");

  std::string serve_path;
  std::string host = "127.0.0.1";
  int port = default_port();
  auto* serve_cmd = app.add_subcommand("serve", "serve a trace over HTTP");
  serve_cmd->add_option("trace", serve_path, "trace JSON file")->required();
  serve_cmd->add_option("--port", port, "listen port (default: DPKIT_PORT or 8050)");
  serve_cmd->add_option("--host", host, "bind address");

  std::string export_in;
  std::string export_out;
  auto* export_cmd = app.add_subcommand("export", "write a self-contained HTML viewer");
  export_cmd->add_option("trace", export_in, "trace JSON file")->required();
  export_cmd->add_option("--out", export_out, "output HTML path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return exit_usage;
  }

  if (run_cmd->parsed()) {
    const int code = detail::cmd_run(cfg, out, err);
    if (code == exit_usage) err << run_cmd->help();
    return code;
  }
  if (serve_cmd->parsed()) return detail::cmd_serve(serve_path, host, port, out, err);
  return detail::cmd_export(export_in, export_out, out, err);
}

}  // namespace dpkit::cli
