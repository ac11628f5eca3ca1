#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "fedpower/fedpower.hpp"

#include "CLI11.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON configuration file (defaults used when omitted)");
  cmd->add_option("--out", opts.out_dir, "output directory for artifacts");
  std::uint64_t* seed_slot = nullptr;
  // CLI11 has no std::optional<uint64_t> binding here; use a callback.
  (void)seed_slot;
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&opts](std::uint64_t s) { opts.seed = s; }, "master seed override");
}

int execute(fedpower::RunMode mode, const CommonOptions& opts) {
  nlohmann::json doc = nlohmann::json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) {
      std::cerr << "config error: cannot open config file: " << opts.config_path << '\n';
      return fedpower::exit_code::config;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      std::cerr << "config error: " << opts.config_path << ": " << e.what() << '\n';
      return fedpower::exit_code::config;
    }
  }
  try {
    fedpower::RunConfig cfg = fedpower::parse_run_config(
        doc, mode, opts.seed,
        opts.out_dir.empty() ? std::nullopt : std::optional<std::string>(opts.out_dir));
    return fedpower::run(std::move(cfg));
  } catch (const fedpower::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return fedpower::exit_code::config;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint probabilistic client selection and power allocation for simulated federated learning"};
  app.require_subcommand(1);

  CommonOptions solve_opts, train_opts, bench_opts;
  CLI::App* solve = app.add_subcommand("solve", "solve the selection/power plan and write plan.json");
  add_common(solve, solve_opts);
  CLI::App* train = app.add_subcommand("train", "solve, then run one training strategy and write its trace");
  add_common(train, train_opts);
  CLI::App* bench = app.add_subcommand("bench", "full strategy comparison with averaged traces and summaries");
  add_common(bench, bench_opts);

  CLI11_PARSE(app, argc, argv);

  if (solve->parsed()) return execute(fedpower::RunMode::solve, solve_opts);
  if (train->parsed()) return execute(fedpower::RunMode::train, train_opts);
  return execute(fedpower::RunMode::bench, bench_opts);
}
