// ipmlab: batch runner for linear-decay, sharpness, simulation and
// stratification scenarios.  One scenario per invocation, or `sweep`.
#include <CLI11.hpp>

#include <atomic>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "ipm/cli.hpp"

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

void add_common(CLI::App* app, Common& c, bool multi_config = false) {
  if (!multi_config) app->add_option("--config", c.config, "scenario file")->required()->check(CLI::ExistingFile);
  app->add_option("--out", c.out, "output directory")->required();
  app->add_option("--seed", c.seed, "override the scenario seed");
  app->add_option("--threads", c.threads, "worker threads")->check(CLI::PositiveNumber);
}

int sweep(const std::vector<std::string>& configs, const Common& common) {
  const int workers = std::max(1, std::min<int>(common.threads.value_or(1), static_cast<int>(configs.size())));
  std::vector<int> codes(configs.size(), 0);
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto work = [&] {
    for (std::size_t q = next++; q < configs.size(); q = next++) {
      std::ostringstream log;
      const std::filesystem::path cfg(configs[q]);
      std::ostringstream dir;
      dir << std::setw(3) << std::setfill('0') << q << '_' << cfg.stem().string();
      ipm::cli::Overrides ov;
      ov.seed = common.seed;
      ov.threads = 1;  // parallelism is across scenarios
      codes[q] = ipm::cli::run_config_file(cfg, ov, {std::filesystem::path(common.out) / dir.str(), &log});
      std::lock_guard lock(log_mutex);
      std::cout << "[" << dir.str() << "] exit " << codes[q] << '\n' << log.str();
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  int worst = 0;
  for (int c : codes) worst = std::max(worst, c);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ipmlab: incompressible porous media decay and stratification experiments"};
  app.set_version_flag("--version", ipm::cli::version);
  app.require_subcommand(1);

  Common common;
  std::vector<std::string> sweep_configs;
  const char* modes[] = {"linear_decay", "sharpness", "simulate", "stratify"};
  for (const char* m : modes) add_common(app.add_subcommand(m, std::string("run a ") + m + " scenario"), common);
  auto* run = app.add_subcommand("run", "run a scenario, mode taken from the file");
  add_common(run, common);
  auto* sw = app.add_subcommand("sweep", "run several scenarios concurrently, one directory each");
  add_common(sw, common, true);
  sw->add_option("--config", sweep_configs, "scenario files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ipm::cli::config_error;
  }

  if (sw->parsed()) return sweep(sweep_configs, common);

  ipm::cli::Overrides ov;
  ov.seed = common.seed;
  ov.threads = common.threads;
  for (const char* m : modes) {
    if (app.got_subcommand(m)) ov.expected_mode = m;
  }
  return ipm::cli::run_config_file(common.config, ov, {common.out, &std::cout});
}
