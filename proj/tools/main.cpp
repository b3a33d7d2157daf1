#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aptraj/config.hpp"
#include "aptraj/experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive probabilistic trajectory optimization toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Flat key = value configuration file");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Overrides the configured seed");
  };
  CLI::App* train = app.add_subcommand("train", "Collect offline data and train the SSGP model");
  CLI::App* bench = app.add_subcommand("bench-inference", "Time and check EMM/LIN propagation");
  CLI::App* opt = app.add_subcommand("optimize", "Belief-space trajectory optimization with a trained model");
  CLI::App* mpc = app.add_subcommand("mpc", "Receding-horizon episodes with online adaptation");
  for (CLI::App* sub : {train, bench, opt, mpc}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  aptraj::RunConfig cfg;
  try {
    cfg = config_path.empty() ? aptraj::parse_config("") : aptraj::load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      aptraj::resolve_and_validate(cfg);
    }
  } catch (const aptraj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }

  const std::filesystem::path out(out_dir);
  try {
    if (train->parsed()) aptraj::cmd_train(cfg, out);
    else if (bench->parsed()) aptraj::cmd_bench_inference(cfg, out);
    else if (opt->parsed()) aptraj::cmd_optimize(cfg, out);
    else if (mpc->parsed()) aptraj::cmd_mpc(cfg, out);
  } catch (const aptraj::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return 0;
}
