// Command-line front end: verify | equiv | run | convergence.
// Exit codes: 0 pass, 1 check failure, 2 configuration error, 3 numerical
// failure.

#include "dispflow/bench.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace dispflow;

namespace {

bench::ExperimentConfig load_config(const std::string& path, double tol_scale,
                                    std::optional<uint64_t> seed,
                                    const std::string& out_dir) {
  nlohmann::json j;
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    in >> j;
  } else {
    j = nlohmann::json::object();
  }
  bench::ExperimentConfig cfg = bench::ExperimentConfig::from_json(j);
  cfg.tol_scale = tol_scale;
  if (seed) cfg.seed = *seed;
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  return cfg;
}

int emit(const bench::Report& rep, const bench::ExperimentConfig& cfg) {
  nlohmann::json j = rep.to_json(cfg);
  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    std::ofstream of(std::filesystem::path(cfg.out_dir) / "report.json");
    of << j.dump(1) << "\n";
  }
  std::cout << j.dump(1) << std::endl;
  return rep.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curve-flow / transformed-system numerical laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir;
  double tol_scale = 1.0;
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "JSON experiment config");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--tol-scale", tol_scale, "tolerance scale factor");
  app.add_option("--seed", seed, "RNG seed override");

  auto* verify = app.add_subcommand("verify", "identity and agreement suites");
  auto* equiv = app.add_subcommand(
      "equiv", "geometric vs transformed evolution across refinements");
  auto* run = app.add_subcommand("run", "single-system time series");
  auto* conv =
      app.add_subcommand("convergence", "roundtrip / lift convergence study");

  CLI11_PARSE(app, argc, argv);

  try {
    bench::ExperimentConfig cfg =
        load_config(config_path, tol_scale, seed, out_dir);
    bench::Report rep;
    if (verify->parsed())
      rep = bench::cmd_verify(cfg);
    else if (equiv->parsed())
      rep = bench::cmd_equiv(cfg);
    else if (run->parsed())
      rep = bench::cmd_run(cfg);
    else
      rep = bench::cmd_convergence(cfg);
    return emit(rep, cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << std::endl;
    return 3;
  }
}
