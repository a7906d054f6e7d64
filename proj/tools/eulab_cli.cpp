#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "eulab/commands.hpp"
#include "eulab/config.hpp"
#include "eulab/version.hpp"

// Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
int main(int argc, char** argv) {
  CLI::App app{"entropy-targeted compressible flow laboratory"};
  app.set_version_flag("--version", std::string(eulab::kToolName) + " " + eulab::kToolVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir;
  int workers = 0;
  bool verbose = false;
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--out", out_dir, "output directory (default: config output_dir)");
  app.add_option("--workers", workers, "worker threads (default: config workers)");
  app.add_flag("--verbose", verbose, "print a one-line summary");

  CLI::App* c_sim = app.add_subcommand("simulate", "evolve one scheme and write snapshots");
  CLI::App* c_sel = app.add_subcommand("select", "score the scheme grid and pick the argmin");
  CLI::App* c_ens = app.add_subcommand("ensemble", "push a sampled measure and write E[defect]");
  CLI::App* c_dia = app.add_subcommand("diagnose", "audit weak-form residuals");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const eulab::RunConfig cfg = eulab::load_config(config_path);
    const std::string out = out_dir.empty() ? cfg.output_dir : out_dir;
    const int w = workers > 0 ? workers : cfg.workers;
    if (c_sim->parsed()) return eulab::cmd_simulate(cfg, out, w, verbose);
    if (c_sel->parsed()) return eulab::cmd_select(cfg, out, w, verbose);
    if (c_ens->parsed()) return eulab::cmd_ensemble(cfg, out, w, verbose);
    if (c_dia->parsed()) return eulab::cmd_diagnose(cfg, out, w, verbose);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const eulab::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
