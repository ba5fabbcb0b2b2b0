#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cgpdf/app/commands.hpp"
#include "cgpdf/app/config.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kBlowUp = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid conditional Gaussian density estimation for triad models"};
  app.require_subcommand(1, 1);

  std::string config_path, out_dir;
  std::vector<std::string> sets;
  long long seed = -1;
  int threads = -1;
  bool check = false;
  for (const char* name : {"simulate", "estimate", "compare", "diagnose"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--set", sets, "Override KEY=VALUE (dotted key, repeatable)");
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Master seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", threads, "Worker threads (0: runtime default)")
        ->check(CLI::NonNegativeNumber);
    sub->add_flag("--check", check, "Exit 4 when a recorded check fails");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    auto cfg = cgpdf::app::load_config(config_path);
    for (const auto& s : sets) cgpdf::app::apply_override(cfg, s);
    if (seed >= 0) cgpdf::app::apply_override(cfg, "seed=" + std::to_string(seed));
    if (threads >= 0)
      cgpdf::app::apply_override(cfg, "threads=" + std::to_string(threads));
    if (!out_dir.empty()) cfg["output"]["dir"] = out_dir;
    const auto rc = cgpdf::app::parse_config(cfg);
    const int code = cgpdf::app::run_command(command, rc, check);
    if (code != 0) std::cerr << command << ": check failed (see manifest.json)\n";
    return code;
  } catch (const cgpdf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const cgpdf::NumericalError& e) {
    std::cerr << "numerical blow-up: " << e.what() << " (sample " << e.sample()
              << ", t = " << e.time() << ")\n";
    return kBlowUp;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
