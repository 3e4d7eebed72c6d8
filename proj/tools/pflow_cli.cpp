#include "pflow/config.hpp"
#include "pflow/errors.hpp"
#include "pflow/harness.hpp"
#include "pflow/parallel.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <utility>

int main(int argc, char** argv) {
  CLI::App app{"Regularized p-harmonic map flow simulator"};
  app.require_subcommand(1);
  std::string config;
  std::string out;
  int threads = 0;
  bool strict = false;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "integrate the flow and write the history and energy series"},
      {"diagnose", "energy, dissipation and Bochner diagnostics on a history"},
      {"phi", "scan the monotone quantity over scales"},
      {"sweep-k", "compare the (delta,K)-flows against the projected delta-flow"},
      {"detect", "flag concentration points and estimate their content"},
      {"report", "aggregate the outputs of earlier commands"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "config file")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--threads", threads, "worker threads (default: PFLOW_THREADS or 1)")->check(CLI::PositiveNumber);
    sub->add_flag("--strict", strict, "treat warnings as failures");
  }
  CLI11_PARSE(app, argc, argv);

  if (threads > 0) pflow::set_thread_count(threads);

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const pflow::RunConfig cfg = pflow::load_config(config);
    return pflow::run_command(command, cfg, pflow::HarnessOptions{out, strict}, std::cout);
  } catch (const pflow::Error& e) {
    std::cerr << "pflow " << command << ": " << e.what() << "\n";
    return 2;
  }
}
