#include "llstar/study.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char **argv) {
  CLI::App app{"Least-squares finite element studies for advection-reaction problems"};
  app.require_subcommand(1);

  auto *study = app.add_subcommand("study", "Run the study described by a config file");
  std::string config_path, output, levels;
  std::uint64_t seed = 0;
  int jobs = 1;
  study->add_option("config", config_path, "Config file (key = value lines)")
      ->required()
      ->check(CLI::ExistingFile);
  auto *output_opt = study->add_option("--output", output, "CSV output path");
  auto *levels_opt =
      study->add_option("--levels", levels, "Mesh levels, e.g. \"8,16,32\" or \"4/0,4/1\"");
  auto *seed_opt = study->add_option("--seed", seed, "Mesh jitter seed");
  study->add_option("--jobs", jobs, "Levels solved concurrently")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    llstar::StudyConfig config = llstar::load_config(config_path);
    if (*output_opt)
      config.output = output;
    if (*levels_opt)
      config.levels = llstar::parse_levels(levels);
    if (*seed_opt)
      config.seed = seed;
    config.jobs = jobs;
    return llstar::run_study(config, std::cerr);
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
