#include <CLI11.hpp>

#include <string>

#include "gvf/app.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Guiding vector field scenario runner"};
  app.require_subcommand(1);

  std::string scenario_file;
  std::string out_dir = "out";
  std::string name;
  int runs = 0;
  int threads = 0;

  CLI::App* run = app.add_subcommand("run", "simulate a scenario file");
  run->add_option("scenario", scenario_file, "scenario JSON file")->required();
  run->add_option("--out", out_dir, "output directory");

  CLI::App* reproduce =
      app.add_subcommand("reproduce", "run a built-in scenario with the flown parameters");
  reproduce
      ->add_option("name", name,
                   "one of: trefoil, lissajous3d, circle-impossibility, figure8-scan")
      ->required();
  reproduce->add_option("--out", out_dir, "output directory");

  CLI::App* scan = app.add_subcommand("scan", "singularity audit of a scenario's field");
  scan->add_option("scenario", scenario_file, "scenario JSON file with a scan section")
      ->required();
  scan->add_option("--out", out_dir, "output directory");

  CLI::App* sweep = app.add_subcommand("sweep", "fan out seeded runs and merge the reports");
  sweep->add_option("scenario", scenario_file, "scenario JSON file with a sweep section")
      ->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_option("--runs", runs, "override sweep.count");
  sweep->add_option("--threads", threads, "worker thread cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : gvf::kExitInput;
  }

  if (run->parsed()) return gvf::cmd_run(scenario_file, out_dir);
  if (reproduce->parsed()) return gvf::cmd_reproduce(name, out_dir);
  if (scan->parsed()) return gvf::cmd_scan(scenario_file, out_dir);
  if (sweep->parsed()) return gvf::cmd_sweep(scenario_file, out_dir, runs, threads);
  return gvf::kExitInput;
}
