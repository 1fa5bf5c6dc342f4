#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "bmx/cli.hpp"
#include "bmx/errors.hpp"

namespace bmx::cli {
namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path.string() + "'");
  f << text;
}

}  // namespace

int main_entry(int argc, char** argv) {
  CLI::App app{"Brownian exit experiments driven by scenario configs"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  bool raw = false;
  std::optional<int> workers;
  std::string out_dir = ".";

  CLI::App* run = app.add_subcommand("run", "Run every scenario in a config file");
  run->add_option("config", config_path, "Scenario config file")->required();
  run->add_option("--set", sets, "Override key=value or NAME.key=value (repeatable)");
  run->add_flag("--raw", raw, "Also write per-path exit records as CSV");
  run->add_option("--workers", workers, "Worker threads, overriding every scenario")->check(CLI::PositiveNumber);
  run->add_option("--out", out_dir, "Output directory for reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  std::vector<ResolvedScenario> scenarios;
  try {
    std::vector<Override> overrides;
    for (const auto& s : sets) overrides.push_back(parse_override(s));
    std::optional<std::string> env_seed;
    if (const char* s = std::getenv("BMX_SEED"); s && *s) env_seed = s;
    scenarios = resolve(load_config(config_path), overrides, env_seed);
    std::filesystem::create_directories(out_dir);
  } catch (const std::exception& e) {
    std::cerr << "bmx: " << e.what() << "\n";
    return 1;
  }

  bool any_error = false, all_pass = true;
  for (const auto& s : scenarios) {
    const ScenarioResult r = run_scenario(s, RunOptions{workers, raw});
    const std::filesystem::path dir(out_dir);
    try {
      write_file(dir / (s.name + ".json"), r.report_json);
      if (raw && !r.raw.empty()) write_file(dir / (s.name + ".csv"), raw_csv(s.name, r.raw));
    } catch (const std::exception& e) {
      std::cerr << "bmx: " << e.what() << "\n";
      any_error = true;
    }
    any_error = any_error || r.error;
    all_pass = all_pass && r.pass;
    std::cout << (r.error ? "ERROR " : r.pass ? "PASS  " : "FAIL  ") << s.name << "\n";
  }
  if (any_error) return 1;
  return all_pass ? 0 : 2;
}

}  // namespace bmx::cli
