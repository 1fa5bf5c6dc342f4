#pragma once

// Scenario-driven front end: config parsing, expression and domain/map
// grammars, experiment execution and report writing.
//
// Config files are sectioned key = value text:
//
//   [defaults]
//   seed = 1
//   [scenario.annulus_modulus]
//   experiment = modulus
//   domain = annulus(1, e^2)
//   start = e
//
// Keys under [defaults] apply to every scenario unless the scenario sets
// them. '#' starts a comment. Every value is kept as text and parsed by the
// experiment's schema, so the report echo can be re-parsed verbatim.

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bmx/geometry.hpp"
#include "bmx/maps.hpp"

namespace bmx::cli {

// ---- expressions -----------------------------------------------------------

// Complex arithmetic with + - * / ^, parentheses, the constants pi, e, i and
// inf, numbers with an optional imaginary suffix (2i), and the functions exp,
// log, sqrt, sin, cos, tan, atan, cosh, sinh, abs, re, im.
CPoint eval_complex(std::string_view text);

// As eval_complex but rejects a nonzero imaginary part.
double eval_real(std::string_view text);

// Comma-separated expressions; logspace(a, b, n) and linspace(a, b, n)
// expand in place.
std::vector<double> eval_real_list(std::string_view text);

// Splits at top-level commas, trimming whitespace.
std::vector<std::string> split_top_level(std::string_view text);

// ---- domain and map specs --------------------------------------------------

// Grammar (matches Domain::describe):
//   rectangle(a, b) | annulus(r, R) | wedge(theta) | halfplane(up|down|left|right)
//   strip(lo, hi) | halfstrip_complement(a, x0) | parabola_complement | koebe
//   comb(V|W, n [, a0..an, b1..bn]) | spiral(U|complement) | disk(cx, cy, r)
//   exp_preimage(<domain>)
Domain parse_domain(std::string_view text);

// Grammar (matches AnalyticMap::describe):
//   linear(re, im) | linear(c) | power_int(n [, re, im]) | power_branch(alpha)
//   mobius(re, im) | mobius(alpha) | koebe_parabola | wedge_power(theta) | exp
//   compose(m1, m2, ...)   -- m1 applied first
AnalyticMap parse_map(std::string_view text);

// ---- configuration -----------------------------------------------------------

struct Scenario {
  std::string name;
  std::map<std::string, std::string> values;  // as written, before defaults
};

struct Config {
  std::map<std::string, std::string> defaults;
  std::vector<Scenario> scenarios;  // in file order
};

Config parse_config(std::string_view text);
Config load_config(const std::string& path);

// "key=value" applies to every scenario; "NAME.key=value" to one scenario.
struct Override {
  std::optional<std::string> scenario;
  std::string key;
  std::string value;
};

Override parse_override(std::string_view text);

// Fully resolved scenario: every schema key present, values validated.
struct ResolvedScenario {
  std::string name;
  std::string experiment;
  std::map<std::string, std::string> values;
};

inline const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"harmonic_measure", "moment",       "hardy",
                                              "karafyllia",       "cauchy",       "modulus",
                                              "comb_sequence",    "pushforward_check"};
  return names;
}

// Precedence, lowest first: [defaults], scenario section, env_seed, overrides.
// Throws ConfigError on unknown experiments, unknown keys, missing required
// keys or values that fail to parse.
std::vector<ResolvedScenario> resolve(const Config& cfg, const std::vector<Override>& overrides,
                                      std::optional<std::string> env_seed = std::nullopt);

// Re-serializes resolved scenarios as a config file.
std::string to_config_text(const std::vector<ResolvedScenario>& scenarios);

// ---- execution ---------------------------------------------------------------

struct RawRow {
  std::uint64_t path_id = 0;
  std::optional<CPoint> exit_point;
  std::optional<double> exit_time;
  std::string label;
  long steps = 0;
  std::string status;  // "ok" or "max_steps"
};

struct ScenarioResult {
  std::string name;
  std::string report_json;  // full report text
  bool pass = false;
  bool error = false;
  std::vector<RawRow> raw;
};

struct RunOptions {
  std::optional<int> workers;  // overrides the scenario value when set
  bool raw = false;
};

ScenarioResult run_scenario(const ResolvedScenario& s, const RunOptions& opt);

// CSV with header scenario,path_id,exit_re,exit_im,exit_time,label,steps,status.
std::string raw_csv(const std::string& scenario, const std::vector<RawRow>& rows);

const char* version();

// Entry point used by the bmx executable; returns the process exit status.
int main_entry(int argc, char** argv);

}  // namespace bmx::cli
