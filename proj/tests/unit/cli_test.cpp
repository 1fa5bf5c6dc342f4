#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "bmx/cli.hpp"
#include "bmx/errors.hpp"
#include "json.hpp"

using namespace bmx;
using namespace bmx::cli;
using Json = nlohmann::ordered_json;

namespace {

std::vector<ResolvedScenario> resolve_text(const std::string& text, const std::vector<std::string>& sets = {},
                                           std::optional<std::string> env = std::nullopt) {
  std::vector<Override> o;
  for (const auto& s : sets) o.push_back(parse_override(s));
  return resolve(parse_config(text), o, env);
}

Json results_of(const ScenarioResult& r) {
  Json j = Json::parse(r.report_json);
  j.erase("timing");
  return j;
}

const char* kHarmonic = R"(
[scenario.hm]
experiment = harmonic_measure
domain = annulus(1, e^2)
start = e
region = inner
n = 400
)";

std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int run_main(std::vector<std::string> args) {
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST(Expressions, Arithmetic) {
  EXPECT_DOUBLE_EQ(eval_real("1 + 2*3"), 7);
  EXPECT_DOUBLE_EQ(eval_real("-2^2"), -4);
  EXPECT_DOUBLE_EQ(eval_real("2^3^2"), 512);
  EXPECT_DOUBLE_EQ(eval_real("(1 + 2) / 4"), 0.75);
  EXPECT_DOUBLE_EQ(eval_real("e^2"), std::exp(2.0));
  EXPECT_DOUBLE_EQ(eval_real("pi/2"), std::numbers::pi / 2);
  EXPECT_DOUBLE_EQ(eval_real("log(e)"), 1);
  EXPECT_DOUBLE_EQ(eval_real("1e-3"), 1e-3);
  EXPECT_EQ(eval_real("inf"), std::numeric_limits<double>::infinity());
}

TEST(Expressions, Complex) {
  EXPECT_EQ(eval_complex("2i"), CPoint(0, 2));
  EXPECT_EQ(eval_complex("-1 + i"), CPoint(-1, 1));
  EXPECT_EQ(eval_complex("-0.02i"), CPoint(0, -0.02));
  EXPECT_NEAR(std::abs(eval_complex("sqrt(-1)") - CPoint(0, 1)), 0, 1e-15);
  EXPECT_NEAR(std::abs(eval_complex("exp(i*pi)") + 1.0), 0, 1e-15);
  EXPECT_DOUBLE_EQ(eval_real("abs(3 + 4i)"), 5);
  EXPECT_DOUBLE_EQ(eval_real("im(2 - 5i)"), -5);
}

TEST(Expressions, Errors) {
  for (const char* bad : {"1 +", "(1", "foo", "2 3", "sin", "1..2", ""})
    EXPECT_THROW(eval_complex(bad), ConfigError) << bad;
  EXPECT_THROW(eval_real("i"), ConfigError);
}

TEST(Expressions, Lists) {
  const auto v = eval_real_list("logspace(1, 100, 3), 7, linspace(0, 1, 5)");
  ASSERT_EQ(v.size(), 9u);
  EXPECT_DOUBLE_EQ(v[0], 1);
  EXPECT_NEAR(v[1], 10, 1e-12);
  EXPECT_DOUBLE_EQ(v[2], 100);
  EXPECT_DOUBLE_EQ(v[3], 7);
  EXPECT_DOUBLE_EQ(v[5], 0.25);
  EXPECT_DOUBLE_EQ(v[8], 1);
  EXPECT_THROW(eval_real_list("logspace(0, 1, 3)"), ConfigError);
  EXPECT_THROW(eval_real_list("1,,2"), ConfigError);
}

TEST(Specs, DomainRoundTrip) {
  const std::vector<Domain> domains{
      Domain::rectangle(2, 1),          Domain::annulus(1, std::exp(2.0)), Domain::wedge(std::numbers::pi / 2),
      Domain::half_plane(shape::Axis::Left), Domain::strip(-1, 1),     Domain::half_strip_complement(0.5, -2),
      Domain::parabola_complement(),    Domain::koebe_slit(),
      Domain::comb(3, default_comb_heights(3), default_comb_offsets(3), shape::CombSide::W),
      Domain::spiral(shape::SpiralSide::U), Domain::disk({0.3, -1}, 2),
      Domain::exp_preimage(Domain::disk({0.3, 0}, 1))};
  for (const auto& d : domains) {
    const std::string text = d.describe();
    EXPECT_EQ(parse_domain(text).describe(), text);
  }
  EXPECT_EQ(parse_domain("comb(V, 1)").describe(), parse_domain("comb(V, 1, 1, 3, -2)").describe());
}

TEST(Specs, MapRoundTrip) {
  const std::vector<AnalyticMap> maps{
      AnalyticMap::linear({2, -1}), AnalyticMap::power_int(-2, {0, 1}), AnalyticMap::power_branch(0.5),
      AnalyticMap::mobius({0.5, 1}), AnalyticMap::koebe_parabola(), AnalyticMap::wedge_power(1.0),
      AnalyticMap::exp(),
      AnalyticMap::compose({AnalyticMap::exp(), AnalyticMap::linear(3.0)})};
  for (const auto& m : maps) {
    const std::string text = m.describe();
    EXPECT_EQ(parse_map(text).describe(), text);
  }
  EXPECT_EQ(eval(parse_map("compose(power_int(2), linear(3))"), CPoint(2, 0)), CPoint(12, 0));
}

TEST(Specs, Errors) {
  for (const char* bad : {"annulus(2, 1)", "circle(1)", "wedge(1, 2)", "halfplane(sideways)", "comb(X, 1)",
                          "disk(0, 0, -1)", "rectangle(1, 1", "spiral(V)"})
    EXPECT_THROW(parse_domain(bad), ConfigError) << bad;
  for (const char* bad : {"power_branch(2)", "mobius(1)", "bogus", "compose()"})
    EXPECT_THROW(parse_map(bad), ConfigError) << bad;
}

TEST(Config, ParsesSectionsAndComments) {
  const Config c = parse_config(R"(
# leading comment
[defaults]
seed = 3   # trailing comment
[scenario.a]
experiment = cauchy
n = 10
[scenario.b-2]
experiment = cauchy
)");
  EXPECT_EQ(c.defaults.at("seed"), "3");
  ASSERT_EQ(c.scenarios.size(), 2u);
  EXPECT_EQ(c.scenarios[0].name, "a");
  EXPECT_EQ(c.scenarios[0].values.at("n"), "10");
  EXPECT_EQ(c.scenarios[1].name, "b-2");
}

TEST(Config, MalformedFilesAreRejected) {
  EXPECT_THROW(parse_config("seed = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario.a]\nn = 1\nn = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario.a]\n[scenario.a]\n"), ConfigError);
  EXPECT_THROW(parse_config("[other]\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario.a\n"), ConfigError);
  EXPECT_THROW(parse_config("[scenario.a]\njust text\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/file.cfg"), ConfigError);
}

TEST(Config, DefaultsAreMaterialized) {
  const auto r = resolve_text("[scenario.c]\nexperiment = cauchy\n");
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].experiment, "cauchy");
  EXPECT_EQ(r[0].values.at("seed"), "1");
  EXPECT_EQ(r[0].values.at("workers"), "1");
  EXPECT_EQ(r[0].values.at("n"), "1000000");
  EXPECT_EQ(r[0].values.at("lambda"), "1");
}

TEST(Config, ValidationErrorsComeBeforeCompute) {
  // Each of these would otherwise start a simulation.
  EXPECT_THROW(resolve_text(std::string(kHarmonic) + "bogus_key = 1\n"), ConfigError);
  EXPECT_THROW(resolve_text("[scenario.a]\nexperiment = teleport\n"), ConfigError);
  EXPECT_THROW(resolve_text("[scenario.a]\nexperiment = moment\ndomain = wedge(pi/2)\np = 0.5\n"), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic) + "seed = -4\n"), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic) + "kernel = magic\n"), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic) + "workers = 0\n"), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic), {"n=12.5"}), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic), {"start=0"}), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic), {"region=sideways"}), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic), {"nobody.seed=2"}), ConfigError);
  EXPECT_THROW(resolve_text(std::string(kHarmonic), {"hm.split_re=2"}), ConfigError);
  EXPECT_THROW(resolve_text("[defaults]\nfrobnicate = 1\n[scenario.c]\nexperiment = cauchy\n"), ConfigError);
  EXPECT_THROW(resolve_text("[scenario.m]\nexperiment = modulus\ndomain = wedge(1)\nstart = 1\n"), ConfigError);
  EXPECT_THROW(resolve_text("[scenario.k]\nexperiment = karafyllia\ndomain = halfplane(up)\nstart = 1 + i\n"),
               ConfigError);
}

TEST(Config, DefaultsOnlyApplyWhereKnown) {
  const auto r = resolve_text(std::string("[defaults]\nkernel = em\n") + kHarmonic +
                              "[scenario.c]\nexperiment = cauchy\n");
  EXPECT_EQ(r[0].values.at("kernel"), "em");
  EXPECT_EQ(r[1].values.count("kernel"), 0u);
}

TEST(Config, OverridePrecedence) {
  const std::string text = std::string(kHarmonic) + "seed = 3\n[scenario.other]\nexperiment = cauchy\n";
  EXPECT_EQ(resolve_text(text)[0].values.at("seed"), "3");
  EXPECT_EQ(resolve_text(text, {}, "5")[0].values.at("seed"), "5");
  EXPECT_EQ(resolve_text(text, {"seed=7"}, "5")[0].values.at("seed"), "7");

  const auto targeted = resolve_text(text, {"seed=7", "hm.seed=9"}, "5");
  EXPECT_EQ(targeted[0].values.at("seed"), "9");
  EXPECT_EQ(targeted[1].values.at("seed"), "7");

  const Override o = parse_override("hm.n = 500");
  EXPECT_EQ(o.scenario, "hm");
  EXPECT_EQ(o.key, "n");
  EXPECT_EQ(o.value, "500");
  EXPECT_THROW(parse_override("novalue"), ConfigError);
}

TEST(Config, EchoRoundTrips) {
  const auto first = resolve_text(std::string(kHarmonic) + "[scenario.c]\nexperiment = cauchy\nlambda = 0.5\n");
  const auto second = resolve(parse_config(to_config_text(first)), {});
  ASSERT_EQ(first.size(), second.size());
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].name, second[i].name);
    EXPECT_EQ(first[i].experiment, second[i].experiment);
    EXPECT_EQ(first[i].values, second[i].values);
  }
}

TEST(Config, ReportEchoReproducesResults) {
  const auto s = resolve_text(kHarmonic);
  const ScenarioResult a = run_scenario(s[0], {});
  Json echo = Json::parse(a.report_json)["config"];
  std::string text = "[scenario.hm]\n";
  for (const auto& [k, v] : echo.items()) text += k + " = " + v.get<std::string>() + "\n";
  const auto again = resolve(parse_config(text), {});
  EXPECT_EQ(again[0].values, s[0].values);
  EXPECT_EQ(results_of(run_scenario(again[0], {})), results_of(a));
}

TEST(Config, ShippedScenarioFilesResolve) {
  const std::filesystem::path dir = std::filesystem::path(BMX_SOURCE_DIR) / "scenarios";
  const auto battery = resolve(load_config((dir / "paper_battery.cfg").string()), {});
  EXPECT_EQ(battery.size(), 12u);
  EXPECT_EQ(resolve(load_config((dir / "wedge.cfg").string()), {}).size(), 1u);
  EXPECT_EQ(resolve(load_config((dir / "annulus.cfg").string()), {}).size(), 2u);
}

TEST(Run, WorkerCountDoesNotChangeResults) {
  const auto s = resolve_text(std::string(kHarmonic) + "[scenario.m]\nexperiment = moment\n"
                                                       "domain = disk(0, 0, 1)\nstart = 0\np = 1\nn = 2000\n");
  for (const auto& sc : s) {
    const ScenarioResult one = run_scenario(sc, RunOptions{1, false});
    const ScenarioResult four = run_scenario(sc, RunOptions{4, false});
    ASSERT_FALSE(one.error) << one.report_json;
    Json a = results_of(one), b = results_of(four);
    EXPECT_EQ(a.dump(), b.dump());
  }
}

TEST(Run, RawRowsCoverEveryPath) {
  auto s = resolve_text(kHarmonic, {"max_steps=3"});
  const ScenarioResult r = run_scenario(s[0], RunOptions{std::nullopt, true});
  ASSERT_EQ(r.raw.size(), 400u);
  long capped = 0;
  for (const auto& row : r.raw) capped += row.status == "max_steps";
  EXPECT_GT(capped, 0);
  EXPECT_EQ(Json::parse(r.report_json)["excluded"].get<long>(), capped);

  const std::string csv = raw_csv("hm", r.raw);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "scenario,path_id,exit_re,exit_im,exit_time,label,steps,status");
  long rows = 0, capped_rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",max_steps") != std::string::npos) {
      ++capped_rows;
      EXPECT_EQ(line.rfind("hm,", 0), 0u);
      EXPECT_NE(line.find(",,,,"), std::string::npos) << line;
    }
  }
  EXPECT_EQ(rows, 400);
  EXPECT_EQ(capped_rows, capped);
}

TEST(Run, FailedExpectationIsNotAnError) {
  const auto s = resolve_text(std::string(kHarmonic) + "expect_value = 0.9\n");
  const ScenarioResult r = run_scenario(s[0], {});
  EXPECT_FALSE(r.error);
  EXPECT_FALSE(r.pass);
  const Json j = Json::parse(r.report_json);
  EXPECT_EQ(j["schema"], 1);
  EXPECT_FALSE(j["expectations"][0]["pass"].get<bool>());
}

TEST(Run, RuntimeFailureIsRecorded) {
  // map(start) = 4 lies outside the image disk; only detectable while running.
  const auto s = resolve_text(R"(
[scenario.p]
experiment = pushforward_check
domain = disk(0, 0, 3)
start = 2
map = power_int(2)
image_domain = disk(0, 0, 1)
n = 100
)");
  const ScenarioResult r = run_scenario(s[0], {});
  EXPECT_TRUE(r.error);
  EXPECT_FALSE(r.pass);
  EXPECT_TRUE(Json::parse(r.report_json)["error"].is_string());
}

TEST(Main, ExitCodesAndOutputs) {
  const auto dir = std::filesystem::temp_directory_path() / "bmx_cli_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto cfg = dir / "hm.cfg";
  std::ofstream(cfg) << kHarmonic << "expect_value = 0.5\nexpect_tol_se = 4\n";
  const std::string out = (dir / "out").string();

  EXPECT_EQ(run_main({"bmx", "run", cfg.string(), "--out", out, "--raw", "--set", "seed=7"}), 0);
  const Json report = Json::parse(read_file(dir / "out" / "hm.json"));
  EXPECT_EQ(report["config"]["seed"], "7");
  EXPECT_EQ(report["version"], version());
  EXPECT_TRUE(std::filesystem::exists(dir / "out" / "hm.csv"));

  EXPECT_EQ(run_main({"bmx", "run", cfg.string(), "--out", out, "--set", "expect_value=0.9"}), 2);
  EXPECT_EQ(run_main({"bmx", "run", cfg.string(), "--out", out, "--set", "bogus=1"}), 1);
  EXPECT_EQ(run_main({"bmx", "run", (dir / "missing.cfg").string(), "--out", out}), 1);
  std::filesystem::remove_all(dir);
}
