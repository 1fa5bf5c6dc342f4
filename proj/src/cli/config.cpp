#include <cctype>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "bmx/cli.hpp"
#include "bmx/errors.hpp"
#include "cli_internal.hpp"

namespace bmx::cli {
namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

bool is_key(std::string_view s) {
  if (s.empty()) return false;
  for (const char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

using Check = std::function<void(const std::string&)>;

struct KeySpec {
  std::string def;
  bool required = false;
  bool may_be_empty = false;  // empty means "automatic" or "no expectation"
  Check check;
};

using Schema = std::map<std::string, KeySpec>;

void check_real(const std::string& v) { eval_real(v); }

Check real_above(double lo, bool inclusive = false) {
  return [lo, inclusive](const std::string& v) {
    const double x = eval_real(v);
    if (!(x > lo || (inclusive && x == lo)))
      throw ConfigError("value " + v + " must be " + (inclusive ? ">= " : "> ") + format_number(lo));
  };
}

Check real_in(double lo, double hi) {
  return [lo, hi](const std::string& v) {
    const double x = eval_real(v);
    if (!(x > lo && x < hi))
      throw ConfigError("value " + v + " must lie in (" + format_number(lo) + ", " + format_number(hi) + ")");
  };
}

Check int_at_least(long lo) {
  return [lo](const std::string& v) {
    if (parse_long(v) < lo) throw ConfigError("value " + v + " must be >= " + std::to_string(lo));
  };
}

void check_complex(const std::string& v) { eval_complex(v); }
void check_upper(const std::string& v) {
  if (!(eval_complex(v).imag() > 0)) throw ConfigError("value " + v + " must have positive imaginary part");
}
void check_list(const std::string& v) {
  if (eval_real_list(v).empty()) throw ConfigError("empty list");
}
void check_domain(const std::string& v) { parse_domain(v); }
void check_map(const std::string& v) { parse_map(v); }
void check_bool(const std::string& v) { parse_bool(v); }
void check_seed(const std::string& v) { parse_seed(v); }
void check_text(const std::string&) {}

Check one_of(std::vector<std::string> choices) {
  return [choices](const std::string& v) {
    for (const auto& c : choices)
      if (v == c) return;
    std::string all;
    for (const auto& c : choices) all += (all.empty() ? "" : ", ") + c;
    throw ConfigError("value '" + v + "' must be one of " + all);
  };
}

void check_region(const std::string& v) { parse_region(v); }

void check_verdicts(const std::string& v) {
  for (const auto& t : split_top_level(v)) one_of({"finite", "infinite", "inconclusive", "not_finite", "not_infinite"})(t);
}

void check_bools(const std::string& v) {
  for (const auto& t : split_top_level(v)) parse_bool(t);
}

KeySpec req(Check c) { return {"", true, false, std::move(c)}; }
KeySpec opt(std::string def, Check c) { return {std::move(def), false, false, std::move(c)}; }
KeySpec maybe(Check c) { return {"", false, true, std::move(c)}; }

Schema common_schema() {
  return {
      {"experiment", req(check_text)},
      {"description", {"", false, true, check_text}},
      {"seed", opt("1", check_seed)},
      {"workers", opt("1", int_at_least(1))},
  };
}

Schema kernel_schema(std::string kernel) {
  return {
      {"kernel", opt(std::move(kernel), one_of({"wos", "em"}))},
      {"eps", maybe(real_above(0))},
      {"r_cap", maybe(real_above(0))},
      {"max_steps", opt("1000000", int_at_least(1))},
      {"em_c", opt("0.1", real_above(0))},
      {"em_dt_max", opt("inf", real_above(0))},
      {"em_tol", opt("1e-9", real_above(0))},
  };
}

Schema merged(std::initializer_list<Schema> parts) {
  Schema out;
  for (const auto& p : parts) out.insert(p.begin(), p.end());
  return out;
}

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> all = [] {
    std::map<std::string, Schema> s;
    s["harmonic_measure"] = merged({common_schema(), kernel_schema("wos"),
                                    {{"domain", req(check_domain)},
                                     {"start", req(check_complex)},
                                     {"region", req(check_region)},
                                     {"n", opt("100000", int_at_least(100))},
                                     {"expect_value", maybe(check_real)},
                                     {"expect_tol_se", opt("3", real_above(0))}}});
    s["moment"] = merged({common_schema(), kernel_schema("em"),
                          {{"domain", req(check_domain)},
                           {"start", req(check_complex)},
                           {"p", req(check_list)},
                           {"n", opt("100000", int_at_least(100))},
                           {"expect_tail_index", maybe(real_above(0))},
                           {"tail_tol", opt("0.15", real_above(0))},
                           {"expect_verdicts", maybe(check_verdicts)}}});
    s["hardy"] = merged({common_schema(),
                         {{"mode", req(one_of({"norm", "number"}))},
                          {"map", maybe(check_map)},
                          {"p", maybe(check_list)},
                          {"expect_divergent", maybe(check_bools)},
                          {"domain", maybe(check_domain)},
                          {"start", maybe(check_complex)},
                          {"R_schedule", maybe(check_list)},
                          {"expect_contains", maybe(check_real)},
                          {"expect_infinite", maybe(check_bool)},
                          {"qh_kappa", opt("0.2", real_in(0, 1))},
                          {"qh_abs_floor", opt("1e-3", real_above(0))},
                          {"qh_rel_floor", opt("0.01", real_above(0, true))},
                          {"qh_rel_change", opt("0.01", real_above(0, true))},
                          {"qh_max_rounds", opt("4", int_at_least(1))},
                          {"qh_max_cells", opt("600000", int_at_least(100))},
                          {"qh_relax", opt("true", check_bool)}}});
    s["karafyllia"] = merged({common_schema(), kernel_schema("em"),
                              {{"domain", req(check_domain)},
                               {"start", req(check_complex)},
                               {"split_re", opt("0", check_real)},
                               {"n", opt("100000", int_at_least(100))},
                               {"starlike_probes", opt("2000", int_at_least(1))},
                               {"expect_ratio_min", maybe(check_real)},
                               {"expect_ratio_max", maybe(check_real)}}});
    s["cauchy"] = merged({common_schema(),
                          {{"gamma_mobius", opt("2i", check_upper)},
                           {"alpha_mobius", opt("i", check_upper)},
                           {"gamma_power", opt("i", check_upper)},
                           {"alpha_power", opt("0.5", real_in(0, 1))},
                           {"lambda", opt("1", check_real)},
                           {"n", opt("1000000", int_at_least(2))}}});
    s["modulus"] = merged({common_schema(), kernel_schema("wos"),
                           {{"domain", req(check_domain)},
                            {"start", opt("0", check_complex)},
                            {"n", opt("100000", int_at_least(100))},
                            {"expect_side_probs", maybe(check_list)},
                            {"map_c", maybe(real_above(0))},
                            {"oracle_n", opt("0", int_at_least(0))},
                            {"oracle_dt_max", opt("1e-3", real_above(0))}}});
    s["comb_sequence"] = merged({common_schema(), kernel_schema("wos"),
                                 {{"iterations", opt("1, 3, 5", check_list)},
                                  {"side", opt("V", one_of({"V", "W"}))},
                                  {"start", opt("1", check_complex)},
                                  {"p", opt("0.25", real_above(0))},
                                  {"n", opt("100000", int_at_least(100))},
                                  {"box", opt("60", real_above(0))},
                                  {"thresholds", maybe(check_list)}}});
    s["pushforward_check"] = merged({common_schema(), kernel_schema("em"),
                                     {{"domain", req(check_domain)},
                                      {"start", req(check_complex)},
                                      {"map", req(check_map)},
                                      {"image_domain", req(check_domain)},
                                      {"n", opt("20000", int_at_least(100))},
                                      {"bins", opt("24", int_at_least(2))},
                                      {"image_tol", opt("1e-6", real_above(0))},
                                      {"min_p_value", opt("1e-3", real_in(0, 1))}}});
    return s;
  }();
  return all;
}

std::string where(const std::string& scenario, const std::string& key) {
  return "scenario '" + scenario + "', key '" + key + "': ";
}

// Cross-key constraints that a single key check cannot see.
void check_consistency(const ResolvedScenario& s) {
  const auto& v = s.values;
  const auto at = [&](const char* k) -> const std::string& { return v.at(k); };
  const auto fail = [&](const std::string& msg) { throw ConfigError("scenario '" + s.name + "': " + msg); };
  const auto start_inside = [&](const std::string& dkey) {
    const Domain d = parse_domain(at(dkey.c_str()));
    if (!contains(d, eval_complex(at("start")))) fail("start " + at("start") + " is not inside " + d.describe());
  };

  if (s.experiment == "hardy") {
    if (at("mode") == "norm") {
      if (at("map").empty() || at("p").empty()) fail("norm mode needs map and p");
      if (!at("expect_divergent").empty() &&
          split_top_level(at("expect_divergent")).size() != eval_real_list(at("p")).size())
        fail("expect_divergent needs one entry per p");
      for (double p : eval_real_list(at("p")))
        if (!(p > 0)) fail("p must be positive");
    } else {
      if (at("domain").empty() || at("start").empty() || at("R_schedule").empty())
        fail("number mode needs domain, start and R_schedule");
      start_inside("domain");
      if (at("expect_contains").empty() == at("expect_infinite").empty() && !at("expect_contains").empty())
        fail("set at most one of expect_contains and expect_infinite");
    }
    return;
  }
  if (s.experiment == "moment") {
    start_inside("domain");
    const auto ps = eval_real_list(at("p"));
    for (double p : ps)
      if (!(p > 0)) fail("p must be positive");
    if (!at("expect_verdicts").empty() && split_top_level(at("expect_verdicts")).size() != ps.size())
      fail("expect_verdicts needs one entry per p");
    return;
  }
  if (s.experiment == "harmonic_measure" || s.experiment == "karafyllia") {
    start_inside("domain");
    if (s.experiment == "karafyllia" && !(eval_complex(at("start")).real() < eval_real(at("split_re"))))
      fail("start must lie left of split_re");
    return;
  }
  if (s.experiment == "modulus") {
    const Domain d = parse_domain(at("domain"));
    if (!d.as<shape::Annulus>() && !d.as<shape::Rectangle>()) fail("modulus needs an annulus or rectangle");
    start_inside("domain");
    if (d.as<shape::Annulus>() && (!at("map_c").empty() || parse_long(at("oracle_n")) > 0 ||
                                   !at("expect_side_probs").empty()))
      fail("map_c, oracle_n and expect_side_probs apply to rectangles only");
    if (!at("expect_side_probs").empty() && eval_real_list(at("expect_side_probs")).size() != 4)
      fail("expect_side_probs needs four entries (S1..S4)");
    return;
  }
  if (s.experiment == "comb_sequence") {
    std::vector<double> its = eval_real_list(at("iterations"));
    for (double k : its)
      if (k != std::round(k) || k < 0 || k > 12) fail("iterations must be integers in [0, 12]");
    if (!at("thresholds").empty() && eval_real_list(at("thresholds")).size() != its.size())
      fail("thresholds needs one entry per iteration");
    return;
  }
  if (s.experiment == "pushforward_check") {
    start_inside("domain");
    const Domain img = parse_domain(at("image_domain"));
    const auto* hp = img.as<shape::HalfPlane>();
    if (!img.as<shape::Disk>() && !(hp && hp->normal == shape::Axis::Up))
      fail("image_domain must be a disk or halfplane(up)");
    return;
  }
}

}  // namespace

std::string format_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

long parse_long(const std::string& v) {
  const double x = eval_real(v);
  if (x != std::round(x) || std::abs(x) > 9e15) throw ConfigError("expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

std::uint64_t parse_seed(const std::string& v) {
  const std::string t = trim(v);
  if (t.empty() || !std::all_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    throw ConfigError("seed must be an unsigned 64-bit integer, got '" + v + "'");
  try {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(t, &used, 10);
    return static_cast<std::uint64_t>(s);
  } catch (const std::exception&) {
    throw ConfigError("seed out of range: '" + v + "'");
  }
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "no" || v == "0") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

ExitPredicate parse_region(const std::string& v) {
  if (const auto label = label_from_string(v)) return label_is(*label);
  for (const char* prefix : {"re>", "re<", "im>", "im<"}) {
    if (v.rfind(prefix, 0) == 0) {
      const double x = eval_real(v.substr(3));
      const bool re = prefix[0] == 'r', above = prefix[2] == '>';
      return [=](const ExitRecord& r) {
        const double c = re ? r.exit_point.real() : r.exit_point.imag();
        return above ? c > x : c < x;
      };
    }
  }
  throw ConfigError("region must be a boundary label or re>X, re<X, im>X, im<X; got '" + v + "'");
}

Config parse_config(std::string_view text) {
  Config cfg;
  std::map<std::string, std::string>* section = nullptr;
  std::set<std::string> names;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto at = [&] { return "line " + std::to_string(lineno) + ": "; };
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(at() + "malformed section header");
      const std::string head = trim(std::string_view(t).substr(1, t.size() - 2));
      if (head == "defaults") {
        section = &cfg.defaults;
      } else if (head.rfind("scenario.", 0) == 0 && is_identifier(head.substr(9))) {
        const std::string name = head.substr(9);
        if (!names.insert(name).second) throw ConfigError(at() + "duplicate scenario '" + name + "'");
        cfg.scenarios.push_back({name, {}});
        section = &cfg.scenarios.back().values;
      } else {
        throw ConfigError(at() + "unknown section [" + head + "]");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(at() + "expected key = value");
    if (!section) throw ConfigError(at() + "key outside of any section");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (!is_key(key)) throw ConfigError(at() + "bad key '" + key + "'");
    if (!section->emplace(key, trim(std::string_view(t).substr(eq + 1))).second)
      throw ConfigError(at() + "duplicate key '" + key + "'");
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

Override parse_override(std::string_view text) {
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override must be key=value, got '" + std::string(text) + "'");
  Override o;
  std::string lhs = trim(text.substr(0, eq));
  o.value = trim(text.substr(eq + 1));
  if (const auto dot = lhs.rfind('.'); dot != std::string::npos) {
    o.scenario = lhs.substr(0, dot);
    lhs = lhs.substr(dot + 1);
    if (!is_identifier(*o.scenario)) throw ConfigError("bad scenario name in override '" + std::string(text) + "'");
  }
  if (!is_key(lhs)) throw ConfigError("bad key in override '" + std::string(text) + "'");
  o.key = lhs;
  return o;
}

std::vector<ResolvedScenario> resolve(const Config& cfg, const std::vector<Override>& overrides,
                                      std::optional<std::string> env_seed) {
  if (cfg.scenarios.empty()) throw ConfigError("config defines no scenarios");
  for (const auto& o : overrides) {
    if (!o.scenario) continue;
    const bool found = std::any_of(cfg.scenarios.begin(), cfg.scenarios.end(),
                                   [&](const Scenario& s) { return s.name == *o.scenario; });
    if (!found) throw ConfigError("override names unknown scenario '" + *o.scenario + "'");
  }

  // Shared keys ([defaults], env, untargeted overrides) must be known to
  // some scenario's experiment; they are skipped where they do not apply.
  std::set<std::string> known_somewhere;
  std::vector<ResolvedScenario> out;
  for (const auto& sc : cfg.scenarios) {
    std::map<std::string, std::string> v;
    std::set<std::string> explicit_keys;
    const auto exp_it = sc.values.find("experiment");
    const std::string experiment =
        exp_it != sc.values.end() ? exp_it->second
                                  : (cfg.defaults.count("experiment") ? cfg.defaults.at("experiment") : "");
    std::string exp_final = experiment;
    for (const auto& o : overrides)
      if (o.key == "experiment" && (!o.scenario || *o.scenario == sc.name)) exp_final = o.value;
    if (exp_final.empty()) throw ConfigError("scenario '" + sc.name + "' has no experiment");
    const auto schema_it = schemas().find(exp_final);
    if (schema_it == schemas().end())
      throw ConfigError("scenario '" + sc.name + "': unknown experiment '" + exp_final + "'");
    const Schema& schema = schema_it->second;
    for (const auto& [k, _] : schema) known_somewhere.insert(k);

    for (const auto& [k, val] : cfg.defaults)
      if (schema.count(k)) v[k] = val;
    for (const auto& [k, val] : sc.values) {
      if (!schema.count(k)) throw ConfigError(where(sc.name, k) + "unknown key for experiment " + exp_final);
      v[k] = val;
    }
    if (env_seed) v["seed"] = *env_seed;
    for (const auto& o : overrides) {
      if (o.scenario && *o.scenario != sc.name) continue;
      if (!schema.count(o.key)) {
        if (o.scenario) throw ConfigError(where(sc.name, o.key) + "unknown key for experiment " + exp_final);
        continue;
      }
      v[o.key] = o.value;
    }
    v["experiment"] = exp_final;

    for (const auto& [k, spec] : schema) {
      auto it = v.find(k);
      if (it == v.end()) {
        if (spec.required) throw ConfigError(where(sc.name, k) + "required key is missing");
        it = v.emplace(k, spec.def).first;
      }
      if (it->second.empty()) {
        if (spec.required || !spec.may_be_empty) throw ConfigError(where(sc.name, k) + "value is empty");
        continue;
      }
      try {
        spec.check(it->second);
      } catch (const Error& e) {
        throw ConfigError(where(sc.name, k) + e.what());
      }
    }
    ResolvedScenario r{sc.name, exp_final, std::move(v)};
    try {
      check_consistency(r);
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError("scenario '" + sc.name + "': " + e.what());
    }
    out.push_back(std::move(r));
  }

  for (const auto& [k, _] : cfg.defaults)
    if (!known_somewhere.count(k)) throw ConfigError("[defaults] key '" + k + "' is unknown to every experiment");
  for (const auto& o : overrides)
    if (!o.scenario && !known_somewhere.count(o.key))
      throw ConfigError("override key '" + o.key + "' is unknown to every experiment");
  return out;
}

std::string to_config_text(const std::vector<ResolvedScenario>& scenarios) {
  std::string out;
  for (const auto& s : scenarios) {
    if (!out.empty()) out += "\n";
    out += "[scenario." + s.name + "]\n";
    for (const auto& [k, v] : s.values) out += k + " = " + v + "\n";
  }
  return out;
}

}  // namespace bmx::cli
