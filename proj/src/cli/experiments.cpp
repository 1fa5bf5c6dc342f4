#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <numbers>
#include <sstream>

#include "bmx/cli.hpp"
#include "bmx/errors.hpp"
#include "bmx/parallel.hpp"
#include "cli_internal.hpp"
#include "json.hpp"

#ifndef BMX_VERSION
#define BMX_VERSION "0.0.0"
#endif

namespace bmx::cli {
namespace {

using Json = nlohmann::ordered_json;

Json num(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

Json cnum(CPoint z) { return Json{{"re", num(z.real())}, {"im", num(z.imag())}}; }

Json est(const Estimate& e) {
  return Json{{"value", num(e.value)}, {"std_err", num(e.std_err)}, {"n", e.n},
              {"ci_lo", num(e.ci_lo)}, {"ci_hi", num(e.ci_hi)}};
}

class Params {
 public:
  explicit Params(const std::map<std::string, std::string>& v) : v_(v) {}
  const std::string& text(const std::string& k) const { return v_.at(k); }
  bool has(const std::string& k) const { return !v_.at(k).empty(); }
  double real(const std::string& k) const { return eval_real(text(k)); }
  CPoint cplx(const std::string& k) const { return eval_complex(text(k)); }
  long integer(const std::string& k) const { return parse_long(text(k)); }
  bool flag(const std::string& k) const { return parse_bool(text(k)); }
  std::vector<double> list(const std::string& k) const { return eval_real_list(text(k)); }
  Domain domain(const std::string& k) const { return parse_domain(text(k)); }
  AnalyticMap map(const std::string& k) const { return parse_map(text(k)); }

 private:
  const std::map<std::string, std::string>& v_;
};

// Collects named pass/fail checks for the report.
class Expectations {
 public:
  void add(std::string name, bool pass, Json detail = Json::object()) {
    Json entry{{"name", std::move(name)}, {"pass", pass}};
    entry.update(detail);
    pass_ = pass_ && pass;
    list_.push_back(std::move(entry));
  }
  bool pass() const { return pass_; }
  const Json& json() const { return list_; }

 private:
  Json list_ = Json::array();
  bool pass_ = true;
};

struct Outcome {
  Json results = Json::object();
  Expectations expect;
  long excluded = 0;
  std::vector<RawRow> raw;
};

SimOptions sim_options(const Params& p, int workers) {
  SimOptions o;
  o.kernel = p.text("kernel") == "wos" ? Kernel::WoS : Kernel::EM;
  if (p.has("eps")) o.wos.eps = p.real("eps");
  if (p.has("r_cap")) o.wos.r_cap = p.real("r_cap");
  o.wos.max_steps = p.integer("max_steps");
  o.em.max_steps = p.integer("max_steps");
  o.em.c = p.real("em_c");
  o.em.dt_max = p.real("em_dt_max");
  o.em.boundary_tol = p.real("em_tol");
  o.seed = parse_seed(p.text("seed"));
  o.workers = workers;
  return o;
}

void append_raw(std::vector<RawRow>& rows, const ExitBatch& batch, long max_steps) {
  for (const auto& path : batch.paths) {
    RawRow r;
    r.path_id = path.path_id;
    if (path.record) {
      r.exit_point = path.record->exit_point;
      r.exit_time = path.record->exit_time;
      r.label = std::string(to_string(path.record->label));
      r.steps = path.record->steps;
      r.status = "ok";
    } else {
      r.steps = max_steps;
      r.status = "max_steps";
    }
    rows.push_back(std::move(r));
  }
}

Json harmonic_json(const HarmonicMeasure& h) {
  return Json{{"estimate", est(h.estimate)}, {"wilson_lo", num(h.wilson_lo)}, {"wilson_hi", num(h.wilson_hi)},
              {"hits", h.hits}, {"valid", h.valid}, {"excluded", h.excluded}};
}

// Short form for check names; report values keep full precision.
std::string short_number(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

// Binomial standard error at the hypothesized proportion.
double binomial_se(double p0, long n) { return std::sqrt(p0 * (1 - p0) / static_cast<double>(n)); }

void run_harmonic(const Params& p, const SimOptions& opt, bool raw, Outcome& out) {
  const Domain d = p.domain("domain");
  const ExitBatch batch = simulate_exits(d, p.cplx("start"), p.integer("n"), opt);
  const HarmonicMeasure h = harmonic_measure_from(batch, parse_region(p.text("region")));
  out.results["harmonic_measure"] = harmonic_json(h);
  out.excluded = h.excluded;
  if (p.has("expect_value")) {
    const double p0 = p.real("expect_value"), tol = p.real("expect_tol_se") * binomial_se(p0, h.valid);
    out.expect.add("harmonic_measure", std::abs(h.estimate.value - p0) <= tol,
                   {{"target", num(p0)}, {"tolerance", num(tol)}});
  }
  if (raw) append_raw(out.raw, batch, p.integer("max_steps"));
}

bool verdict_matches(const std::string& want, Verdict got) {
  if (want == "not_finite") return got != Verdict::Finite;
  if (want == "not_infinite") return got != Verdict::Infinite;
  return want == to_string(got);
}

void run_moment(const Params& p, SimOptions opt, bool raw, Outcome& out) {
  opt.wos.with_time = true;
  const ExitBatch batch = simulate_exits(p.domain("domain"), p.cplx("start"), p.integer("n"), opt);
  const std::vector<double> times = exit_times(batch);
  const std::vector<double> ps = p.list("p");
  const std::vector<std::string> want =
      p.has("expect_verdicts") ? split_top_level(p.text("expect_verdicts")) : std::vector<std::string>{};
  out.excluded = batch.excluded();

  Json moments = Json::array();
  std::optional<Estimate> tail;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const MomentEstimate m = moment_from_times(times, ps[k], batch.excluded());
    tail = m.tail_index;
    moments.push_back(
        {{"p", num(ps[k])}, {"estimate", est(m.estimate)}, {"verdict", to_string(m.verdict)}});
    if (!want.empty())
      out.expect.add("verdict p=" + short_number(ps[k]), verdict_matches(want[k], m.verdict),
                     {{"expected", want[k]}, {"got", to_string(m.verdict)}});
  }
  out.results["tail_index"] = tail ? est(*tail) : Json(nullptr);
  out.results["moments"] = std::move(moments);
  if (p.has("expect_tail_index")) {
    const double target = p.real("expect_tail_index"), tol = p.real("tail_tol");
    out.expect.add("tail_index", tail && std::abs(tail->value - target) <= tol,
                   {{"target", num(target)}, {"tolerance", num(tol)}});
  }
  if (raw) append_raw(out.raw, batch, p.integer("max_steps"));
}

void run_hardy(const Params& p, Outcome& out) {
  if (p.text("mode") == "norm") {
    const AnalyticMap m = p.map("map");
    const std::vector<double> ps = p.list("p");
    const std::vector<std::string> want =
        p.has("expect_divergent") ? split_top_level(p.text("expect_divergent")) : std::vector<std::string>{};
    Json profiles = Json::array();
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const HardyNormProfile prof = hardy_norm_profile(m, ps[k]);
      bool monotone = true;
      for (std::size_t i = 1; i < prof.values.size(); ++i)
        if (prof.values[i] < prof.values[i - 1] * (1 - 1e-9)) monotone = false;
      Json values = Json::array(), radii = Json::array();
      for (double r : prof.r_grid) radii.push_back(num(r));
      for (double v : prof.values) values.push_back(num(v));
      profiles.push_back({{"p", num(ps[k])}, {"divergent", prof.divergent}, {"sup", num(prof.sup)},
                          {"monotone", monotone}, {"r_grid", radii}, {"values", values}});
      out.expect.add("monotone p=" + short_number(ps[k]), monotone);
      if (!want.empty())
        out.expect.add("divergent p=" + short_number(ps[k]), prof.divergent == parse_bool(want[k]),
                       {{"expected", parse_bool(want[k])}, {"got", prof.divergent}});
    }
    out.results["profiles"] = std::move(profiles);
    return;
  }

  QhConfig qc;
  qc.kappa = p.real("qh_kappa");
  qc.abs_floor = p.real("qh_abs_floor");
  qc.rel_floor = p.real("qh_rel_floor");
  qc.rel_change = p.real("qh_rel_change");
  qc.max_rounds = static_cast<int>(p.integer("qh_max_rounds"));
  qc.max_cells = static_cast<std::size_t>(p.integer("qh_max_cells"));
  qc.relax = p.flag("qh_relax");
  const HardyEstimate h = estimate_hardy_number(p.domain("domain"), p.cplx("start"), p.list("R_schedule"), qc);
  Json radii = Json::array(), deltas = Json::array();
  for (double r : h.r_schedule) radii.push_back(num(r));
  for (double v : h.delta_values) deltas.push_back(num(v));
  out.results["hardy"] = {{"start", cnum(h.a)}, {"R_schedule", radii}, {"delta", deltas},
                          {"slope", num(h.slope)}, {"lo", num(h.lo)}, {"hi", num(h.hi)},
                          {"infinite", h.infinite}};
  if (p.has("expect_contains")) {
    const double H = p.real("expect_contains");
    out.expect.add("contains", !h.infinite && h.lo <= H && H <= h.hi, {{"target", num(H)}});
  }
  if (p.has("expect_infinite"))
    out.expect.add("infinite", h.infinite == p.flag("expect_infinite"), {{"expected", p.flag("expect_infinite")}});
}

void run_karafyllia(const Params& p, const SimOptions& opt, Outcome& out) {
  const KarafylliaReport r = verify_karafyllia(p.domain("domain"), p.cplx("start"), p.real("split_re"),
                                               p.integer("n"), opt, static_cast<int>(p.integer("starlike_probes")));
  out.excluded = r.excluded;
  out.results["karafyllia"] = {{"nu", est(r.nu)},
                               {"nu_hat", est(r.nu_hat)},
                               {"ratio", est(r.ratio)},
                               {"delta_starlike", r.delta_starlike},
                               {"witness", r.witness ? cnum(*r.witness) : Json(nullptr)},
                               {"inclusion_checked", r.inclusion_checked},
                               {"inclusion_violations", r.inclusion_violations},
                               {"valid", r.valid},
                               {"excluded", r.excluded}};
  if (!r.delta_starlike) out.results["warnings"] = Json::array({"domain is not Delta-starlike"});
  out.expect.add("ratio_at_most_2", r.ratio.value <= 2 + 3 * r.ratio.std_err,
                 {{"bound", num(2 + 3 * r.ratio.std_err)}});
  out.expect.add("pathwise_inclusion", r.inclusion_violations == 0);
  if (p.has("expect_ratio_min"))
    out.expect.add("ratio_min", r.ratio.value >= p.real("expect_ratio_min"), {{"target", num(p.real("expect_ratio_min"))}});
  if (p.has("expect_ratio_max"))
    out.expect.add("ratio_max", r.ratio.value <= p.real("expect_ratio_max"), {{"target", num(p.real("expect_ratio_max"))}});
}

void run_cauchy(const Params& p, int workers, Outcome& out) {
  const CauchyReport r =
      verify_cauchy_identities(p.cplx("gamma_mobius"), p.cplx("alpha_mobius"), p.cplx("gamma_power"),
                               p.real("alpha_power"), p.real("lambda"), p.integer("n"), parse_seed(p.text("seed")),
                               workers);
  Json checks = Json::array();
  for (const auto& c : r.checks) {
    checks.push_back({{"name", c.name}, {"target", cnum(c.target)}, {"mean", cnum(c.mean)},
                      {"se_re", num(c.se_re)}, {"se_im", num(c.se_im)}, {"pass", c.pass}});
    out.expect.add(c.name, c.pass);
  }
  out.results["n"] = r.n;
  out.results["checks"] = std::move(checks);
}

void run_modulus(const Params& p, const SimOptions& opt, bool raw, Outcome& out) {
  const Domain d = p.domain("domain");
  const CPoint start = p.cplx("start");
  const long n = p.integer("n");
  const ExitBatch batch = simulate_exits(d, start, n, opt);
  out.excluded = batch.excluded();
  if (raw) append_raw(out.raw, batch, p.integer("max_steps"));

  if (const auto* an = d.as<shape::Annulus>()) {
    const HarmonicMeasure h = harmonic_measure_from(batch, label_is(Label::AnnulusInner));
    const double lr = std::log(an->R / std::abs(start));
    const double exact = std::log(an->R / an->r);
    const double ph = h.estimate.value;
    const double m = ph > 0 ? lr / ph : std::numeric_limits<double>::infinity();
    const double m_se = ph > 0 ? m * h.estimate.std_err / ph : std::numeric_limits<double>::infinity();
    out.results["inner_probability"] = harmonic_json(h);
    out.results["modulus"] = est(make_estimate(m, m_se, h.valid));
    out.results["modulus_exact"] = num(exact);
    const double p0 = lr / exact, tol = 3 * binomial_se(p0, h.valid);
    out.expect.add("log_hitting_law", std::abs(ph - p0) <= tol,
                   {{"target", num(p0)}, {"tolerance", num(tol)}});
    return;
  }

  const auto& rect = *d.as<shape::Rectangle>();
  const Label sides[4] = {Label::S1, Label::S2, Label::S3, Label::S4};
  std::vector<HarmonicMeasure> hm;
  Json probs = Json::object();
  for (const Label s : sides) {
    hm.push_back(harmonic_measure_from(batch, label_is(s)));
    probs[std::string(to_string(s))] = harmonic_json(hm.back());
  }
  out.results["side_probabilities"] = std::move(probs);
  out.results["aspect_ratio"] = num(rect.a / rect.b);

  if (p.has("expect_side_probs")) {
    const auto want = p.list("expect_side_probs");
    for (int k = 0; k < 4; ++k) {
      const double tol = 3 * binomial_se(want[k], hm[k].valid);
      out.expect.add("side " + std::string(to_string(sides[k])), std::abs(hm[k].estimate.value - want[k]) <= tol,
                     {{"target", num(want[k])}, {"tolerance", num(tol)}});
    }
  }

  if (p.has("map_c")) {
    // Relabel every exit after scaling; the scaled rectangle must assign the same side.
    const double c = p.real("map_c");
    const AnalyticMap f = AnalyticMap::linear(c);
    const Domain image = Domain::rectangle(c * rect.a, c * rect.b);
    const double tol = 1e-3 * c * std::max(rect.a, rect.b);
    long compared = 0, mismatches = 0;
    for (const auto& path : batch.paths) {
      if (!path.record) continue;
      ++compared;
      if (classify_exit(image, eval(f, path.record->exit_point), tol) != path.record->label) ++mismatches;
    }
    out.results["linear_map_check"] = {{"map", f.describe()}, {"image", image.describe()},
                                       {"compared", compared}, {"mismatches", mismatches}};
    out.expect.add("labels_invariant_under_linear_map", mismatches == 0);
  }

  if (const long on = p.integer("oracle_n"); on > 0) {
    // Independent fine-step EM run on a disjoint stream range.
    SimOptions o = opt;
    o.kernel = Kernel::EM;
    o.em.dt_max = p.real("oracle_dt_max");
    o.first_stream = static_cast<std::uint64_t>(n);
    const ExitBatch ob = simulate_exits(d, start, on, o);
    if (raw) append_raw(out.raw, ob, p.integer("max_steps"));
    const auto vertical = [](const ExitRecord& r) { return r.label == Label::S1 || r.label == Label::S3; };
    const HarmonicMeasure main_v = harmonic_measure_from(batch, vertical);
    const HarmonicMeasure oracle_v = harmonic_measure_from(ob, vertical);
    const double tol = 3 * std::hypot(main_v.estimate.std_err, oracle_v.estimate.std_err);
    out.results["vertical_sides"] = {{"main", harmonic_json(main_v)}, {"oracle", harmonic_json(oracle_v)}};
    out.excluded += ob.excluded();
    out.expect.add("oracle_agreement", std::abs(main_v.estimate.value - oracle_v.estimate.value) <= tol,
                   {{"tolerance", num(tol)}});
  }
}

void run_comb(const Params& p, const SimOptions& opt, Outcome& out) {
  std::vector<Domain> domains;
  Json names = Json::array();
  for (double k : p.list("iterations")) {
    const int n = static_cast<int>(k);
    CombPair pair = build_comb(n, default_comb_heights(n), default_comb_offsets(n));
    domains.push_back(p.text("side") == "V" ? pair.V : pair.W);
    names.push_back(domains.back().describe());
  }
  const std::vector<double> thresholds = p.has("thresholds") ? p.list("thresholds") : std::vector<double>{};
  const IncreasingReport r = verify_increasing_domains(domains, p.cplx("start"), p.real("p"), p.integer("n"), opt,
                                                       thresholds, p.real("box"));
  Json moments = Json::array();
  for (const auto& m : r.estimates) {
    out.excluded += m.excluded;
    moments.push_back({{"estimate", est(m.estimate)}, {"verdict", to_string(m.verdict)}, {"excluded", m.excluded}});
  }
  out.results["domains"] = std::move(names);
  out.results["moments"] = std::move(moments);
  out.results["nondecreasing"] = r.nondecreasing;
  out.results["strictly_increasing"] = r.strictly_increasing;
  out.expect.add("increasing_beyond_joint_ci", r.strictly_increasing);
  if (!thresholds.empty()) out.expect.add("exceeds_thresholds", r.exceeds_thresholds);
}

// Angle of the image exit point after normalizing its law to uniform on
// (-pi, pi]: a Mobius map for disks, arctan of the Cauchy variable for the
// upper half-plane.
double uniformizing_angle(const Domain& image, CPoint w0, CPoint w) {
  if (const auto* disk = image.as<shape::Disk>()) {
    const CPoint s = (w0 - disk->center) / disk->radius, z = (w - disk->center) / disk->radius;
    return std::arg((z - s) / (1.0 - std::conj(s) * z));
  }
  return 2 * std::atan((w.real() - w0.real()) / w0.imag());
}

void run_pushforward(const Params& p, const SimOptions& opt, bool raw, Outcome& out) {
  const Domain d = p.domain("domain"), image = p.domain("image_domain");
  const AnalyticMap f = p.map("map");
  const CPoint start = p.cplx("start"), w0 = eval(f, start);
  if (!contains(image, w0)) throw BadParameters("map(start) is not inside the image domain");
  const long n = p.integer("n");
  const int bins = static_cast<int>(p.integer("bins"));
  const double image_tol = p.real("image_tol");

  struct One {
    bool valid = false;
    CPoint exit;
    double clock = 0;
    double source_time = 0;
    long steps = 0;
    Label label = Label::Generic;
  };
  std::vector<One> res(static_cast<std::size_t>(n));
  parallel_for(res.size(), opt.workers, [&](std::size_t i) {
    RngStream rng(opt.seed, opt.first_stream + i);
    try {
      const PathSample path = em_path(d, start, opt.em, rng);
      const PathSample img = pushforward(f, path, &image);
      res[i] = {true, img.terminal.exit_point, img.times.back(), path.times.back(), path.terminal.steps,
                img.terminal.label};
    } catch (const MaxStepsExceeded&) {
      res[i] = {};
    }
  });

  std::vector<long> counts(static_cast<std::size_t>(bins), 0);
  long valid = 0;
  double worst = 0;
  for (std::size_t i = 0; i < res.size(); ++i) {
    const One& o = res[i];
    if (raw) {
      RawRow r;
      r.path_id = opt.first_stream + i;
      if (o.valid) {
        r.exit_point = o.exit;
        r.exit_time = o.clock;
        r.label = std::string(to_string(o.label));
        r.steps = o.steps;
        r.status = "ok";
      } else {
        r.steps = opt.em.max_steps;
        r.status = "max_steps";
      }
      out.raw.push_back(std::move(r));
    }
    if (!o.valid) {
      ++out.excluded;
      continue;
    }
    ++valid;
    worst = std::max(worst, boundary_distance(image, o.exit));
    const double u = (uniformizing_angle(image, w0, o.exit) + std::numbers::pi) / (2 * std::numbers::pi);
    counts[static_cast<std::size_t>(std::clamp(static_cast<int>(u * bins), 0, bins - 1))]++;
  }
  if (valid == 0) throw BadParameters("no valid paths");
  const double expected = static_cast<double>(valid) / bins;
  double chi2 = 0;
  for (long c : counts) chi2 += (c - expected) * (c - expected) / expected;
  const double pval = boost::math::cdf(boost::math::complement(boost::math::chi_squared(bins - 1), chi2));

  out.results["image_start"] = cnum(w0);
  out.results["valid"] = valid;
  out.results["chi_square"] = num(chi2);
  out.results["degrees_of_freedom"] = bins - 1;
  out.results["p_value"] = num(pval);
  out.results["max_image_boundary_distance"] = num(worst);
  out.expect.add("exit_law", pval > p.real("min_p_value"), {{"min_p_value", num(p.real("min_p_value"))}});
  out.expect.add("exits_on_image_boundary", worst <= image_tol, {{"tolerance", num(image_tol)}});
}

Json config_echo(const ResolvedScenario& s) {
  Json c = Json::object();
  for (const auto& [k, v] : s.values) c[k] = v;
  return c;
}

}  // namespace

const char* version() { return BMX_VERSION; }

ScenarioResult run_scenario(const ResolvedScenario& s, const RunOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const Params p(s.values);
  const int workers = opt.workers ? *opt.workers : static_cast<int>(p.integer("workers"));
  Outcome out;
  ScenarioResult result;
  result.name = s.name;
  std::string error;
  try {
    const std::string& e = s.experiment;
    if (e == "harmonic_measure") run_harmonic(p, sim_options(p, workers), opt.raw, out);
    else if (e == "moment") run_moment(p, sim_options(p, workers), opt.raw, out);
    else if (e == "hardy") run_hardy(p, out);
    else if (e == "karafyllia") run_karafyllia(p, sim_options(p, workers), out);
    else if (e == "cauchy") run_cauchy(p, workers, out);
    else if (e == "modulus") run_modulus(p, sim_options(p, workers), opt.raw, out);
    else if (e == "comb_sequence") run_comb(p, sim_options(p, workers), out);
    else if (e == "pushforward_check") run_pushforward(p, sim_options(p, workers), opt.raw, out);
    else throw ConfigError("unknown experiment '" + e + "'");
  } catch (const std::exception& ex) {
    error = ex.what();
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  result.error = !error.empty();
  result.pass = !result.error && out.expect.pass();
  Json report;
  report["schema"] = 1;
  report["version"] = version();
  report["scenario"] = s.name;
  report["experiment"] = s.experiment;
  report["config"] = config_echo(s);
  report["results"] = std::move(out.results);
  report["expectations"] = out.expect.json();
  report["excluded"] = out.excluded;
  report["error"] = result.error ? Json(error) : Json(nullptr);
  report["pass"] = result.pass;
  report["timing"] = {{"wall_seconds", wall}, {"workers", workers}};
  result.report_json = report.dump(2) + "\n";
  result.raw = std::move(out.raw);
  return result;
}

std::string raw_csv(const std::string& scenario, const std::vector<RawRow>& rows) {
  std::string out = "scenario,path_id,exit_re,exit_im,exit_time,label,steps,status\n";
  for (const auto& r : rows) {
    out += scenario + "," + std::to_string(r.path_id) + ",";
    out += (r.exit_point ? format_number(r.exit_point->real()) : "") + ",";
    out += (r.exit_point ? format_number(r.exit_point->imag()) : "") + ",";
    out += (r.exit_time ? format_number(*r.exit_time) : "") + ",";
    out += r.label + "," + std::to_string(r.steps) + "," + r.status + "\n";
  }
  return out;
}

}  // namespace bmx::cli
