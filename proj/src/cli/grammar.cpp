#include <cctype>
#include <cmath>
#include <numbers>

#include "bmx/cli.hpp"
#include "bmx/errors.hpp"

namespace bmx::cli {
namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : s_(text) {}

  CPoint parse() {
    const CPoint v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("in expression '" + std::string(s_) + "': " + msg);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  CPoint expr() {
    CPoint v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }

  CPoint term() {
    CPoint v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }

  CPoint unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return power();
  }

  CPoint power() {
    const CPoint base = primary();
    if (!eat('^')) return base;
    const CPoint ex = unary();
    if (base.imag() == 0 && ex.imag() == 0 && (base.real() >= 0 || ex.real() == std::round(ex.real())))
      return std::pow(base.real(), ex.real());
    return principal_power(base, ex);
  }

  CPoint primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      const CPoint v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  CPoint number() {
    const char* begin = s_.data() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    if (pos_ < s_.size() && s_[pos_] == 'i' &&
        (pos_ + 1 == s_.size() || !std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])))) {
      ++pos_;
      return {0, v};
    }
    return {v, 0};
  }

  CPoint identifier() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    const std::string name(s_.substr(start, pos_ - start));
    if (eat('(')) {
      const CPoint x = expr();
      if (!eat(')')) fail("missing ')' after " + name);
      return call(name, x);
    }
    if (name == "pi") return std::numbers::pi;
    if (name == "e") return std::numbers::e;
    if (name == "i") return {0, 1};
    if (name == "inf") return std::numeric_limits<double>::infinity();
    fail("unknown name '" + name + "'");
  }

  CPoint call(const std::string& f, CPoint x) {
    const bool real = x.imag() == 0;
    if (f == "exp") return real ? CPoint(std::exp(x.real())) : std::exp(x);
    if (f == "log") return real && x.real() > 0 ? CPoint(std::log(x.real())) : log_transfer(x);
    if (f == "sqrt") return real && x.real() >= 0 ? CPoint(std::sqrt(x.real())) : principal_power(x, 0.5);
    if (f == "sin") return real ? CPoint(std::sin(x.real())) : std::sin(x);
    if (f == "cos") return real ? CPoint(std::cos(x.real())) : std::cos(x);
    if (f == "tan") return real ? CPoint(std::tan(x.real())) : std::tan(x);
    if (f == "atan") return real ? CPoint(std::atan(x.real())) : std::atan(x);
    if (f == "cosh") return real ? CPoint(std::cosh(x.real())) : std::cosh(x);
    if (f == "sinh") return real ? CPoint(std::sinh(x.real())) : std::sinh(x);
    if (f == "abs") return std::abs(x);
    if (f == "re") return x.real();
    if (f == "im") return x.imag();
    fail("unknown function '" + f + "'");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

// Splits "name(args)" into the name and its argument list.
std::pair<std::string, std::vector<std::string>> call_form(std::string_view text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos) return {t, {}};
  if (t.back() != ')') throw ConfigError("missing ')' in '" + t + "'");
  return {trim(t.substr(0, open)), split_top_level(std::string_view(t).substr(open + 1, t.size() - open - 2))};
}

void expect_args(const std::string& name, const std::vector<std::string>& args, std::size_t lo, std::size_t hi) {
  if (args.size() < lo || args.size() > hi)
    throw ConfigError("'" + name + "' takes " + std::to_string(lo) + (lo == hi ? "" : "-" + std::to_string(hi)) +
                      " arguments, got " + std::to_string(args.size()));
}

int eval_int(std::string_view text) {
  const double v = eval_real(text);
  if (v != std::round(v) || std::abs(v) > 1e9) throw ConfigError("expected an integer, got '" + std::string(text) + "'");
  return static_cast<int>(v);
}

Domain build_domain(std::string_view text) {
  const auto [name, args] = call_form(text);
  if (name == "rectangle") {
    expect_args(name, args, 2, 2);
    return Domain::rectangle(eval_real(args[0]), eval_real(args[1]));
  }
  if (name == "annulus") {
    expect_args(name, args, 2, 2);
    return Domain::annulus(eval_real(args[0]), eval_real(args[1]));
  }
  if (name == "wedge") {
    expect_args(name, args, 1, 1);
    return Domain::wedge(eval_real(args[0]));
  }
  if (name == "halfplane") {
    expect_args(name, args, 1, 1);
    static const std::map<std::string, shape::Axis> axes{
        {"up", shape::Axis::Up}, {"down", shape::Axis::Down}, {"left", shape::Axis::Left}, {"right", shape::Axis::Right}};
    const auto it = axes.find(args[0]);
    if (it == axes.end()) throw ConfigError("halfplane direction must be up, down, left or right");
    return Domain::half_plane(it->second);
  }
  if (name == "strip") {
    expect_args(name, args, 2, 2);
    return Domain::strip(eval_real(args[0]), eval_real(args[1]));
  }
  if (name == "halfstrip_complement") {
    expect_args(name, args, 1, 2);
    return Domain::half_strip_complement(eval_real(args[0]), args.size() > 1 ? eval_real(args[1]) : 0.0);
  }
  if (name == "parabola_complement") {
    expect_args(name, args, 0, 0);
    return Domain::parabola_complement();
  }
  if (name == "koebe") {
    expect_args(name, args, 0, 0);
    return Domain::koebe_slit();
  }
  if (name == "comb") {
    if (args.size() < 2) throw ConfigError("comb takes a side and an iteration count");
    if (args[0] != "V" && args[0] != "W") throw ConfigError("comb side must be V or W");
    const auto side = args[0] == "V" ? shape::CombSide::V : shape::CombSide::W;
    const int n = eval_int(args[1]);
    if (n < 0) throw ConfigError("comb iteration count must be >= 0");
    if (args.size() == 2) return Domain::comb(n, default_comb_heights(n), default_comb_offsets(n), side);
    expect_args(name, args, 2 * n + 3, 2 * n + 3);
    std::vector<double> a, b;
    for (int k = 0; k <= n; ++k) a.push_back(eval_real(args[2 + k]));
    for (int k = 0; k < n; ++k) b.push_back(eval_real(args[3 + n + k]));
    return Domain::comb(n, a, b, side);
  }
  if (name == "spiral") {
    expect_args(name, args, 1, 1);
    if (args[0] == "U") return Domain::spiral(shape::SpiralSide::U);
    if (args[0] == "complement") return Domain::spiral(shape::SpiralSide::Complement);
    throw ConfigError("spiral side must be U or complement");
  }
  if (name == "disk") {
    expect_args(name, args, 3, 3);
    return Domain::disk({eval_real(args[0]), eval_real(args[1])}, eval_real(args[2]));
  }
  if (name == "exp_preimage") {
    expect_args(name, args, 1, 1);
    return Domain::exp_preimage(build_domain(args[0]));
  }
  throw ConfigError("unknown domain '" + name + "'");
}

CPoint complex_args(const std::vector<std::string>& args) {
  return args.size() == 1 ? eval_complex(args[0]) : CPoint(eval_real(args[0]), eval_real(args[1]));
}

AnalyticMap build_map(std::string_view text) {
  const auto [name, args] = call_form(text);
  if (name == "linear") {
    expect_args(name, args, 1, 2);
    return AnalyticMap::linear(complex_args(args));
  }
  if (name == "power_int") {
    expect_args(name, args, 1, 3);
    if (args.size() == 2) throw ConfigError("power_int takes n or n, re, im");
    return AnalyticMap::power_int(eval_int(args[0]),
                                  args.size() == 3 ? CPoint(eval_real(args[1]), eval_real(args[2])) : CPoint(1.0));
  }
  if (name == "power_branch") {
    expect_args(name, args, 1, 1);
    return AnalyticMap::power_branch(eval_real(args[0]));
  }
  if (name == "mobius") {
    expect_args(name, args, 1, 2);
    return AnalyticMap::mobius(complex_args(args));
  }
  if (name == "koebe_parabola") {
    expect_args(name, args, 0, 0);
    return AnalyticMap::koebe_parabola();
  }
  if (name == "wedge_power") {
    expect_args(name, args, 1, 1);
    return AnalyticMap::wedge_power(eval_real(args[0]));
  }
  if (name == "exp") {
    expect_args(name, args, 0, 0);
    return AnalyticMap::exp();
  }
  if (name == "compose") {
    if (args.empty()) throw ConfigError("compose needs at least one map");
    std::vector<AnalyticMap> parts;
    for (const auto& a : args) parts.push_back(build_map(a));
    return AnalyticMap::compose(std::move(parts));
  }
  throw ConfigError("unknown map '" + name + "'");
}

// Library constructors report invalid parameters as BadParameters; in a
// config they are configuration errors.
template <class F>
auto as_config_error(std::string_view text, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError("'" + std::string(text) + "': " + e.what());
  }
}

}  // namespace

std::vector<std::string> split_top_level(std::string_view text) {
  std::vector<std::string> out;
  if (trim(text).empty()) return out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(text.substr(start, i - start)));
      start = i + 1;
    }
    if (depth < 0) throw ConfigError("unbalanced brackets in '" + std::string(text) + "'");
  }
  if (depth != 0) throw ConfigError("unbalanced brackets in '" + std::string(text) + "'");
  out.push_back(trim(text.substr(start)));
  for (const auto& s : out)
    if (s.empty()) throw ConfigError("empty item in '" + std::string(text) + "'");
  return out;
}

CPoint eval_complex(std::string_view text) { return ExprParser(text).parse(); }

double eval_real(std::string_view text) {
  const CPoint v = eval_complex(text);
  if (v.imag() != 0) throw ConfigError("expected a real value, got '" + std::string(text) + "'");
  return v.real();
}

std::vector<double> eval_real_list(std::string_view text) {
  std::vector<double> out;
  for (const auto& item : split_top_level(text)) {
    const auto [name, args] = call_form(item);
    if ((name == "logspace" || name == "linspace") && args.size() == 3) {
      const double lo = eval_real(args[0]), hi = eval_real(args[1]);
      const int n = eval_int(args[2]);
      if (n < 2) throw ConfigError(name + " needs at least 2 points");
      if (name == "logspace" && !(lo > 0 && hi > 0)) throw ConfigError("logspace bounds must be positive");
      for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / (n - 1);
        out.push_back(name == "logspace" ? lo * std::pow(hi / lo, t) : lo + (hi - lo) * t);
      }
      out.back() = hi;
    } else {
      out.push_back(eval_real(item));
    }
  }
  return out;
}

Domain parse_domain(std::string_view text) {
  return as_config_error(text, [&] { return build_domain(text); });
}

AnalyticMap parse_map(std::string_view text) {
  return as_config_error(text, [&] { return build_map(text); });
}

}  // namespace bmx::cli
