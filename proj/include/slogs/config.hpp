#pragma once
// Experiment configuration.  The on-disk format is a flat INI dialect:
// [section] headers, key = value lines, '#'/';' comments (full-line, or
// inline after whitespace).  Line numbers ride along for diagnostics, so a
// bad value reports file, line, section, and key.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "flows.hpp"
#include "noise.hpp"
#include "schemes.hpp"

namespace slogs {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class IniFile {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static IniFile parse(std::istream& in, std::string source = "<stream>") {
    IniFile ini;
    ini.source_ = std::move(source);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      strip_comment(line);
      const std::string text = trim(line);
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']' || text.size() < 3)
          ini.fail(lineno, "malformed section header '" + text + "'");
        section = trim(text.substr(1, text.size() - 2));
        if (section.empty()) ini.fail(lineno, "empty section name");
        ini.sections_[section];  // a section may legally stay empty
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos)
        ini.fail(lineno, "expected 'key = value', got '" + text + "'");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) ini.fail(lineno, "empty key before '='");
      if (value.empty()) ini.fail(lineno, "empty value for key '" + key + "'");
      if (section.empty())
        ini.fail(lineno, "key '" + key + "' appears before any [section]");
      auto [it, fresh] = ini.sections_[section].try_emplace(key, Entry{value, lineno});
      if (!fresh)
        ini.fail(lineno, "duplicate key '" + key + "' in [" + section +
                             "] (first at line " + std::to_string(it->second.line) + ")");
    }
    return ini;
  }

  static IniFile parse_string(const std::string& text,
                              std::string source = "<string>") {
    std::istringstream is(text);
    return parse(is, std::move(source));
  }

  static IniFile parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse(in, path);
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const std::string& get(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end())
      throw ConfigError(source_ + ": missing section [" + section + "]");
    auto k = s->second.find(key);
    if (k == s->second.end())
      throw ConfigError(source_ + ": missing key '" + key + "' in [" + section + "]");
    touched_.insert(section + "." + key);
    return k->second.value;
  }

  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const {
    return has(section, key) ? get(section, key) : fallback;
  }

  double get_double(const std::string& section, const std::string& key) const {
    return to_double(section, key, get(section, key));
  }
  double get_double_or(const std::string& section, const std::string& key,
                       double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long long get_int(const std::string& section, const std::string& key) const {
    const std::string& v = get(section, key);
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != v.size())
      fail(line_of(section, key), "value '" + v + "' for key [" + section + "] " +
                                      key + " is not an integer");
    return out;
  }
  long long get_int_or(const std::string& section, const std::string& key,
                       long long fallback) const {
    return has(section, key) ? get_int(section, key) : fallback;
  }

  bool get_bool(const std::string& section, const std::string& key) const {
    std::string v = get(section, key);
    for (char& c : v) c = char(std::tolower(static_cast<unsigned char>(c)));
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    fail(line_of(section, key),
         "value '" + v + "' for key [" + section + "] " + key + " is not a boolean");
  }
  bool get_bool_or(const std::string& section, const std::string& key,
                   bool fallback) const {
    return has(section, key) ? get_bool(section, key) : fallback;
  }

  // Keys never fetched through get(); surfaced as typo warnings.
  std::vector<std::string> unused_keys() const {
    std::vector<std::string> out;
    for (const auto& [sec, entries] : sections_)
      for (const auto& [key, entry] : entries)
        if (!touched_.count(sec + "." + key))
          out.push_back("[" + sec + "] " + key + " (line " +
                        std::to_string(entry.line) + ")");
    return out;
  }

  const std::string& source() const { return source_; }

 private:
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  // '#'/';' start a comment at line start or after whitespace, so values like
  // "a#b" survive untouched.
  static void strip_comment(std::string& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') &&
          (i == 0 || std::isspace(static_cast<unsigned char>(line[i - 1])))) {
        line.resize(i);
        return;
      }
    }
  }

  double to_double(const std::string& section, const std::string& key,
                   const std::string& v) const {
    std::size_t used = 0;
    double out = 0.0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = std::string::npos;
    }
    if (used != v.size())
      fail(line_of(section, key),
           "value '" + v + "' for key [" + section + "] " + key + " is not a number");
    return out;
  }

  int line_of(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return 0;
    auto k = s->second.find(key);
    return k == s->second.end() ? 0 : k->second.line;
  }

  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string source_ = "<none>";
  mutable std::set<std::string> touched_;
};

// ---- typed experiment description ----

enum class ExperimentKind {
  StrongOrder,
  RegularizationError,
  EntropyConvergence,
  EnergyGap,
  MassLaw,
  SymplecticCheck,
  AssumptionAudit,
};

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::StrongOrder: return "strong_order";
    case ExperimentKind::RegularizationError: return "regularization_error";
    case ExperimentKind::EntropyConvergence: return "entropy_convergence";
    case ExperimentKind::EnergyGap: return "energy_gap";
    case ExperimentKind::MassLaw: return "mass_law";
    case ExperimentKind::SymplecticCheck: return "symplectic_check";
    default: return "assumption_audit";
  }
}

enum class InitKind { GaussianBump, PlaneWave, TwoBump };

struct InitialCondition {
  InitKind kind = InitKind::GaussianBump;
  double amplitude = 1.0;
  double width = 1.0;    // gaussian std deviation
  double center = 0.0;
  double momentum = 0.0;  // phase e^{ikx}; rounded to a lattice mode for plane waves
  double center2 = 2.0;
  double phase2 = 0.0;

  Field build(const GridPtr& g) const {
    Field u(g);
    switch (kind) {
      case InitKind::GaussianBump:
        for (std::size_t j = 0; j < g->size(); ++j) {
          const double x = g->point(j);
          const double env =
              amplitude * std::exp(-(x - center) * (x - center) / (2.0 * width * width));
          u[j] = env * std::polar(1.0, momentum * x);
        }
        break;
      case InitKind::PlaneWave: {
        const double k =
            2.0 * std::numbers::pi / g->length() * double(std::llround(momentum));
        for (std::size_t j = 0; j < g->size(); ++j)
          u[j] = amplitude * std::polar(1.0, k * g->point(j));
        break;
      }
      case InitKind::TwoBump:
        for (std::size_t j = 0; j < g->size(); ++j) {
          const double x = g->point(j);
          const double e1 =
              std::exp(-(x - center) * (x - center) / (2.0 * width * width));
          const double e2 =
              std::exp(-(x - center2) * (x - center2) / (2.0 * width * width));
          u[j] = amplitude * (cx(e1, 0.0) + std::polar(e2, phase2)) *
                 std::polar(1.0, momentum * x);
        }
        break;
    }
    return u;
  }
};

struct ToleranceBlock {
  double slope_min = 0.35;
  double slope_max = 0.65;
  double mass_rel = 1e-12;       // pathwise / deterministic residual band
  double symplectic_rel = 1e-8;  // 2-form drift band
  double sigma = 3.0;            // mean-law band in standard errors
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::MassLaw;

  std::size_t n = 256;
  double length = 16.0 * std::numbers::pi;
  double T = 0.5;
  std::size_t paths = 200;
  std::uint64_t seed = 2024;
  double alpha = 0.75;
  int threads = 1;
  bool sup_error = false;  // sup over shared step times instead of terminal error

  SchemeConfig scheme;  // scheme.tau is the working step where no tau ladder applies

  NoiseFlavor flavor = NoiseFlavor::ComplexH;
  std::size_t modes = 8;
  double decay = 4.0;
  double amplitude = 1.0;
  bool noise_strict = false;

  InitialCondition init;

  std::vector<double> tau_ladder;  // descending, ratio 2
  std::vector<double> eps_ladder;  // descending, ratio 2
  ToleranceBlock tol;

  GridPtr make_grid() const { return Grid::make(n, length); }
  NoiseModelPtr make_noise() const {
    return build_noise(make_grid(), modes, decay, amplitude, flavor, noise_strict);
  }
};

namespace detail {

template <typename T>
T pick(const IniFile& ini, const std::string& section, const std::string& key,
       const std::vector<std::pair<std::string, T>>& table) {
  const std::string v = ini.get(section, key);
  for (const auto& [name, val] : table)
    if (v == name) return val;
  std::string valid;
  for (const auto& [name, val] : table) {
    if (!valid.empty()) valid += ", ";
    valid += name;
  }
  throw ConfigError(ini.source() + ": unknown value '" + v + "' for [" + section +
                    "] " + key + "; valid: " + valid);
}

inline std::vector<double> ladder(double top, std::size_t count) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(top * std::ldexp(1.0, -int(i)));
  return out;
}

}  // namespace detail

inline ExperimentSpec parse_experiment(const IniFile& ini) {
  ExperimentSpec s;
  s.kind = detail::pick<ExperimentKind>(
      ini, "experiment", "kind",
      {{"strong_order", ExperimentKind::StrongOrder},
       {"regularization_error", ExperimentKind::RegularizationError},
       {"entropy_convergence", ExperimentKind::EntropyConvergence},
       {"energy_gap", ExperimentKind::EnergyGap},
       {"mass_law", ExperimentKind::MassLaw},
       {"symplectic_check", ExperimentKind::SymplecticCheck},
       {"assumption_audit", ExperimentKind::AssumptionAudit}});
  s.T = ini.get_double_or("experiment", "T", s.T);
  s.paths = std::size_t(ini.get_int_or("experiment", "paths", 200));
  s.seed = std::uint64_t(ini.get_int_or("experiment", "seed", 2024));
  s.alpha = ini.get_double_or("experiment", "alpha", s.alpha);
  s.threads = int(ini.get_int_or("experiment", "threads", 1));
  s.sup_error = ini.get_bool_or("experiment", "sup_error", false);

  s.n = std::size_t(ini.get_int_or("grid", "n", 256));
  s.length = ini.get_double_or("grid", "length", s.length);

  if (ini.has("scheme", "id"))
    s.scheme.id = detail::pick<SchemeId>(
        ini, "scheme", "id",
        {{"lie_add", SchemeId::LieAdd},
         {"lie_mul_exp", SchemeId::LieMulExp},
         {"lie_conservative", SchemeId::LieConservative},
         {"midpoint_split", SchemeId::MidpointSplit},
         {"crank_nicolson_split", SchemeId::CrankNicolsonSplit}});
  s.scheme.lambda = ini.get_double_or("scheme", "lambda", -1.0);
  s.scheme.reg = RegFamily(ini.get_double_or("scheme", "epsilon", 1e-3));
  if (ini.has("scheme", "coupling"))
    s.scheme.coupling = detail::pick<Coupling>(
        ini, "scheme", "coupling",
        {{"additive", Coupling::Additive},
         {"multiplicative", Coupling::Multiplicative}});
  if (ini.has("scheme", "g")) {
    const auto kind = detail::pick<GKind>(ini, "scheme", "g",
                                          {{"one", GKind::One},
                                           {"constant", GKind::Constant},
                                           {"rational_inv", GKind::RationalInv},
                                           {"saturating", GKind::Saturating},
                                           {"saturating_sq", GKind::SaturatingSq}});
    const double a = ini.get_double_or("scheme", "g_a", 1.0);
    const double b = ini.get_double_or("scheme", "g_b", 1.0);
    const double c = ini.get_double_or("scheme", "g_c", 1.0);
    switch (kind) {
      case GKind::One: s.scheme.g = DiffusionG::one(); break;
      case GKind::Constant: s.scheme.g = DiffusionG::constant(a); break;
      case GKind::RationalInv: s.scheme.g = DiffusionG::rational_inv(a, b); break;
      case GKind::Saturating: s.scheme.g = DiffusionG::saturating(a, b, c); break;
      case GKind::SaturatingSq: s.scheme.g = DiffusionG::saturating_sq(a, b, c); break;
    }
  }
  s.scheme.tau = ini.get_double_or("scheme", "tau", 1.0 / 64.0);
  s.scheme.fp_tol = ini.get_double_or("scheme", "fp_tol", 1e-11);
  s.scheme.max_iter = std::size_t(ini.get_int_or("scheme", "max_iter", 50));
  s.scheme.m_sub = std::size_t(ini.get_int_or("scheme", "m_sub", 8));
  if (ini.has("scheme", "weighting"))
    s.scheme.weighting = detail::pick<ConvWeighting>(
        ini, "scheme", "weighting",
        {{"substep", ConvWeighting::Substep}, {"endpoint", ConvWeighting::Endpoint}});
  s.scheme.c0 = ini.get_double_or("scheme", "c0", 0.0);
  s.scheme.strict = ini.get_bool_or("scheme", "strict", false);
  s.scheme.allow_euler_substep =
      ini.get_bool_or("scheme", "allow_euler_substep", true);

  if (ini.has("noise", "flavor"))
    s.flavor = detail::pick<NoiseFlavor>(ini, "noise", "flavor",
                                         {{"none", NoiseFlavor::None},
                                          {"complex_h", NoiseFlavor::ComplexH},
                                          {"real_l2", NoiseFlavor::RealL2}});
  s.modes = std::size_t(ini.get_int_or("noise", "modes", 8));
  s.decay = ini.get_double_or("noise", "decay", 4.0);
  s.amplitude = ini.get_double_or("noise", "amplitude", 1.0);
  s.noise_strict = ini.get_bool_or("noise", "strict", false);

  if (ini.has("initial", "kind"))
    s.init.kind = detail::pick<InitKind>(ini, "initial", "kind",
                                         {{"gaussian_bump", InitKind::GaussianBump},
                                          {"plane_wave", InitKind::PlaneWave},
                                          {"two_bump", InitKind::TwoBump}});
  s.init.amplitude = ini.get_double_or("initial", "amplitude", 1.0);
  s.init.width = ini.get_double_or("initial", "width", 1.0);
  s.init.center = ini.get_double_or("initial", "center", 0.0);
  s.init.momentum = ini.get_double_or("initial", "momentum", 0.0);
  s.init.center2 = ini.get_double_or("initial", "center2", 2.0);
  s.init.phase2 = ini.get_double_or("initial", "phase2", 0.0);

  if (ini.has("ladder", "tau_max"))
    s.tau_ladder = detail::ladder(ini.get_double("ladder", "tau_max"),
                                  std::size_t(ini.get_int_or("ladder", "tau_count", 4)));
  if (ini.has("ladder", "eps_max"))
    s.eps_ladder = detail::ladder(ini.get_double("ladder", "eps_max"),
                                  std::size_t(ini.get_int_or("ladder", "eps_count", 4)));

  s.tol.slope_min = ini.get_double_or("tolerance", "slope_min", s.tol.slope_min);
  s.tol.slope_max = ini.get_double_or("tolerance", "slope_max", s.tol.slope_max);
  s.tol.mass_rel = ini.get_double_or("tolerance", "mass_rel", s.tol.mass_rel);
  s.tol.symplectic_rel =
      ini.get_double_or("tolerance", "symplectic_rel", s.tol.symplectic_rel);
  s.tol.sigma = ini.get_double_or("tolerance", "sigma", s.tol.sigma);
  return s;
}

// Structural checks that don't need to run anything.
inline void validate_spec(const ExperimentSpec& s) {
  if (!(s.T > 0.0)) throw ConfigError("experiment horizon T must be > 0");
  if (s.paths < 1) throw ConfigError("path count must be >= 1");
  const bool statistical = s.kind == ExperimentKind::StrongOrder ||
                           s.kind == ExperimentKind::RegularizationError ||
                           s.kind == ExperimentKind::EntropyConvergence ||
                           s.kind == ExperimentKind::EnergyGap ||
                           s.kind == ExperimentKind::MassLaw;
  if (statistical && s.amplitude > 0.0 && s.flavor != NoiseFlavor::None &&
      s.paths < 100)
    throw ConfigError("statistical experiments need at least 100 paths (got " +
                      std::to_string(s.paths) + ")");
  auto check_ladder = [](const std::vector<double>& xs, const char* name) {
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
      if (std::abs(xs[i] / xs[i + 1] - 2.0) > 1e-9)
        throw ConfigError(std::string(name) + " ladder must be geometric with ratio 2");
  };
  check_ladder(s.tau_ladder, "tau");
  check_ladder(s.eps_ladder, "eps");
  switch (s.kind) {
    case ExperimentKind::StrongOrder:
      if (s.tau_ladder.empty())
        throw ConfigError("strong_order needs [ladder] tau_max / tau_count");
      break;
    case ExperimentKind::RegularizationError:
      if (s.eps_ladder.size() < 2)
        throw ConfigError("regularization_error needs an eps ladder with >= 2 points");
      break;
    case ExperimentKind::EntropyConvergence:
    case ExperimentKind::EnergyGap:
      if (s.eps_ladder.size() < 2 && s.tau_ladder.empty())
        throw ConfigError(std::string(to_string(s.kind)) +
                          " needs an eps ladder (>= 2 points) or a tau ladder");
      break;
    case ExperimentKind::AssumptionAudit:
      if (s.eps_ladder.empty())
        throw ConfigError("assumption_audit needs [ladder] eps_max / eps_count");
      break;
    default: break;  // mass_law / symplectic_check run at scheme.tau
  }
}

}  // namespace slogs
