#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "saddle.hpp"

namespace fluxctl {

enum class ProfileKind { constant, indicator, gaussian_mixture, sine, file };

/// A scalar profile on [0, b], described by parameters rather than values
/// so configs stay grid independent.
///
///   constant          background
///   indicator         height on [lo, hi], background elsewhere
///   gaussian_mixture  background + sum_k amplitudes[k] exp(-rates[k] (x - centers[k])^2)
///   sine              background + amplitude sin(2 pi frequency x / b)
///   file              values read from a two-column csv (x,value), one row per node
struct ProfileSpec {
  ProfileKind kind = ProfileKind::constant;
  double lo = 0.0;
  double hi = 0.0;
  double height = 0.0;
  double background = 0.0;
  std::vector<double> centers;
  std::vector<double> amplitudes;
  std::vector<double> rates;
  double amplitude = 0.0;
  double frequency = 1.0;
  std::string path;

  /// Analytic profiles only; `file` has no closed form.
  double operator()(double x, double length) const
  {
    switch (kind) {
      case ProfileKind::constant: return background;
      case ProfileKind::indicator: return (x >= lo && x <= hi) ? height : background;
      case ProfileKind::gaussian_mixture: {
        double v = background;
        for (std::size_t k = 0; k < centers.size(); ++k)
          v += amplitudes[k] * std::exp(-rates[k] * (x - centers[k]) * (x - centers[k]));
        return v;
      }
      case ProfileKind::sine: return background + amplitude * std::sin(2.0 * M_PI * frequency * x / length);
      case ProfileKind::file: break;
    }
    throw DomainError("file profile has no closed form");
  }

  bool analytic() const noexcept { return kind != ProfileKind::file; }

  std::vector<double> sample(Grid const& grid, std::filesystem::path const& base_dir = {}) const
  {
    if (kind != ProfileKind::file) {
      std::vector<double> v(grid.nx());
      for (int i = 0; i < grid.nx(); ++i) v[i] = (*this)(grid.x(i), grid.length());
      return v;
    }
    std::filesystem::path p(path);
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) throw IoError("cannot open profile file " + p.string());
    std::string line;
    std::getline(in, line);
    std::vector<double> v;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto comma = line.find(',');
      double value = 0.0;
      std::string_view tail = comma == std::string::npos ? std::string_view(line) : std::string_view(line).substr(comma + 1);
      auto [ptr, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), value);
      if (ec != std::errc{}) throw IoError("malformed value in profile file " + p.string());
      v.push_back(value);
    }
    if (static_cast<int>(v.size()) != grid.nx())
      throw IoError("profile file " + p.string() + " has " + std::to_string(v.size()) + " rows, grid has " +
                    std::to_string(grid.nx()));
    return v;
  }

  friend bool operator==(ProfileSpec const&, ProfileSpec const&) = default;
};

enum class ReferenceKind { none, burgers_exact, traffic_exact, fine };

struct RunConfig {
  // [problem]
  std::string flux = "burgers";
  std::string entropy = "quadratic";
  double beta = 0.0;
  std::optional<double> c;  // defaults to max(0.5, lipschitz/2)
  double domain_length = 4.0;
  std::optional<double> box_lo;
  std::optional<double> box_hi;
  std::vector<double> flux_nodes;  // flux = tabulated
  std::vector<double> flux_values;
  std::vector<double> flux_slopes;
  // [grid]
  int nx = 100;
  int nt = 50;
  // [initial]
  ProfileSpec initial;
  // [potential]; several alphas make a sweep
  PotentialKind potential = PotentialKind::zero;
  std::vector<double> alphas = {0.0};
  // [terminal]
  TerminalKind terminal = TerminalKind::zero;
  double mu = 0.0;
  ProfileSpec target;
  ProfileSpec g;
  // [solver]
  SolverConfig solver;
  // [output]
  std::string output_dir = "out";
  ReferenceKind reference = ReferenceKind::none;

  /// Directory relative file paths resolve against; not serialized.
  std::filesystem::path base_dir;

  Grid grid() const { return Grid(nx, nt, domain_length); }

  FluxModel flux_model() const
  {
    if (flux == "tabulated") return FluxModel::tabulated(flux_nodes, flux_values, flux_slopes);
    return FluxModel::from_name(flux);
  }

  ControlProblem problem(double alpha) const
  {
    Grid const gr = grid();
    ControlProblem p;
    p.flux = flux_model();
    p.entropy = EntropyModel::from_name(entropy);
    p.beta = beta;
    p.domain_length = domain_length;
    p.u0 = initial.sample(gr, base_dir);
    if (box_lo && box_hi) p.box = StateRange{*box_lo, *box_hi};
    p.c = c ? *c : default_viscosity_constant(p.flux, p.admissible_range());
    p.potential = {potential, alpha};
    p.terminal.kind = terminal;
    p.terminal.mu = mu;
    if (terminal == TerminalKind::kl) p.terminal.target = target.sample(gr, base_dir);
    if (terminal == TerminalKind::linear) p.terminal.g = g.sample(gr, base_dir);
    p.validate(nx);
    return p;
  }

  ControlProblem problem() const { return problem(alphas.front()); }

  bool operator==(RunConfig const& o) const
  {
    auto const tie = [](RunConfig const& r) {
      return std::tie(r.flux, r.entropy, r.beta, r.c, r.domain_length, r.box_lo, r.box_hi, r.flux_nodes, r.flux_values,
                      r.flux_slopes, r.nx, r.nt, r.initial, r.potential, r.alphas, r.terminal, r.mu, r.target, r.g,
                      r.solver, r.output_dir, r.reference);
    };
    return tie(*this) == tie(o);
  }
};

namespace config_detail {

inline std::string_view trim(std::string_view s)
{
  auto const ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view v, int line, std::string_view key)
{
  v = trim(v);
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty())
    throw ConfigError(ConfigErrorCode::malformed_number, line,
                      "malformed number '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return out;
}

inline int parse_int(std::string_view v, int line, std::string_view key)
{
  v = trim(v);
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty() || out > 1'000'000'000 || out < -1'000'000'000)
    throw ConfigError(ConfigErrorCode::malformed_number, line,
                      "malformed integer '" + std::string(v) + "' for key '" + std::string(key) + "'");
  return static_cast<int>(out);
}

inline std::vector<double> parse_list(std::string_view v, int line, std::string_view key)
{
  std::vector<double> out;
  while (true) {
    auto comma = v.find(',');
    out.push_back(parse_number(v.substr(0, comma), line, key));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] inline void invalid(int line, std::string const& what)
{
  throw ConfigError(ConfigErrorCode::invalid_value, line, what);
}

// Applies one profile key; false if the key is not a profile key.
inline bool set_profile_key(ProfileSpec& p, std::string_view key, std::string_view value, int line)
{
  if (key == "kind") {
    if (value == "constant") p.kind = ProfileKind::constant;
    else if (value == "indicator") p.kind = ProfileKind::indicator;
    else if (value == "gaussian_mixture") p.kind = ProfileKind::gaussian_mixture;
    else if (value == "sine") p.kind = ProfileKind::sine;
    else if (value == "file") p.kind = ProfileKind::file;
    else invalid(line, "unknown profile kind '" + std::string(value) + "'");
  } else if (key == "lo") p.lo = parse_number(value, line, key);
  else if (key == "hi") p.hi = parse_number(value, line, key);
  else if (key == "height") p.height = parse_number(value, line, key);
  else if (key == "background") p.background = parse_number(value, line, key);
  else if (key == "centers") p.centers = parse_list(value, line, key);
  else if (key == "amplitudes") p.amplitudes = parse_list(value, line, key);
  else if (key == "rates") p.rates = parse_list(value, line, key);
  else if (key == "amplitude") p.amplitude = parse_number(value, line, key);
  else if (key == "frequency") p.frequency = parse_number(value, line, key);
  else if (key == "path") p.path = std::string(value);
  else return false;
  return true;
}

inline void check_profile(ProfileSpec const& p, int line, std::string const& what)
{
  if (p.kind == ProfileKind::indicator && !(p.lo <= p.hi)) invalid(line, what + ": indicator needs lo <= hi");
  if (p.kind == ProfileKind::gaussian_mixture) {
    if (p.centers.size() != p.amplitudes.size() || p.centers.size() != p.rates.size())
      invalid(line, what + ": centers, amplitudes and rates must have equal length");
    for (double r : p.rates)
      if (!(r > 0.0)) invalid(line, what + ": rates must be positive");
  }
  if (p.kind == ProfileKind::file && p.path.empty()) invalid(line, what + ": file profile needs a path");
}

}  // namespace config_detail

/// Parses the sectioned key = value format. `#` starts a comment. The first
/// problem found is thrown as a ConfigError carrying its line number.
inline RunConfig parse_config(std::string_view text, std::filesystem::path const& base_dir = {})
{
  using namespace config_detail;
  RunConfig cfg;
  cfg.base_dir = base_dir;
  std::string section;
  std::map<std::string, int> seen;  // "section.key" -> line
  int first_line = 0;

  std::size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (!first_line) first_line = line_no;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(ConfigErrorCode::syntax, line_no, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      static constexpr std::string_view known[] = {"problem", "grid",   "initial", "potential",
                                                   "terminal", "solver", "output"};
      if (std::find(std::begin(known), std::end(known), section) == std::end(known))
        throw ConfigError(ConfigErrorCode::unknown_section, line_no, "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(ConfigErrorCode::syntax, line_no, "expected key = value");
    if (section.empty()) throw ConfigError(ConfigErrorCode::syntax, line_no, "key outside of any section");
    std::string const key(trim(line.substr(0, eq)));
    std::string_view const value = trim(line.substr(eq + 1));
    if (!seen.emplace(section + "." + key, line_no).second)
      throw ConfigError(ConfigErrorCode::duplicate_key, line_no, "duplicate key '" + key + "' in [" + section + "]");

    auto unknown = [&] {
      throw ConfigError(ConfigErrorCode::unknown_key, line_no, "unknown key '" + key + "' in [" + section + "]");
    };
    auto num = [&] { return parse_number(value, line_no, key); };

    if (section == "problem") {
      if (key == "flux") {
        if (value != "burgers" && value != "traffic" && value != "zero" && value != "tabulated")
          invalid(line_no, "unknown flux preset '" + std::string(value) + "'");
        cfg.flux = value;
      } else if (key == "entropy") {
        if (value != "quadratic" && value != "boltzmann")
          invalid(line_no, "unknown entropy preset '" + std::string(value) + "'");
        cfg.entropy = value;
      } else if (key == "beta") {
        cfg.beta = num();
        if (!(cfg.beta >= 0.0)) invalid(line_no, "beta must be nonnegative");
      } else if (key == "c") {
        cfg.c = num();
        if (!(*cfg.c > 0.0)) invalid(line_no, "c must be positive");
      } else if (key == "domain_length") {
        cfg.domain_length = num();
        if (!(cfg.domain_length > 0.0)) invalid(line_no, "domain_length must be positive");
      } else if (key == "box_lo") cfg.box_lo = num();
      else if (key == "box_hi") cfg.box_hi = num();
      else if (key == "flux_nodes") cfg.flux_nodes = parse_list(value, line_no, key);
      else if (key == "flux_values") cfg.flux_values = parse_list(value, line_no, key);
      else if (key == "flux_slopes") cfg.flux_slopes = parse_list(value, line_no, key);
      else unknown();
      if (cfg.box_lo && cfg.box_hi && !(*cfg.box_lo <= *cfg.box_hi)) invalid(line_no, "empty box");
    } else if (section == "grid") {
      int const v = parse_int(value, line_no, key);
      if (key == "nx") {
        if (v < 4) invalid(line_no, "nx must be >= 4");
        cfg.nx = v;
      } else if (key == "nt") {
        if (v < 1) invalid(line_no, "nt must be >= 1");
        cfg.nt = v;
      } else unknown();
    } else if (section == "initial") {
      if (!set_profile_key(cfg.initial, key, value, line_no)) unknown();
    } else if (section == "potential") {
      if (key == "kind") {
        if (value == "zero") cfg.potential = PotentialKind::zero;
        else if (value == "neg_boltzmann") cfg.potential = PotentialKind::neg_boltzmann;
        else invalid(line_no, "unknown potential kind '" + std::string(value) + "'");
      } else if (key == "alpha") {
        cfg.alphas = parse_list(value, line_no, key);
        for (double a : cfg.alphas)
          if (!(a >= 0.0)) invalid(line_no, "alpha must be nonnegative");
      } else unknown();
    } else if (section == "terminal") {
      if (key == "kind") {
        if (value == "zero") cfg.terminal = TerminalKind::zero;
        else if (value == "kl") cfg.terminal = TerminalKind::kl;
        else if (value == "linear") cfg.terminal = TerminalKind::linear;
        else invalid(line_no, "unknown terminal kind '" + std::string(value) + "'");
      } else if (key == "mu") {
        cfg.mu = num();
        if (!(cfg.mu >= 0.0)) invalid(line_no, "mu must be nonnegative");
      } else if (key.starts_with("target_")) {
        if (!set_profile_key(cfg.target, std::string_view(key).substr(7), value, line_no)) unknown();
      } else if (key.starts_with("g_")) {
        if (!set_profile_key(cfg.g, std::string_view(key).substr(2), value, line_no)) unknown();
      } else unknown();
    } else if (section == "solver") {
      if (key == "tau") cfg.solver.tau = num();
      else if (key == "sigma") cfg.solver.sigma = num();
      else if (key == "tol") cfg.solver.tol = num();
      else if (key == "h1_epsilon") cfg.solver.h1_epsilon = num();
      else if (key == "newton_tol") cfg.solver.newton_tol = num();
      else if (key == "max_iters") cfg.solver.max_iters = parse_int(value, line_no, key);
      else if (key == "newton_max") cfg.solver.newton_max = parse_int(value, line_no, key);
      else unknown();
      try {
        cfg.solver.validate();
      } catch (DomainError const& e) {
        invalid(line_no, e.what());
      }
    } else if (section == "output") {
      if (key == "dir") cfg.output_dir = value;
      else if (key == "reference") {
        if (value == "none") cfg.reference = ReferenceKind::none;
        else if (value == "burgers_exact") cfg.reference = ReferenceKind::burgers_exact;
        else if (value == "traffic_exact") cfg.reference = ReferenceKind::traffic_exact;
        else if (value == "fine") cfg.reference = ReferenceKind::fine;
        else invalid(line_no, "unknown reference '" + std::string(value) + "'");
      } else unknown();
    }
  }

  auto line_of = [&](std::string const& k) {
    auto it = seen.find(k);
    return it == seen.end() ? 0 : it->second;
  };
  if (cfg.box_lo.has_value() != cfg.box_hi.has_value())
    invalid(line_of(cfg.box_lo ? "problem.box_lo" : "problem.box_hi"), "box needs both box_lo and box_hi");
  if (cfg.flux == "tabulated") {
    try {
      (void)cfg.flux_model();
    } catch (DomainError const& e) {
      invalid(line_of("problem.flux"), e.what());
    }
  }
  check_profile(cfg.initial, line_of("initial.kind"), "initial");
  if (cfg.terminal == TerminalKind::kl) check_profile(cfg.target, line_of("terminal.target_kind"), "terminal target");
  if (cfg.terminal == TerminalKind::linear) check_profile(cfg.g, line_of("terminal.g_kind"), "terminal g");
  if (cfg.potential == PotentialKind::zero && cfg.alphas != std::vector<double>{0.0} &&
      seen.count("potential.alpha"))
    invalid(line_of("potential.alpha"), "alpha requires kind = neg_boltzmann");
  return cfg;
}

inline RunConfig load_config(std::filesystem::path const& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError(ConfigErrorCode::syntax, 0, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

namespace config_detail {

inline std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt(std::vector<double> const& v)
{
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) s += (k ? ", " : "") + fmt(v[k]);
  return s;
}

inline void write_profile(std::ostream& os, ProfileSpec const& p, std::string const& prefix)
{
  static constexpr char const* names[] = {"constant", "indicator", "gaussian_mixture", "sine", "file"};
  os << prefix << "kind = " << names[static_cast<int>(p.kind)] << '\n';
  switch (p.kind) {
    case ProfileKind::constant: os << prefix << "background = " << fmt(p.background) << '\n'; break;
    case ProfileKind::indicator:
      os << prefix << "lo = " << fmt(p.lo) << '\n' << prefix << "hi = " << fmt(p.hi) << '\n';
      os << prefix << "height = " << fmt(p.height) << '\n' << prefix << "background = " << fmt(p.background) << '\n';
      break;
    case ProfileKind::gaussian_mixture:
      os << prefix << "background = " << fmt(p.background) << '\n';
      os << prefix << "centers = " << fmt(p.centers) << '\n';
      os << prefix << "amplitudes = " << fmt(p.amplitudes) << '\n';
      os << prefix << "rates = " << fmt(p.rates) << '\n';
      break;
    case ProfileKind::sine:
      os << prefix << "background = " << fmt(p.background) << '\n';
      os << prefix << "amplitude = " << fmt(p.amplitude) << '\n';
      os << prefix << "frequency = " << fmt(p.frequency) << '\n';
      break;
    case ProfileKind::file: os << prefix << "path = " << p.path << '\n'; break;
  }
}

}  // namespace config_detail

/// Inverse of parse_config for every field that affects a run.
inline std::string serialize_config(RunConfig const& cfg)
{
  using config_detail::fmt;
  std::ostringstream os;
  os << "[problem]\n";
  os << "flux = " << cfg.flux << '\n' << "entropy = " << cfg.entropy << '\n';
  os << "beta = " << fmt(cfg.beta) << '\n';
  if (cfg.c) os << "c = " << fmt(*cfg.c) << '\n';
  os << "domain_length = " << fmt(cfg.domain_length) << '\n';
  if (cfg.box_lo) os << "box_lo = " << fmt(*cfg.box_lo) << '\n';
  if (cfg.box_hi) os << "box_hi = " << fmt(*cfg.box_hi) << '\n';
  if (!cfg.flux_nodes.empty()) os << "flux_nodes = " << fmt(cfg.flux_nodes) << '\n';
  if (!cfg.flux_values.empty()) os << "flux_values = " << fmt(cfg.flux_values) << '\n';
  if (!cfg.flux_slopes.empty()) os << "flux_slopes = " << fmt(cfg.flux_slopes) << '\n';

  os << "\n[grid]\nnx = " << cfg.nx << "\nnt = " << cfg.nt << '\n';

  os << "\n[initial]\n";
  config_detail::write_profile(os, cfg.initial, "");

  os << "\n[potential]\n";
  os << "kind = " << (cfg.potential == PotentialKind::zero ? "zero" : "neg_boltzmann") << '\n';
  if (cfg.potential != PotentialKind::zero) os << "alpha = " << fmt(cfg.alphas) << '\n';

  os << "\n[terminal]\n";
  static constexpr char const* terminals[] = {"zero", "kl", "linear"};
  os << "kind = " << terminals[static_cast<int>(cfg.terminal)] << '\n';
  if (cfg.terminal == TerminalKind::kl || cfg.mu != 0.0) os << "mu = " << fmt(cfg.mu) << '\n';
  if (cfg.terminal == TerminalKind::kl || cfg.target != ProfileSpec{}) config_detail::write_profile(os, cfg.target, "target_");
  if (cfg.terminal == TerminalKind::linear || cfg.g != ProfileSpec{}) config_detail::write_profile(os, cfg.g, "g_");

  auto const& s = cfg.solver;
  os << "\n[solver]\n";
  os << "tau = " << fmt(s.tau) << "\nsigma = " << fmt(s.sigma) << "\nmax_iters = " << s.max_iters;
  os << "\ntol = " << fmt(s.tol) << "\nh1_epsilon = " << fmt(s.h1_epsilon);
  os << "\nnewton_tol = " << fmt(s.newton_tol) << "\nnewton_max = " << s.newton_max << '\n';

  static constexpr char const* refs[] = {"none", "burgers_exact", "traffic_exact", "fine"};
  os << "\n[output]\ndir = " << cfg.output_dir << "\nreference = " << refs[static_cast<int>(cfg.reference)] << '\n';
  return os.str();
}

}  // namespace fluxctl
