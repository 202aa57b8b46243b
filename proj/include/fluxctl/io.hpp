#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "grid.hpp"

namespace fluxctl {

namespace io_detail {

inline std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::ofstream open_out(std::filesystem::path const& path)
{
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline void finish(std::ofstream& out, std::filesystem::path const& path)
{
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline double parse(std::string_view s, std::filesystem::path const& path, int line)
{
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw IoError(path.string() + ":" + std::to_string(line) + ": malformed number '" + std::string(s) + "'");
  return v;
}

}  // namespace io_detail

/// CSV with header `t,x,value`, slice-major then node-minor, 17 significant digits.
inline void write_field_csv(Field const& field, std::vector<double> const& t, std::vector<double> const& x,
                            std::filesystem::path const& path)
{
  if (static_cast<int>(t.size()) != field.slices() || static_cast<int>(x.size()) != field.nx())
    throw DomainError("write_field_csv: coordinates do not match the field");
  auto out = io_detail::open_out(path);
  out << "t,x,value\n";
  for (int l = 0; l < field.slices(); ++l)
    for (int i = 0; i < field.nx(); ++i)
      out << io_detail::fmt(t[l]) << ',' << io_detail::fmt(x[i]) << ',' << io_detail::fmt(field(l, i)) << '\n';
  io_detail::finish(out, path);
}

inline void write_field_csv(Field const& field, Grid const& grid, std::filesystem::path const& path)
{
  if (field.nx() != grid.nx()) throw DomainError("write_field_csv: field does not match the grid");
  std::vector<double> t(field.slices());
  for (int l = 0; l < field.slices(); ++l) t[l] = grid.t(l);
  write_field_csv(field, t, grid.nodes(), path);
}

struct FieldTable {
  Field field;
  std::vector<double> t;  // one per slice
  std::vector<double> x;  // one per node
};

/// Reads what write_field_csv wrote. Slices are detected by changes in t.
inline FieldTable read_field_csv(std::filesystem::path const& path)
{
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "t,x,value") throw IoError(path.string() + ": expected header t,x,value");
  std::vector<double> ts, xs, vs;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto a = line.find(',');
    auto b = a == std::string::npos ? a : line.find(',', a + 1);
    if (b == std::string::npos) throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    std::string_view sv(line);
    ts.push_back(io_detail::parse(sv.substr(0, a), path, line_no));
    xs.push_back(io_detail::parse(sv.substr(a + 1, b - a - 1), path, line_no));
    vs.push_back(io_detail::parse(sv.substr(b + 1), path, line_no));
  }
  if (vs.empty()) throw IoError(path.string() + ": no data");
  std::size_t nx = 1;
  while (nx < ts.size() && ts[nx] == ts[0]) ++nx;
  if (vs.size() % nx != 0) throw IoError(path.string() + ": ragged field");
  int const slices = static_cast<int>(vs.size() / nx);
  FieldTable table{Field(slices, static_cast<int>(nx)), {}, {xs.begin(), xs.begin() + static_cast<long>(nx)}};
  for (int l = 0; l < slices; ++l) table.t.push_back(ts[l * nx]);
  std::copy(vs.begin(), vs.end(), table.field.values().begin());
  return table;
}

/// Named columns sharing one x axis, e.g. u(1, x) from several solvers.
inline void write_columns_csv(std::vector<double> const& x, std::vector<std::pair<std::string, std::vector<double>>> const& cols,
                              std::filesystem::path const& path)
{
  for (auto const& [name, v] : cols)
    if (v.size() != x.size()) throw DomainError("write_columns_csv: column '" + name + "' has the wrong length");
  auto out = io_detail::open_out(path);
  out << 'x';
  for (auto const& c : cols) out << ',' << c.first;
  out << '\n';
  for (std::size_t i = 0; i < x.size(); ++i) {
    out << io_detail::fmt(x[i]);
    for (auto const& c : cols) out << ',' << io_detail::fmt(c.second[i]);
    out << '\n';
  }
  io_detail::finish(out, path);
}

/// Ordered key=value report.
class Report {
 public:
  void set(std::string const& key, std::string value)
  {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    entries_.emplace_back(key, std::move(value));
  }
  void set(std::string const& key, double v) { set(key, io_detail::fmt(v)); }
  void set(std::string const& key, int v) { set(key, std::to_string(v)); }
  void set(std::string const& key, bool v) { set(key, std::string(v ? "true" : "false")); }
  void set(std::string const& key, char const* v) { set(key, std::string(v)); }

  std::string const* get(std::string const& key) const
  {
    for (auto const& [k, v] : entries_)
      if (k == key) return &v;
    return nullptr;
  }

  std::vector<std::pair<std::string, std::string>> const& entries() const noexcept { return entries_; }

  std::string str() const
  {
    std::string s;
    for (auto const& [k, v] : entries_) s += k + "=" + v + "\n";
    return s;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void write_report(Report const& report, std::filesystem::path const& path)
{
  auto out = io_detail::open_out(path);
  out << report.str();
  io_detail::finish(out, path);
}

/// Files a plot script draws from. Paths are written as given, so relative
/// paths resolve against the directory gnuplot runs in.
struct PlotArtifacts {
  std::vector<std::pair<std::string, std::string>> fields;  // (title, t,x,value csv) drawn as heatmaps
  std::string profile;                                      // x,<curve>... csv of u(1, x)
  std::vector<std::string> curves;                          // column names in `profile`
};

/// gnuplot script: one heatmap per field, one line plot overlaying every
/// final-time curve.
inline std::string emit_plot_script(PlotArtifacts const& a)
{
  std::ostringstream s;
  s << "# gnuplot script; run from the output directory: gnuplot plot.gp\n";
  s << "set datafile separator ','\n";
  s << "set terminal pngcairo size 900,600\n";
  for (auto const& [title, file] : a.fields) {
    std::string stem = std::filesystem::path(file).stem().string();
    s << "\nset output '" << stem << ".png'\n";
    s << "set title '" << title << "'\nset xlabel 'x'\nset ylabel 't'\nset cblabel 'u'\n";
    s << "plot '" << file << "' skip 1 using 2:1:3 with image notitle\n";
  }
  if (!a.profile.empty() && !a.curves.empty()) {
    s << "\nset output '" << std::filesystem::path(a.profile).stem().string() << ".png'\n";
    s << "set title 'u(1, x)'\nset xlabel 'x'\nset ylabel 'u'\nset key top left\n";
    s << "plot ";
    for (std::size_t k = 0; k < a.curves.size(); ++k) {
      s << (k ? ", \\\n     " : "") << "'" << a.profile << "' skip 1 using 1:" << k + 2 << " with lines lw 2";
      if (a.curves[k] == "exact") s << " dt 2";
      s << " title '" << a.curves[k] << "'";
    }
    s << '\n';
  }
  return s.str();
}

inline void write_text(std::string const& text, std::filesystem::path const& path)
{
  auto out = io_detail::open_out(path);
  out << text;
  io_detail::finish(out, path);
}

}  // namespace fluxctl
