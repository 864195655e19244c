#include "cpfsim/grid_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cpfsim/errors.hpp"

namespace cpfsim::io {

CpfGrid::CpfGrid(std::vector<double> t_axis, std::vector<double> tau_axis, std::string y_label)
    : t(std::move(t_axis)), tau(std::move(tau_axis)), y(std::move(y_label)) {
  cpf.assign(cells(), 0.0);
  std_error.assign(cells(), 0.0);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n == 0) throw ConfigError("grid axis needs at least one point");
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + static_cast<double>(i) * step;
  v.back() = hi;
  return v;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line) {
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw ConfigError("grid csv line " + std::to_string(line) + ": cannot parse number '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string to_csv(const CpfGrid& grid) {
  std::string out = "t,tau,y,cpf,stderr\n";
  for (std::size_t i = 0; i < grid.n_t(); ++i)
    for (std::size_t j = 0; j < grid.n_tau(); ++j) {
      const std::size_t k = grid.index(i, j);
      out += format_double(grid.t[i]) + ',' + format_double(grid.tau[j]) + ',' + grid.y + ',' +
             format_double(grid.cpf[k]) + ',' + format_double(grid.std_error[k]) + '\n';
    }
  return out;
}

CpfGrid parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "t,tau,y,cpf,stderr") {
    throw ConfigError("grid csv: expected header 't,tau,y,cpf,stderr'");
  }
  struct Row {
    double t, tau, cpf, se;
  };
  std::vector<Row> rows;
  std::string y;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 5) throw ConfigError("grid csv line " + std::to_string(lineno) + ": expected 5 fields");
    if (rows.empty()) {
      y = std::string(f[2]);
    } else if (f[2] != y) {
      throw ConfigError("grid csv line " + std::to_string(lineno) + ": mixed conditioning outcomes");
    }
    rows.push_back({parse_double(f[0], lineno), parse_double(f[1], lineno), parse_double(f[3], lineno),
                    parse_double(f[4], lineno)});
  }
  if (rows.empty()) throw ConfigError("grid csv: no cells");

  std::vector<double> tau;
  for (const auto& r : rows) {
    if (r.t != rows.front().t) break;
    tau.push_back(r.tau);
  }
  if (rows.size() % tau.size() != 0) throw ConfigError("grid csv: cell count is not n_t * n_tau");
  std::vector<double> t;
  for (std::size_t k = 0; k < rows.size(); k += tau.size()) t.push_back(rows[k].t);
  for (const auto* axis : {&t, &tau}) {
    if (!std::is_sorted(axis->begin(), axis->end())) throw ConfigError("grid csv: axes must be non-decreasing");
  }

  CpfGrid grid(t, tau, y);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const std::size_t i = k / tau.size();
    const std::size_t j = k % tau.size();
    if (rows[k].t != t[i] || rows[k].tau != tau[j]) {
      throw ConfigError("grid csv line " + std::to_string(k + 2) + ": rows are not row-major over t then tau");
    }
    grid.cpf[k] = rows[k].cpf;
    grid.std_error[k] = rows[k].se;
  }
  return grid;
}

std::string to_json(const CpfGrid& grid) {
  using nlohmann::ordered_json;
  auto num = [](double v) { return std::isnan(v) ? ordered_json(nullptr) : ordered_json(v); };
  ordered_json j;
  j["metadata"] = {{"model", grid.meta.model},     {"config_hash", grid.meta.config_hash},
                   {"version", grid.meta.version}, {"seed", grid.meta.seed},
                   {"n_traj", grid.meta.n_traj},   {"observables", grid.meta.observables}};
  j["y"] = grid.y;
  j["t"] = grid.t;
  j["tau"] = grid.tau;
  ordered_json cpf = ordered_json::array();
  ordered_json se = ordered_json::array();
  for (std::size_t i = 0; i < grid.n_t(); ++i) {
    ordered_json crow = ordered_json::array();
    ordered_json srow = ordered_json::array();
    for (std::size_t k = 0; k < grid.n_tau(); ++k) {
      crow.push_back(num(grid.value(i, k)));
      srow.push_back(num(grid.std_error[grid.index(i, k)]));
    }
    cpf.push_back(std::move(crow));
    se.push_back(std::move(srow));
  }
  j["cpf"] = std::move(cpf);
  j["stderr"] = std::move(se);
  return j.dump(2) + "\n";
}

namespace {

// Linear ramp from dark blue through white to dark red.
std::string ramp(double u) {
  u = std::clamp(u, 0.0, 1.0);
  const double lo[3] = {33, 102, 172};
  const double mid[3] = {247, 247, 247};
  const double hi[3] = {178, 24, 43};
  double rgb[3];
  for (int c = 0; c < 3; ++c) {
    rgb[c] = u < 0.5 ? lo[c] + (mid[c] - lo[c]) * (u / 0.5) : mid[c] + (hi[c] - mid[c]) * ((u - 0.5) / 0.5);
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(rgb[0])),
                static_cast<int>(std::lround(rgb[1])), static_cast<int>(std::lround(rgb[2])));
  return buf;
}

std::string fmt(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

}  // namespace

std::string to_svg(const CpfGrid& grid) {
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (double v : grid.cpf) {
    if (std::isnan(v)) continue;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  const bool any = vmin <= vmax;
  const double cell = std::max(4.0, std::min(40.0, 400.0 / static_cast<double>(std::max(grid.n_t(), grid.n_tau()))));
  const double margin = 60.0;
  const double w = cell * static_cast<double>(grid.n_t());
  const double h = cell * static_cast<double>(grid.n_tau());
  const double width = w + 2 * margin + 60;
  const double height = h + 2 * margin;

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width, 6) << "\" height=\"" << fmt(height, 6)
    << "\" viewBox=\"0 0 " << fmt(width, 6) << ' ' << fmt(height, 6) << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // t runs left to right, tau bottom to top.
  for (std::size_t i = 0; i < grid.n_t(); ++i)
    for (std::size_t j = 0; j < grid.n_tau(); ++j) {
      const double v = grid.value(i, j);
      std::string color = "#999999";
      if (!std::isnan(v)) color = vmax > vmin ? ramp((v - vmin) / (vmax - vmin)) : ramp(0.5);
      const double x = margin + cell * static_cast<double>(i);
      const double y = margin + h - cell * static_cast<double>(j + 1);
      s << "<rect x=\"" << fmt(x, 8) << "\" y=\"" << fmt(y, 8) << "\" width=\"" << fmt(cell, 8) << "\" height=\""
        << fmt(cell, 8) << "\" fill=\"" << color << "\"/>\n";
    }
  const double bar_x = margin + w + 20;
  for (int k = 0; k < 20; ++k) {
    const double y = margin + h - h * (k + 1) / 20.0;
    s << "<rect x=\"" << fmt(bar_x, 8) << "\" y=\"" << fmt(y, 8) << "\" width=\"15\" height=\"" << fmt(h / 20.0, 8)
      << "\" fill=\"" << ramp((k + 0.5) / 20.0) << "\"/>\n";
  }
  s << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  s << "<text x=\"" << fmt(bar_x, 8) << "\" y=\"" << fmt(margin - 6, 8) << "\">max " << (any ? fmt(vmax) : "nan")
    << "</text>\n";
  s << "<text x=\"" << fmt(bar_x, 8) << "\" y=\"" << fmt(margin + h + 16, 8) << "\">min "
    << (any ? fmt(vmin) : "nan") << "</text>\n";
  s << "<text x=\"" << fmt(margin + w / 2, 8) << "\" y=\"" << fmt(height - 15, 8)
    << "\" text-anchor=\"middle\">t</text>\n";
  s << "<text x=\"20\" y=\"" << fmt(margin + h / 2, 8) << "\" text-anchor=\"middle\">tau</text>\n";
  s << "<text x=\"" << fmt(margin, 8) << "\" y=\"" << fmt(margin + h + 16, 8) << "\">"
    << fmt(grid.t.front()) << "</text>\n";
  s << "<text x=\"" << fmt(margin + w, 8) << "\" y=\"" << fmt(margin + h + 16, 8) << "\" text-anchor=\"end\">"
    << fmt(grid.t.back()) << "</text>\n";
  s << "<text x=\"" << fmt(margin - 6, 8) << "\" y=\"" << fmt(margin + h, 8) << "\" text-anchor=\"end\">"
    << fmt(grid.tau.front()) << "</text>\n";
  s << "<text x=\"" << fmt(margin - 6, 8) << "\" y=\"" << fmt(margin + 10, 8) << "\" text-anchor=\"end\">"
    << fmt(grid.tau.back()) << "</text>\n";
  s << "<text x=\"" << fmt(margin, 8) << "\" y=\"20\">C_pf(t, tau | y = " << grid.y << ")</text>\n";
  s << "</g>\n</svg>\n";
  return s.str();
}

CpfGrid read_csv(const std::filesystem::path& path) { return parse_csv(read_text(path)); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace cpfsim::io
