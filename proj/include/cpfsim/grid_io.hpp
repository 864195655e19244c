#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

// (t, τ) grids of CPF correlations and their CSV / JSON / SVG forms.

namespace cpfsim::io {

struct GridMetadata {
  std::string model;
  std::string config_hash;
  std::string version;
  std::uint64_t seed = 0;
  std::size_t n_traj = 0;
  std::string observables;
};

/// Cells are stored row-major over t then τ. Degenerate cells hold NaN.
struct CpfGrid {
  std::vector<double> t;
  std::vector<double> tau;
  std::string y;
  std::vector<double> cpf;
  std::vector<double> std_error;
  GridMetadata meta;

  CpfGrid() = default;
  CpfGrid(std::vector<double> t_axis, std::vector<double> tau_axis, std::string y_label);

  std::size_t n_t() const noexcept { return t.size(); }
  std::size_t n_tau() const noexcept { return tau.size(); }
  std::size_t cells() const noexcept { return t.size() * tau.size(); }
  std::size_t index(std::size_t i, std::size_t j) const noexcept { return i * tau.size() + j; }
  double value(std::size_t i, std::size_t j) const { return cpf.at(index(i, j)); }
};

/// Evenly spaced axis; a single point sits at `lo`.
std::vector<double> linspace(double lo, double hi, std::size_t n);

/// Shortest decimal string that parses back to the same double; "nan" for NaN.
std::string format_double(double v);

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

std::string to_csv(const CpfGrid& grid);
CpfGrid parse_csv(const std::string& text);
std::string to_json(const CpfGrid& grid);
std::string to_svg(const CpfGrid& grid);

CpfGrid read_csv(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cpfsim::io
