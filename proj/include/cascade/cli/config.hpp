#pragma once

// Run configuration of the command-line front end and the value-list
// grammar used by every numeric knob:
//
//   list  := item ("," item)*
//   item  := number | start ":" stop ":" step | "inf"
//
// A range includes both ends (stop is kept when it lies on the grid within
// 1e-9 of a step).

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/cli/table.hpp"
#include "cascade/detail/numerics.hpp"
#include "cascade/error.hpp"

namespace cascade::cli {

enum class Command { coeffs, variance, spectrum, mean_photon, pnd, figure, verify, mc, oracle };
enum class Engine { analytic, oracle, mc, moments, all };
enum class Format { csv, svg };

inline constexpr const char* kOutDirEnv = "CASCADE_OUT_DIR";

struct Range {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
};

inline std::vector<double> expand(const Range& r) {
  if (!std::isfinite(r.start) || !std::isfinite(r.stop) || !std::isfinite(r.step)) {
    throw Error(ErrorKind::invalid_parameter, "range bounds and step must be finite");
  }
  if (!(r.step > 0.0)) throw Error(ErrorKind::invalid_parameter, "range step must be > 0");
  if (r.stop < r.start) throw Error(ErrorKind::invalid_parameter, "range stop must be >= start");
  const double n = std::floor((r.stop - r.start) / r.step + 1e-9);
  if (n > 1e7) throw Error(ErrorKind::invalid_parameter, "range has more than 1e7 points");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n) + 1);
  for (long i = 0; i <= static_cast<long>(n); ++i) out.push_back(r.start + static_cast<double>(i) * r.step);
  return out;
}

inline std::vector<double> parse_values(std::string_view text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    const std::string_view item = text.substr(pos, comma - pos);
    if (item.empty()) throw Error(ErrorKind::invalid_parameter, "empty item in value list '" + std::string(text) + "'");
    std::vector<std::string_view> parts;
    std::size_t p = 0;
    while (true) {
      const std::size_t colon = item.find(':', p);
      parts.push_back(item.substr(p, colon == std::string_view::npos ? std::string_view::npos : colon - p));
      if (colon == std::string_view::npos) break;
      p = colon + 1;
    }
    auto num = [&](std::string_view s) {
      const double v = parse_number(s);
      if (std::isnan(v)) throw Error(ErrorKind::invalid_parameter, "empty number in '" + std::string(item) + "'");
      return v;
    };
    if (parts.size() == 1) {
      out.push_back(num(parts[0]));
    } else if (parts.size() == 3) {
      const auto grid = expand({num(parts[0]), num(parts[1]), num(parts[2])});
      out.insert(out.end(), grid.begin(), grid.end());
    } else {
      throw Error(ErrorKind::invalid_parameter, "range must be start:stop:step, got '" + std::string(item) + "'");
    }
    pos = comma + 1;
  }
  return out;
}

/// Every optional list is empty when the flag was not given; commands fill
/// in their own presets.
struct RunConfig {
  Command command = Command::coeffs;
  int figure = 0;
  std::vector<double> A, kappa, beta, epsilon, epsilon_rel, omega, t_end;
  Engine engine = Engine::all;
  std::string output_path;  // file for tables, directory for figures; empty = default
  Format format = Format::csv;
  std::uint64_t seed = 1;
  long n_traj = 0;  // 0 = command default
  int dim = 0;      // 0 = automatic doubling from 150
  double dt = 0.0;  // 0 = command default
  int jobs = cascade::detail::default_jobs();
  int n_max = 30;
  int samples = 101;
};

inline void validate(const RunConfig& cfg) {
  if (!cfg.epsilon.empty() && !cfg.epsilon_rel.empty()) {
    throw Error(ErrorKind::invalid_parameter, "--epsilon and --epsilon-rel-threshold are mutually exclusive");
  }
  if (cfg.command == Command::figure && (cfg.figure < 2 || cfg.figure > 6)) {
    throw Error(ErrorKind::invalid_parameter, "figure number must be in 2..6");
  }
  if (cfg.n_traj < 0 || cfg.dim < 0 || cfg.dt < 0.0 || cfg.jobs < 1 || cfg.n_max < 0 || cfg.samples < 1) {
    throw Error(ErrorKind::invalid_parameter, "counts and steps must be non-negative (jobs, samples >= 1)");
  }
  if (cfg.dim == 1) throw Error(ErrorKind::invalid_parameter, "--dim must be >= 2");
  if (cfg.format == Format::svg && cfg.command != Command::figure) {
    throw Error(ErrorKind::invalid_parameter, "--format svg is available for figure presets only");
  }
}

/// Relative paths are taken against $CASCADE_OUT_DIR when it is set.
inline std::string resolve_output(const std::string& path) {
  const char* base = std::getenv(kOutDirEnv);
  if (path.empty()) return base ? std::string(base) : std::string();
  const std::filesystem::path p(path);
  if (p.is_absolute() || !base || !*base) return path;
  return (std::filesystem::path(base) / p).string();
}

}  // namespace cascade::cli
