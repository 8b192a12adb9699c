#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "helika/serialize.hpp"

namespace helika {

/// One named state of the run. Without an explicit grid the state gets an automatic one.
struct StateEntry {
  std::string name;
  ModeSpec mode;
  Vec3 I = Vec3::UnitZ();
  std::optional<GridDescriptor> grid;
  /// Target Berry vector for gauge experiments; falls back to RunConfig::I_prime.
  std::optional<Vec3> I_prime;
};

inline const std::vector<std::string>& known_suites() {
  static const std::vector<std::string> s{"frames", "algebra", "gauge", "fields"};
  return s;
}

struct RunConfig {
  Config constants;
  /// Shared grid for states that carry none; auto grids when absent.
  std::optional<GridDescriptor> grid;
  std::vector<StateEntry> states;
  Vec3 I = Vec3::UnitZ();
  Vec3 I_prime = Vec3::UnitX();
  std::vector<std::string> suites{"all"};
  std::string output_dir = "helika_out";
  std::uint64_t seed = 20240607;
  /// Extra states loaded from disk by verify and observe.
  std::vector<std::string> state_files;
  int threads = 0;
  /// Points per axis of automatic box grids and the shape of automatic shell grids.
  int box_points = 32;
  std::array<int, 3> shell_points{16, 24, 48};
  /// Automatic grids extend this many envelope widths either side of the centre.
  double auto_extent = 6.0;
};

/// Three Gaussian packets, two plane-wave proxies and four spherical modes.
RunConfig default_run_config();

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& rc);
/// IoError when unreadable, ConfigError when malformed.
RunConfig load_run_config(const std::string& path);

/// KEY=VAL with KEY in tol_quad, tol_fd, fd_order. ConfigError otherwise.
void apply_override(RunConfig& rc, const std::string& assignment);

/// Automatic grid for a mode: a box of +-extent widths around k0 or a radial shell.
GridDescriptor auto_grid(const ModeSpec& mode, const Vec3& I, int box_points,
                         std::array<int, 3> shell_points, double extent);
GridDescriptor grid_for(const RunConfig& rc, const StateEntry& e);

/// Builds the intrinsic state of an entry on its grid.
TwoCompState build_entry(const RunConfig& rc, const StateEntry& e);

/// Suites named by the config with "all" expanded, in canonical order.
std::vector<std::string> selected_suites(const std::vector<std::string>& names);

}  // namespace helika
