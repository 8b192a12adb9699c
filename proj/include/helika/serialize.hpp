#pragma once

#include <initializer_list>
#include <optional>
#include <string>
#include <variant>

#include "json.hpp"

#include "helika/gauge.hpp"
#include "helika/states.hpp"

namespace helika {

/// Everything needed to rebuild a grid bit-for-bit.
struct GridDescriptor {
  GridKind kind = GridKind::UniformBox;
  BoxSpec box;
  ShellSpec shell;
  Vec3 I_ref = Vec3::UnitZ();
  double mask_angle = 0.0;
  std::vector<Vec3> extra_mask_axes;
};

GridDescriptor describe(const KGrid& g);
GridPtr make_grid(const GridDescriptor& d, const Config& config);

// JSON conversions throw ConfigError on malformed or unknown fields.
nlohmann::json to_json(const GridDescriptor& d);
GridDescriptor grid_descriptor_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Config& c);
/// Starts from `base` and overrides the keys present in `j`.
Config config_from_json(const nlohmann::json& j, Config base = {});
nlohmann::json to_json(const ModeSpec& m);
ModeSpec mode_from_json(const nlohmann::json& j);

/// ConfigError unless `j` is an object whose keys all appear in `keys`.
void check_keys(const nlohmann::json& j, std::initializer_list<const char*> keys, const char* where);

nlohmann::json vec_to_json(const Vec3& v);
Vec3 vec_from_json(const nlohmann::json& j, const char* what);

/// A state file: one JSON header line (format, representation, grid, constants, I, t,
/// spec, name, node count), then the raw little-endian doubles of every node's
/// components and, when present, one validity byte per node.
struct StoredState {
  std::variant<TwoCompState, VectorState> state;
  Vec3 I = Vec3::UnitZ();
  std::optional<ModeSpec> spec;
  std::string name;

  bool intrinsic() const { return state.index() == 0; }
};

void save_state(const std::string& path, const TwoCompState& s, const std::optional<ModeSpec>& spec = {},
                const std::string& name = {});
void save_state(const std::string& path, const VectorState& s, const Vec3& I,
                const std::optional<ModeSpec>& spec = {}, const std::string& name = {});
/// Throws IoError on unreadable or malformed files.
StoredState load_state(const std::string& path);

/// CSV with columns node,kx,ky,kz,masked followed by re/im (or value) columns.
void write_field_csv(const std::string& path, const Field<C2>& f);
void write_field_csv(const std::string& path, const Field<CVec3>& f);
void write_field_csv(const std::string& path, const Field<double>& f);

/// Columns node,kx,ky,kz,phi[,extracted,deviation] for usable nodes.
void write_gauge_csv(const std::string& path, const GaugeField& gf, const Field<double>* extracted = nullptr,
                     int sigma = 1);

}  // namespace helika
