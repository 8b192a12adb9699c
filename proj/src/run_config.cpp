#include "helika/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace helika {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

double number(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

int whole(const json& j, const char* what) {
  if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
  return j.get<int>();
}

std::string text(const json& j, const char* what) {
  if (!j.is_string()) bad(std::string(what) + " must be a string");
  return j.get<std::string>();
}

Vec3 unit_from_json(const json& j, const char* what) {
  const Vec3 v = vec_from_json(j, what);
  if (!(v.norm() > 0.0)) bad(std::string(what) + " must be nonzero");
  return v.normalized();
}

StateEntry entry_from_json(const json& j, const Vec3& default_I) {
  check_keys(j, {"name", "mode", "I", "grid", "I_prime"}, "state");
  StateEntry e;
  if (!j.contains("name")) bad("state without 'name'");
  e.name = text(j["name"], "state.name");
  if (e.name.empty()) bad("state.name must not be empty");
  if (!j.contains("mode")) bad("state '" + e.name + "' has no mode");
  e.mode = mode_from_json(j["mode"]);
  e.I = j.contains("I") ? unit_from_json(j["I"], "state.I") : default_I;
  if (j.contains("grid")) e.grid = grid_descriptor_from_json(j["grid"]);
  if (j.contains("I_prime")) e.I_prime = unit_from_json(j["I_prime"], "state.I_prime");
  return e;
}

GridDescriptor box_around(const Vec3& k0, const Vec3& widths, const Vec3& I, int n, double extent) {
  GridDescriptor d;
  d.kind = GridKind::UniformBox;
  d.box.center = k0;
  d.box.half_widths = extent * widths;
  d.box.npts = {n, n, n};
  d.I_ref = I;
  return d;
}

}  // namespace

RunConfig default_run_config() {
  RunConfig rc;
  const Vec3 ez = Vec3::UnitZ(), ex = Vec3::UnitX(), ey = Vec3::UnitY();
  rc.states.push_back({"G1", GaussianPacket{Vec3(5, 0, 0), Vec3::Constant(0.5), alpha(1)}, ez, {},
                       Vec3(0, 1, 1).normalized()});
  {
    StateEntry g2{"G2", GaussianPacket{Vec3(3, -2, 4), Vec3(0.45, 0.5, 0.55), alpha(-1)}, ez, {}, {}};
    GridDescriptor d = box_around(Vec3(3, -2, 4), Vec3(0.45, 0.5, 0.55), ez, rc.box_points, rc.auto_extent);
    d.mask_angle = 0.1;
    d.extra_mask_axes = {ex};
    g2.grid = d;
    rc.states.push_back(g2);
  }
  rc.states.push_back({"G3", GaussianPacket{Vec3(1, 4, 3), Vec3::Constant(0.5), C2(1, 0)}, ex, {}, ez});
  rc.states.push_back({"P1", PlaneWaveProxy{Vec3(1, 0, 1) * (5.0 / std::sqrt(2.0)), {}, 1}, ez, {}, {}});
  rc.states.push_back({"P2", PlaneWaveProxy{Vec3(0, 3, 4), {}, -1}, ey, {}, {}});
  const int modes[4][3] = {{1, 1, 0}, {-1, 1, 0}, {1, 1, 1}, {1, 2, 1}};
  for (const auto& m : modes) {
    std::string name = std::string("Y") + (m[0] > 0 ? "+" : "-") + std::to_string(m[1]) + std::to_string(m[2]);
    rc.states.push_back({name, SphericalMode{m[0], m[1], m[2], 5.0, 0.2}, ez, {}, {}});
  }
  return rc;
}

RunConfig run_config_from_json(const json& j) {
  check_keys(j,
             {"constants", "tolerances", "grid", "states", "I", "I_prime", "suites", "output_dir", "seed",
              "state_files", "threads", "auto_grid"},
             "config");
  RunConfig rc = default_run_config();
  if (j.contains("constants")) rc.constants = config_from_json(j["constants"], rc.constants);
  if (j.contains("tolerances")) {
    check_keys(j["tolerances"], {"tol_quad", "tol_fd"}, "tolerances");
    rc.constants = config_from_json(j["tolerances"], rc.constants);
  }
  if (j.contains("auto_grid")) {
    const json& a = j["auto_grid"];
    check_keys(a, {"box_points", "shell_points", "extent"}, "auto_grid");
    if (a.contains("box_points")) rc.box_points = whole(a["box_points"], "auto_grid.box_points");
    if (a.contains("shell_points")) {
      const json& s = a["shell_points"];
      if (!s.is_array() || s.size() != 3) bad("auto_grid.shell_points must be three integers");
      for (int i = 0; i < 3; ++i) rc.shell_points[i] = whole(s[i], "auto_grid.shell_points");
    }
    if (a.contains("extent")) rc.auto_extent = number(a["extent"], "auto_grid.extent");
    if (rc.box_points < 8) bad("auto_grid.box_points must be at least 8");
    if (!(rc.auto_extent > 0.0)) bad("auto_grid.extent must be positive");
  }
  if (j.contains("grid")) rc.grid = grid_descriptor_from_json(j["grid"]);
  if (j.contains("I")) rc.I = unit_from_json(j["I"], "I");
  if (j.contains("I_prime")) rc.I_prime = unit_from_json(j["I_prime"], "I_prime");
  if (j.contains("states")) {
    if (!j["states"].is_array()) bad("states must be a list");
    rc.states.clear();
    for (const auto& s : j["states"]) rc.states.push_back(entry_from_json(s, rc.I));
    std::vector<std::string> names;
    for (const auto& s : rc.states) names.push_back(s.name);
    std::sort(names.begin(), names.end());
    if (std::adjacent_find(names.begin(), names.end()) != names.end()) bad("duplicate state names");
  }
  if (j.contains("suites")) {
    const json& s = j["suites"];
    rc.suites.clear();
    if (s.is_string()) {
      rc.suites.push_back(s.get<std::string>());
    } else if (s.is_array()) {
      for (const auto& x : s) rc.suites.push_back(text(x, "suites entry"));
    } else {
      bad("suites must be a name or a list of names");
    }
    selected_suites(rc.suites);
  }
  if (j.contains("output_dir")) rc.output_dir = text(j["output_dir"], "output_dir");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("seed must be a non-negative integer");
    rc.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("state_files")) {
    if (!j["state_files"].is_array()) bad("state_files must be a list");
    for (const auto& f : j["state_files"]) rc.state_files.push_back(text(f, "state_files entry"));
  }
  if (j.contains("threads")) {
    rc.threads = whole(j["threads"], "threads");
    if (rc.threads < 0) bad("threads must be non-negative");
  }
  return rc;
}

json to_json(const RunConfig& rc) {
  json j;
  j["constants"] = to_json(rc.constants);
  if (rc.grid) j["grid"] = to_json(*rc.grid);
  j["states"] = json::array();
  for (const auto& e : rc.states) {
    json s{{"name", e.name}, {"mode", to_json(e.mode)}, {"I", vec_to_json(e.I)}};
    if (e.grid) s["grid"] = to_json(*e.grid);
    if (e.I_prime) s["I_prime"] = vec_to_json(*e.I_prime);
    j["states"].push_back(s);
  }
  j["I"] = vec_to_json(rc.I);
  j["I_prime"] = vec_to_json(rc.I_prime);
  j["suites"] = rc.suites;
  j["output_dir"] = rc.output_dir;
  j["seed"] = rc.seed;
  j["state_files"] = rc.state_files;
  j["threads"] = rc.threads;
  j["auto_grid"] = {{"box_points", rc.box_points}, {"shell_points", rc.shell_points}, {"extent", rc.auto_extent}};
  return j;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    bad(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return run_config_from_json(j);
  } catch (const json::exception& e) {
    bad(e.what());
  }
}

void apply_override(RunConfig& rc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) bad("override '" + assignment + "' is not KEY=VAL");
  const std::string key = assignment.substr(0, eq);
  const std::string val = assignment.substr(eq + 1);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(val.data(), val.data() + val.size(), x);
  if (ec != std::errc() || ptr != val.data() + val.size()) bad("override value '" + val + "' is not a number");
  json j;
  if (key == "fd_order") {
    if (x != static_cast<int>(x)) bad("fd_order must be an integer");
    j[key] = static_cast<int>(x);
  } else if (key == "tol_quad" || key == "tol_fd") {
    j[key] = x;
  } else {
    bad("unknown override key '" + key + "'");
  }
  rc.constants = config_from_json(j, rc.constants);
}

GridDescriptor auto_grid(const ModeSpec& mode, const Vec3& I, int box_points, std::array<int, 3> shell_points,
                         double extent) {
  if (const auto* g = std::get_if<GaussianPacket>(&mode)) return box_around(g->k0, g->widths, I, box_points, extent);
  if (const auto* p = std::get_if<PlaneWaveProxy>(&mode))
    return box_around(p->k0, p->effective_widths(), I, box_points, extent);
  const auto& m = std::get<SphericalMode>(mode);
  GridDescriptor d;
  d.kind = GridKind::SphericalProduct;
  d.shell.k_min = std::max(m.k0 - extent * m.shell_width, 1e-3 * m.k0);
  d.shell.k_max = m.k0 + extent * m.shell_width;
  d.shell.n_rad = shell_points[0];
  d.shell.n_pol = shell_points[1];
  d.shell.n_az = shell_points[2];
  d.I_ref = I;
  return d;
}

GridDescriptor grid_for(const RunConfig& rc, const StateEntry& e) {
  if (e.grid) return *e.grid;
  if (rc.grid) return *rc.grid;
  return auto_grid(e.mode, e.I, rc.box_points, rc.shell_points, rc.auto_extent);
}

TwoCompState build_entry(const RunConfig& rc, const StateEntry& e) {
  return build_state(make_grid(grid_for(rc, e), rc.constants), e.mode, e.I);
}

std::vector<std::string> selected_suites(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& s : known_suites()) {
    const bool chosen = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
      return n == s || n == "all";
    });
    if (chosen) out.push_back(s);
  }
  for (const auto& n : names)
    if (n != "all" && std::find(known_suites().begin(), known_suites().end(), n) == known_suites().end())
      bad("unknown suite '" + n + "'");
  return out;
}

}  // namespace helika
