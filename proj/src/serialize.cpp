#include "helika/serialize.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "helika/report.hpp"

namespace helika {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& what) { throw Error(ErrorCode::ConfigError, what); }

void allow_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
  if (!j.is_object()) bad(std::string(where) + " must be an object");
  std::set<std::string> ok(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) bad(std::string("unknown key '") + k + "' in " + where);
}

const json& need(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) bad(std::string("missing '") + key + "' in " + where);
  return j.at(key);
}

double num(const json& j, const char* what) {
  if (!j.is_number()) bad(std::string(what) + " must be a number");
  return j.get<double>();
}

int integer(const json& j, const char* what) {
  if (!j.is_number_integer()) bad(std::string(what) + " must be an integer");
  return j.get<int>();
}

std::array<int, 3> int3(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) bad(std::string(what) + " must be three integers");
  return {integer(j[0], what), integer(j[1], what), integer(j[2], what)};
}

Complex complex_from_json(const json& j, const char* what) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {num(j[0], what), num(j[1], what)};
  bad(std::string(what) + " entries must be numbers or [re, im] pairs");
}

json complex_to_json(const Complex& c) { return json::array({c.real(), c.imag()}); }

std::string kind_name(GridKind k) { return k == GridKind::UniformBox ? "box" : "sphere"; }

template <class T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_header_and_open(std::ofstream& out, const std::string& path, const json& header) {
  out.open(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  out << header.dump() << '\n';
}

json state_header(const KGrid& g, const char* rep, int comps, const Vec3& I, double t,
                  const std::optional<ModeSpec>& spec, const std::string& name, bool has_valid) {
  json h;
  h["format"] = "helika-state";
  h["version"] = 1;
  h["representation"] = rep;
  h["grid"] = to_json(describe(g));
  h["constants"] = to_json(g.config());
  h["I"] = vec_to_json(I);
  h["t"] = t;
  h["spec"] = spec ? to_json(*spec) : json(nullptr);
  h["name"] = name;
  h["components"] = comps;
  h["nodes"] = g.size();
  h["has_valid"] = has_valid;
  return h;
}

template <class Vec>
void write_payload(std::ofstream& out, const std::vector<Vec>& values, const std::vector<std::uint8_t>& valid) {
  for (const auto& v : values)
    for (Eigen::Index c = 0; c < v.size(); ++c) {
      put(out, v[c].real());
      put(out, v[c].imag());
    }
  if (!valid.empty()) out.write(reinterpret_cast<const char*>(valid.data()), valid.size());
}

void csv_prefix(std::ofstream& out, const KGrid& g, std::size_t i) {
  const Vec3& k = g.node(i);
  out << i << ',' << format_double(k[0]) << ',' << format_double(k[1]) << ',' << format_double(k[2])
      << ',' << (g.masked(i) ? 1 : 0);
}

std::ofstream open_text(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
  return out;
}

}  // namespace

void check_keys(const json& j, std::initializer_list<const char*> keys, const char* where) {
  allow_keys(j, keys, where);
}

json vec_to_json(const Vec3& v) { return json::array({v[0], v[1], v[2]}); }

Vec3 vec_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) bad(std::string(what) + " must be a 3-vector");
  return Vec3(num(j[0], what), num(j[1], what), num(j[2], what));
}

GridDescriptor describe(const KGrid& g) {
  GridDescriptor d;
  d.kind = g.kind();
  d.box = g.box();
  d.shell = g.shell();
  d.I_ref = g.I_ref();
  d.mask_angle = g.mask_angle();
  d.extra_mask_axes = g.extra_mask_axes();
  return d;
}

GridPtr make_grid(const GridDescriptor& d, const Config& config) {
  if (d.kind == GridKind::UniformBox)
    return build_box_grid(d.box.center, d.box.half_widths, d.box.npts, d.I_ref, d.mask_angle, config,
                          d.extra_mask_axes);
  return build_spherical_grid(d.shell.k_min, d.shell.k_max, d.shell.n_rad, d.shell.n_pol, d.shell.n_az,
                              d.I_ref, d.mask_angle, config, d.extra_mask_axes);
}

json to_json(const GridDescriptor& d) {
  json j;
  j["kind"] = kind_name(d.kind);
  if (d.kind == GridKind::UniformBox) {
    j["center"] = vec_to_json(d.box.center);
    j["half_widths"] = vec_to_json(d.box.half_widths);
    j["npts"] = d.box.npts;
  } else {
    j["k_min"] = d.shell.k_min;
    j["k_max"] = d.shell.k_max;
    j["n_rad"] = d.shell.n_rad;
    j["n_pol"] = d.shell.n_pol;
    j["n_az"] = d.shell.n_az;
  }
  j["I_ref"] = vec_to_json(d.I_ref);
  j["mask_angle"] = d.mask_angle;
  j["extra_mask_axes"] = json::array();
  for (const auto& a : d.extra_mask_axes) j["extra_mask_axes"].push_back(vec_to_json(a));
  return j;
}

GridDescriptor grid_descriptor_from_json(const json& j) {
  GridDescriptor d;
  if (!j.is_object()) bad("grid must be an object");
  const std::string kind = need(j, "kind", "grid").get<std::string>();
  if (kind == "box") {
    allow_keys(j, {"kind", "center", "half_widths", "npts", "I_ref", "mask_angle", "extra_mask_axes"}, "grid");
    d.kind = GridKind::UniformBox;
    d.box.center = vec_from_json(need(j, "center", "grid"), "grid.center");
    d.box.half_widths = vec_from_json(need(j, "half_widths", "grid"), "grid.half_widths");
    d.box.npts = int3(need(j, "npts", "grid"), "grid.npts");
  } else if (kind == "sphere") {
    allow_keys(j, {"kind", "k_min", "k_max", "n_rad", "n_pol", "n_az", "I_ref", "mask_angle", "extra_mask_axes"},
               "grid");
    d.kind = GridKind::SphericalProduct;
    d.shell.k_min = num(need(j, "k_min", "grid"), "grid.k_min");
    d.shell.k_max = num(need(j, "k_max", "grid"), "grid.k_max");
    d.shell.n_rad = integer(need(j, "n_rad", "grid"), "grid.n_rad");
    d.shell.n_pol = integer(need(j, "n_pol", "grid"), "grid.n_pol");
    d.shell.n_az = integer(need(j, "n_az", "grid"), "grid.n_az");
  } else {
    bad("grid.kind must be 'box' or 'sphere'");
  }
  if (j.contains("I_ref")) d.I_ref = vec_from_json(j["I_ref"], "grid.I_ref");
  if (j.contains("mask_angle")) d.mask_angle = num(j["mask_angle"], "grid.mask_angle");
  if (j.contains("extra_mask_axes")) {
    if (!j["extra_mask_axes"].is_array()) bad("grid.extra_mask_axes must be a list");
    for (const auto& a : j["extra_mask_axes"]) d.extra_mask_axes.push_back(vec_from_json(a, "mask axis"));
  }
  return d;
}

json to_json(const Config& c) {
  return json{{"hbar", c.hbar}, {"c", c.c},           {"eps0", c.eps0},
              {"fd_order", c.fd_order}, {"tol_quad", c.tol_quad}, {"tol_fd", c.tol_fd}};
}

Config config_from_json(const json& j, Config c) {
  allow_keys(j, {"hbar", "c", "eps0", "fd_order", "tol_quad", "tol_fd"}, "constants");
  if (j.contains("hbar")) c.hbar = num(j["hbar"], "hbar");
  if (j.contains("c")) c.c = num(j["c"], "c");
  if (j.contains("eps0")) c.eps0 = num(j["eps0"], "eps0");
  if (j.contains("fd_order")) c.fd_order = integer(j["fd_order"], "fd_order");
  if (j.contains("tol_quad")) c.tol_quad = num(j["tol_quad"], "tol_quad");
  if (j.contains("tol_fd")) c.tol_fd = num(j["tol_fd"], "tol_fd");
  try {
    c.validate();
  } catch (const Error& e) {
    bad(e.what());
  }
  return c;
}

json to_json(const ModeSpec& m) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, GaussianPacket>) {
          return {{"type", "gaussian"},
                  {"k0", vec_to_json(s.k0)},
                  {"widths", vec_to_json(s.widths)},
                  {"amps", json::array({complex_to_json(s.amps[0]), complex_to_json(s.amps[1])})}};
        } else if constexpr (std::is_same_v<T, SphericalMode>) {
          return {{"type", "spherical"}, {"sigma", s.sigma}, {"lambda", s.lambda},
                  {"mu", s.mu},          {"k0", s.k0},       {"shell_width", s.shell_width}};
        } else {
          json j{{"type", "plane_wave"}, {"k0", vec_to_json(s.k0)}, {"sigma", s.sigma}};
          if (s.widths) j["widths"] = vec_to_json(*s.widths);
          return j;
        }
      },
      m);
}

ModeSpec mode_from_json(const json& j) {
  if (!j.is_object()) bad("mode must be an object");
  const std::string type = need(j, "type", "mode").get<std::string>();
  ModeSpec out;
  if (type == "gaussian") {
    allow_keys(j, {"type", "k0", "widths", "amps"}, "gaussian mode");
    GaussianPacket p;
    p.k0 = vec_from_json(need(j, "k0", "mode"), "k0");
    p.widths = vec_from_json(need(j, "widths", "mode"), "widths");
    const json& a = need(j, "amps", "mode");
    if (!a.is_array() || a.size() != 2) bad("amps must have two entries");
    p.amps = C2(complex_from_json(a[0], "amps"), complex_from_json(a[1], "amps"));
    out = p;
  } else if (type == "spherical") {
    allow_keys(j, {"type", "sigma", "lambda", "mu", "k0", "shell_width"}, "spherical mode");
    SphericalMode m;
    m.sigma = integer(need(j, "sigma", "mode"), "sigma");
    m.lambda = integer(need(j, "lambda", "mode"), "lambda");
    m.mu = integer(need(j, "mu", "mode"), "mu");
    m.k0 = num(need(j, "k0", "mode"), "k0");
    m.shell_width = num(need(j, "shell_width", "mode"), "shell_width");
    out = m;
  } else if (type == "plane_wave") {
    allow_keys(j, {"type", "k0", "widths", "sigma"}, "plane_wave mode");
    PlaneWaveProxy p;
    p.k0 = vec_from_json(need(j, "k0", "mode"), "k0");
    p.sigma = integer(need(j, "sigma", "mode"), "sigma");
    if (j.contains("widths")) p.widths = vec_from_json(j["widths"], "widths");
    out = p;
  } else {
    bad("mode.type must be gaussian, spherical or plane_wave");
  }
  try {
    validate(out);
  } catch (const Error& e) {
    bad(e.what());
  }
  return out;
}

void save_state(const std::string& path, const TwoCompState& s, const std::optional<ModeSpec>& spec,
                const std::string& name) {
  std::ofstream out;
  write_header_and_open(out, path,
                        state_header(s.grid(), "intrinsic", 2, s.I, s.t, spec, name, !s.ftilde.valid.empty()));
  write_payload(out, s.ftilde.values, s.ftilde.valid);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void save_state(const std::string& path, const VectorState& s, const Vec3& I,
                const std::optional<ModeSpec>& spec, const std::string& name) {
  std::ofstream out;
  write_header_and_open(out, path, state_header(s.grid(), "lab", 3, I, s.t, spec, name, !s.f.valid.empty()));
  write_payload(out, s.f.values, s.f.valid);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

StoredState load_state(const std::string& path) {
  static_assert(std::endian::native == std::endian::little, "state files are little-endian");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, path + ": missing header");
  StoredState st;
  GridPtr grid;
  int comps = 0;
  bool has_valid = false;
  std::size_t nodes = 0;
  double t = 0.0;
  std::string rep;
  try {
    const json h = json::parse(line);
    if (h.at("format") != "helika-state" || h.at("version") != 1)
      throw Error(ErrorCode::IoError, path + ": not a state file");
    rep = h.at("representation").get<std::string>();
    comps = h.at("components").get<int>();
    nodes = h.at("nodes").get<std::size_t>();
    has_valid = h.at("has_valid").get<bool>();
    t = h.at("t").get<double>();
    st.I = vec_from_json(h.at("I"), "I");
    st.name = h.at("name").get<std::string>();
    if (!h.at("spec").is_null()) st.spec = mode_from_json(h.at("spec"));
    const Config cfg = config_from_json(h.at("constants"));
    grid = make_grid(grid_descriptor_from_json(h.at("grid")), cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(ErrorCode::IoError, path + ": bad header (" + e.what() + ")");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::IoError, path + ": bad header (" + e.what() + ")");
  }
  if (grid->size() != nodes || (rep == "intrinsic" && comps != 2) || (rep == "lab" && comps != 3) ||
      (rep != "intrinsic" && rep != "lab"))
    throw Error(ErrorCode::IoError, path + ": header is inconsistent");

  std::vector<double> raw(nodes * comps * 2);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * sizeof(double)));
  std::vector<std::uint8_t> valid;
  if (has_valid) {
    valid.resize(nodes);
    in.read(reinterpret_cast<char*>(valid.data()), static_cast<std::streamsize>(nodes));
  }
  if (!in) throw Error(ErrorCode::IoError, path + ": truncated payload");
  if (in.peek() != std::char_traits<char>::eof()) throw Error(ErrorCode::IoError, path + ": trailing bytes");

  if (rep == "intrinsic") {
    std::vector<C2> v(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      for (int c = 0; c < 2; ++c) v[i][c] = Complex(raw[(i * 2 + c) * 2], raw[(i * 2 + c) * 2 + 1]);
    st.state = TwoCompState{Field<C2>(grid, std::move(v), std::move(valid)), st.I, t};
  } else {
    std::vector<CVec3> v(nodes);
    for (std::size_t i = 0; i < nodes; ++i)
      for (int c = 0; c < 3; ++c) v[i][c] = Complex(raw[(i * 3 + c) * 2], raw[(i * 3 + c) * 2 + 1]);
    st.state = VectorState{Field<CVec3>(grid, std::move(v), std::move(valid)), t};
  }
  return st;
}

void write_field_csv(const std::string& path, const Field<C2>& f) {
  auto out = open_text(path);
  out << "node,kx,ky,kz,masked,re0,im0,re1,im1\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    csv_prefix(out, *f.grid, i);
    for (int c = 0; c < 2; ++c)
      out << ',' << format_double(f.values[i][c].real()) << ',' << format_double(f.values[i][c].imag());
    out << '\n';
  }
}

void write_field_csv(const std::string& path, const Field<CVec3>& f) {
  auto out = open_text(path);
  out << "node,kx,ky,kz,masked,re0,im0,re1,im1,re2,im2\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    csv_prefix(out, *f.grid, i);
    for (int c = 0; c < 3; ++c)
      out << ',' << format_double(f.values[i][c].real()) << ',' << format_double(f.values[i][c].imag());
    out << '\n';
  }
}

void write_field_csv(const std::string& path, const Field<double>& f) {
  auto out = open_text(path);
  out << "node,kx,ky,kz,masked,value\n";
  for (std::size_t i = 0; i < f.size(); ++i) {
    csv_prefix(out, *f.grid, i);
    out << ',' << format_double(f.values[i]) << '\n';
  }
}

void write_gauge_csv(const std::string& path, const GaugeField& gf, const Field<double>* extracted, int sigma) {
  auto out = open_text(path);
  out << "node,kx,ky,kz,phi";
  if (extracted) out << ",extracted,deviation";
  out << '\n';
  const KGrid& g = *gf.phi.grid;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!gf.phi.usable(i)) continue;
    if (extracted && !extracted->usable(i)) continue;
    const Vec3& k = g.node(i);
    out << i << ',' << format_double(k[0]) << ',' << format_double(k[1]) << ',' << format_double(k[2]) << ','
        << format_double(gf.phi.values[i]);
    if (extracted)
      out << ',' << format_double(extracted->values[i]) << ','
          << format_double(wrap_angle(extracted->values[i] + sigma * gf.phi.values[i]));
    out << '\n';
  }
}

}  // namespace helika
