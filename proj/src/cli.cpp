#include "helika/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "helika/gauge.hpp"
#include "helika/operators.hpp"
#include "helika/verify.hpp"

namespace helika {

using nlohmann::json;
namespace fs = std::filesystem;

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::ConfigError:
    case ErrorCode::BoxContainsOrigin:
    case ErrorCode::DegenerateAxis:
    case ErrorCode::BadShellBounds:
      return kExitConfig;
    case ErrorCode::IoError:
      return kExitIo;
    default:
      return kExitDomain;
  }
}

namespace {

struct Globals {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
  int threads = 0;
  std::string format = "json";
};

RunConfig load_config(const Globals& g) {
  RunConfig rc = g.config.empty() ? default_run_config() : load_run_config(g.config);
  for (const auto& o : g.overrides) apply_override(rc, o);
  if (!g.out.empty()) rc.output_dir = g.out;
  rc.threads = resolve_threads(g.threads, rc.threads);
  return rc;
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create directory " + dir + ": " + ec.message());
  return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  f << text;
  if (!f) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::string render(const std::vector<ObservableReport>& reports, const std::string& format, json header) {
  if (format == "csv") {
    std::string s = csv_header() + "\n";
    for (const auto& r : reports) s += to_csv_rows(r);
    return s;
  }
  header["reports"] = json::array();
  for (const auto& r : reports) header["reports"].push_back(to_json(r));
  return header.dump(2) + "\n";
}

bool all_pass(const std::vector<ObservableReport>& reports) {
  for (const auto& r : reports)
    if (!r.pass) return false;
  return true;
}

/// Same state on an equivalent grid carrying `c` (tolerance overrides on stored states).
TwoCompState with_config(const TwoCompState& s, const Config& c) {
  if (s.grid().config() == c) return s;
  TwoCompState out = s;
  out.ftilde.grid = make_grid(describe(s.grid()), c);
  return out;
}

// ---------------------------------------------------------------------------

int cmd_make_state(const Globals& g, const std::vector<std::string>& names, const std::string& rep,
                   std::ostream& out) {
  const RunConfig rc = load_config(g);
  const fs::path dir = ensure_dir(rc.output_dir);
  for (const auto& n : names) {
    bool found = false;
    for (const auto& e : rc.states) found = found || e.name == n;
    if (!found) throw Error(ErrorCode::ConfigError, "no state named '" + n + "'");
  }
  for (const auto& e : rc.states) {
    if (!names.empty() && std::find(names.begin(), names.end(), e.name) == names.end()) continue;
    const TwoCompState s = build_entry(rc, e);
    const fs::path path = dir / (e.name + ".state");
    if (rep == "lab")
      save_state(path.string(), to_lab(s), s.I, e.mode, e.name);
    else
      save_state(path.string(), s, e.mode, e.name);
    out << path.string() << "\n";
  }
  return kExitOk;
}

void observe_op(const std::string& op, const TwoCompState& s, std::vector<ObservableReport>& reports) {
  const double hbar = s.grid().config().hbar;
  if (op == "oam") {
    const ObservableReport lam = expect(OpId::OamLambda, s);
    const ObservableReport m = expect(OpId::OamM, s);
    const ObservableReport l = expect(OpId::OamTotal, s);
    std::vector<Complex> sum(3);
    for (int a = 0; a < 3; ++a) sum[a] = lam.value[a] + m.value[a];
    reports.push_back(lam);
    reports.push_back(m);
    reports.push_back(l);
    ObservableReport add = ObservableReport::compare("oam_additivity", l.value, sum, 1e-12);
    reports.push_back(add);
  } else if (op == "barycenter") {
    const Barycenter b = barycenter(s);
    ObservableReport r = ObservableReport::compare("barycenter", {b.b[0], b.b[1], b.b[2]},
                                                   {b.b[0], b.b[1], b.b[2]}, 0.0);
    ObservableReport c = ObservableReport::compare(
        "canonical_center", {b.canonical_center[0], b.canonical_center[1], b.canonical_center[2]},
        {b.canonical_center[0], b.canonical_center[1], b.canonical_center[2]}, 0.0);
    reports.push_back(r);
    reports.push_back(c);
  } else if (op == "spin_squared") {
    const VectorState lab = to_lab(s);
    reports.push_back(
        ObservableReport::compare("spin_squared", {spin_squared(lab) * hbar * hbar}, {norm_squared(lab) * hbar * hbar}, 1e-10));
  } else if (op == "norm") {
    reports.push_back(ObservableReport::compare("norm", {norm_squared(s)}, {1.0}, s.grid().config().tol_quad));
  } else {
    reports.push_back(expect(op_from_string(op), s));
  }
}

int cmd_observe(const Globals& g, const std::string& path, const std::vector<std::string>& ops, std::ostream& out) {
  StoredState st = load_state(path);
  TwoCompState s = st.intrinsic() ? std::get<TwoCompState>(st.state) : to_intrinsic(std::get<VectorState>(st.state), st.I);
  Config c = s.grid().config();
  if (!g.overrides.empty()) {
    RunConfig tmp;
    tmp.constants = c;
    for (const auto& o : g.overrides) apply_override(tmp, o);
    s = with_config(s, tmp.constants);
  }
  const std::vector<std::string> list = ops.empty() ? std::vector<std::string>{"helicity", "spin", "oam"} : ops;
  std::vector<ObservableReport> reports;
  for (const auto& op : list) observe_op(op, s, reports);
  const std::string text = render(reports, g.format, {{"state", st.name.empty() ? fs::path(path).stem().string() : st.name},
                                                      {"pass", all_pass(reports)}});
  out << text;
  if (!g.out.empty()) write_text(ensure_dir(g.out) / (g.format == "csv" ? "observe.csv" : "observe.json"), text);
  return all_pass(reports) ? kExitOk : kExitVerifyFailed;
}

int cmd_verify(const Globals& g, const std::vector<std::string>& suites, const std::vector<std::string>& files,
               std::ostream& out) {
  RunConfig rc = load_config(g);
  if (!suites.empty()) {
    selected_suites(suites);
    rc.suites = suites;
  }
  for (const auto& f : files) rc.state_files.push_back(f);
  const VerifySummary summary = verify(rc);
  for (const auto& c : summary.checks) {
    out << (c.pass ? "PASS " : "FAIL ") << c.id;
    if (!c.error.empty()) {
      out << "  " << c.error;
    } else if (!c.pass) {
      for (const auto& r : c.reports)
        if (!r.pass) {
          out << "  " << r.name << " abs_err=" << format_double(r.abs_err) << " tol=" << format_double(r.tolerance);
          break;
        }
    }
    out << "\n";
  }
  for (const auto& s : summary.skipped) out << "SKIP " << s.id << "  " << s.reason << "\n";
  const auto failing = summary.failing();
  out << (summary.checks.size() - failing.size()) << "/" << summary.checks.size() << " checks passed\n";
  const fs::path dir = ensure_dir(rc.output_dir);
  if (g.format == "csv")
    write_text(dir / "verify.csv", to_csv(summary));
  else
    write_text(dir / "verify.json", to_json(summary).dump(2) + "\n");
  return failing.empty() ? kExitOk : kExitVerifyFailed;
}

int declared_helicity(const ModeSpec& m) {
  if (const auto* p = std::get_if<PlaneWaveProxy>(&m)) return p->sigma;
  if (const auto* p = std::get_if<SphericalMode>(&m)) return p->sigma;
  const C2 a = std::get<GaussianPacket>(m).amps.normalized();
  const double h = a.dot(apply_sigma(a)).real();
  return std::abs(h + 1.0) < 1e-8 ? -1 : 1;
}

int cmd_gauge(const Globals& g, const std::vector<std::string>& names, std::ostream& out) {
  const RunConfig rc = load_config(g);
  const fs::path dir = ensure_dir(rc.output_dir);
  std::vector<const StateEntry*> chosen;
  for (const auto& n : names) {
    auto it = std::find_if(rc.states.begin(), rc.states.end(), [&](const StateEntry& e) { return e.name == n; });
    if (it == rc.states.end()) throw Error(ErrorCode::ConfigError, "no state named '" + n + "'");
    chosen.push_back(&*it);
  }
  if (names.empty()) {
    // Default selection: helicity eigenpackets on box grids.
    for (const auto& e : rc.states) {
      if (grid_for(rc, e).kind != GridKind::UniformBox) continue;
      if (const auto* p = std::get_if<GaussianPacket>(&e.mode)) {
        const C2 a = p->amps.normalized();
        if (std::abs(std::abs(a.dot(apply_sigma(a)).real()) - 1.0) > 1e-8) continue;
      }
      chosen.push_back(&e);
    }
  }
  std::vector<ObservableReport> reports;
  for (const StateEntry* e : chosen) {
    const TwoCompState s = build_entry(rc, *e);
    const Vec3 Ip = e->I_prime.value_or(rc.I_prime);
    const int sigma = declared_helicity(e->mode);
    const GaugeField gf = gauge_field(s.I, Ip, s.ftilde.grid);
    const VectorState lab = to_lab(s);
    const VectorState lab2 = second_class(lab, s.I, Ip);
    BerryPhase bp = berry_phase_extract(lab, lab2, sigma, gf);
    const fs::path csv = dir / ("gauge_" + e->name + ".csv");
    write_gauge_csv(csv.string(), gf, &bp.phase, sigma);
    bp.report.name = e->name + ".berry_phase";
    reports.push_back(bp.report);
    if (s.grid().kind() == GridKind::UniformBox) {
      ObservableReport shift = gauge_shift_residual(s.I, Ip, s.ftilde.grid);
      shift.name = e->name + "." + shift.name;
      reports.push_back(shift);
    }
    out << csv.string() << "\n";
  }
  const std::string text = render(reports, g.format, {{"pass", all_pass(reports)}});
  write_text(dir / (g.format == "csv" ? "gauge.csv" : "gauge.json"), text);
  for (const auto& r : reports)
    out << (r.pass ? "PASS " : "FAIL ") << r.name << " max_err=" << format_double(r.abs_err) << "\n";
  return all_pass(reports) ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"k-space photon-state toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Run configuration (JSON)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--tol-override", g.overrides, "Tolerance override KEY=VAL (tol_quad, tol_fd, fd_order)");
  app.add_option("--threads", g.threads, "Worker threads (default: HELIKA_THREADS or all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}));

  std::vector<std::string> names;
  std::string rep = "intrinsic";
  auto* make = app.add_subcommand("make-state", "Build the configured states and save them");
  make->add_option("--state", names, "Only these states");
  make->add_option("--representation", rep, "intrinsic or lab")->check(CLI::IsMember({"intrinsic", "lab"}));

  std::string state_path;
  std::vector<std::string> ops;
  auto* observe = app.add_subcommand("observe", "Expectation values on a saved state");
  observe->add_option("state", state_path, "State file")->required();
  observe->add_option("--op", ops, "Observables (operator names, oam, barycenter, spin_squared, norm)")
      ->delimiter(',');

  std::vector<std::string> suites, files;
  auto* ver = app.add_subcommand("verify", "Run the verification suites");
  ver->add_option("--suite", suites, "frames, algebra, gauge, fields or all")->delimiter(',');
  ver->add_option("--state-file", files, "Extra saved states to verify");

  auto* gauge = app.add_subcommand("gauge", "Berry transformation experiments");
  gauge->add_option("--state", names, "Only these states");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*make) return cmd_make_state(g, names, rep, out);
    if (*observe) return cmd_observe(g, state_path, ops, out);
    if (*ver) return cmd_verify(g, suites, files, out);
    if (*gauge) return cmd_gauge(g, names, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.code());
  } catch (const json::exception& e) {
    err << "error: ConfigError: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitConfig;
}

}  // namespace helika
