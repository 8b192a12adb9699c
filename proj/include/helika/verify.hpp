#pragma once

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "helika/run_config.hpp"

namespace helika {

/// One verification unit: a batch of reports that pass or fail together.
struct CheckResult {
  std::string id;
  std::string suite;
  std::vector<ObservableReport> reports;
  /// Set when the check threw; the error text starts with the ErrorCode name.
  std::string error;
  bool pass = false;
};

struct Check {
  std::string id;
  std::string suite;
  std::function<std::vector<ObservableReport>()> run;
};

struct Skipped {
  std::string id;
  std::string reason;
};

struct VerifySummary {
  std::vector<std::string> suites;
  std::vector<CheckResult> checks;
  std::vector<Skipped> skipped;

  bool pass() const;
  std::vector<std::string> failing() const;
};

/// Runs every check on a pool of `threads` workers (0 = hardware concurrency).
/// Results keep the order of `checks` whatever the scheduling.
std::vector<CheckResult> run_checks(const std::vector<Check>& checks, int threads);

/// Loads, builds and verifies every state of the run for the selected suites.
VerifySummary verify(const RunConfig& rc);

nlohmann::json to_json(const VerifySummary& s);
/// CSV with a check column in front of the report columns.
std::string to_csv(const VerifySummary& s);

/// Curl of A_{e_z} against -w/k^2 and the e_z -> e_x gauge shift on boxes around (3,3,3)
/// with 17, 33 and 65 points per axis. Errors are taken on the inner half of the box,
/// which every level samples at the same coarse nodes, so the ratios isolate the
/// stencil order from the one-sided boundary rows.
std::vector<ObservableReport> monopole_convergence(const Config& c);

/// Resolves --threads, then HELIKA_THREADS, then the config value.
int resolve_threads(int cli_value, int config_value);

}  // namespace helika
