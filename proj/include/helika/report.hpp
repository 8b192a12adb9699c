#pragma once

#include <string>
#include <vector>

#include "json.hpp"

#include "helika/linalg.hpp"

namespace helika {

/// A measured quantity next to its reference value, with the verdict at `tolerance`.
/// pass holds iff abs_err <= tolerance or rel_err <= tolerance.
struct ObservableReport {
  std::string name;
  std::vector<Complex> value;
  std::vector<Complex> reference;
  double abs_err = 0.0;
  double rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string note;

  /// Max-norm errors over components; rel_err is infinite when the reference vanishes.
  static ObservableReport compare(std::string name, std::vector<Complex> value,
                                  std::vector<Complex> reference, double tolerance);
  /// Report on a residual that should vanish: value = residual, reference = 0, abs_err = |residual|.
  static ObservableReport residual(std::string name, double residual, double tolerance);
};

nlohmann::json to_json(const ObservableReport& r);
ObservableReport report_from_json(const nlohmann::json& j);

/// CSV table with one row per report component.
std::string csv_header();
std::string to_csv_rows(const ObservableReport& r);

/// Shortest round-trippable decimal form used by every text writer.
std::string format_double(double x);

}  // namespace helika
