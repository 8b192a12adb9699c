#include "helika/report.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "helika/error.hpp"

namespace helika {

namespace {

double max_abs(const std::vector<Complex>& v) {
  double m = 0.0;
  for (const auto& x : v) m = std::max(m, std::abs(x));
  return m;
}

nlohmann::json complex_list(const std::vector<Complex>& v) {
  auto arr = nlohmann::json::array();
  for (const auto& x : v) arr.push_back({x.real(), x.imag()});
  return arr;
}

std::vector<Complex> complex_list(const nlohmann::json& j) {
  std::vector<Complex> out;
  for (const auto& x : j) out.emplace_back(x.at(0).get<double>(), x.at(1).get<double>());
  return out;
}

double number_or_inf(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

ObservableReport ObservableReport::compare(std::string name, std::vector<Complex> value,
                                           std::vector<Complex> reference, double tolerance) {
  if (value.size() != reference.size())
    throw Error(ErrorCode::InvalidArgument, "value and reference sizes differ");
  ObservableReport r;
  r.name = std::move(name);
  double err = 0.0;
  for (std::size_t i = 0; i < value.size(); ++i) err = std::max(err, std::abs(value[i] - reference[i]));
  const double scale = max_abs(reference);
  r.abs_err = err;
  if (scale > 0.0)
    r.rel_err = err / scale;
  else
    r.rel_err = err == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  r.value = std::move(value);
  r.reference = std::move(reference);
  r.tolerance = tolerance;
  r.pass = r.abs_err <= tolerance || r.rel_err <= tolerance;
  return r;
}

ObservableReport ObservableReport::residual(std::string name, double residual, double tolerance) {
  return compare(std::move(name), {Complex(residual)}, {Complex(0.0)}, tolerance);
}

nlohmann::json to_json(const ObservableReport& r) {
  nlohmann::json j;
  j["name"] = r.name;
  j["value"] = complex_list(r.value);
  j["reference"] = complex_list(r.reference);
  j["abs_err"] = r.abs_err;
  if (std::isfinite(r.rel_err))
    j["rel_err"] = r.rel_err;
  else
    j["rel_err"] = nullptr;
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

ObservableReport report_from_json(const nlohmann::json& j) {
  ObservableReport r;
  r.name = j.at("name").get<std::string>();
  r.value = complex_list(j.at("value"));
  r.reference = complex_list(j.at("reference"));
  r.abs_err = number_or_inf(j.at("abs_err"));
  r.rel_err = number_or_inf(j.at("rel_err"));
  r.tolerance = j.at("tolerance").get<double>();
  r.pass = j.at("pass").get<bool>();
  r.note = j.value("note", "");
  return r;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string csv_header() {
  return "name,component,value_re,value_im,reference_re,reference_im,abs_err,rel_err,tolerance,pass";
}

std::string to_csv_rows(const ObservableReport& r) {
  std::string out;
  for (std::size_t i = 0; i < r.value.size(); ++i) {
    const Complex ref = i < r.reference.size() ? r.reference[i] : Complex(0.0);
    out += csv_escape(r.name) + ',' + std::to_string(i) + ',' + format_double(r.value[i].real()) +
           ',' + format_double(r.value[i].imag()) + ',' + format_double(ref.real()) + ',' +
           format_double(ref.imag()) + ',' + format_double(r.abs_err) + ',' +
           format_double(r.rel_err) + ',' + format_double(r.tolerance) + ',' +
           (r.pass ? "true" : "false") + '\n';
  }
  return out;
}

}  // namespace helika
