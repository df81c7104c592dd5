#include "core/jsonio.hpp"

namespace rsnf {

json qc_to_json(const QC& v) {
  return json{{"re", rational_to_string(v.re)}, {"im", rational_to_string(v.im)}};
}

json cd_to_json(const CD& v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v.real());
  std::string re(buf);
  std::snprintf(buf, sizeof buf, "%.17g", v.imag());
  return json{{"re", re}, {"im", std::string(buf)}, {"precision", float_precision_bits()}};
}

QC qc_from_json(const json& j) {
  return QC(parse_rational(j.at("re").get<std::string>()),
            parse_rational(j.at("im").get<std::string>()));
}

CD cd_from_json(const json& j) {
  return CD(std::stod(j.at("re").get<std::string>()), std::stod(j.at("im").get<std::string>()));
}

std::vector<PolarEigenvalue> spectrum_from_json(const json& j) {
  std::vector<PolarEigenvalue> out;
  for (const auto& e : j) {
    out.emplace_back(parse_rational(e.at("modulus").get<std::string>()),
                     parse_rational(e.at("angle").get<std::string>()));
  }
  return out;
}

json spectrum_to_json(const std::vector<PolarEigenvalue>& spec) {
  json out = json::array();
  for (const auto& e : spec)
    out.push_back(json{{"modulus", rational_to_string(e.modulus)},
                       {"angle", rational_to_string(e.angle)}});
  return out;
}

std::vector<VFEigenvalue> vf_spectrum_from_json(const json& j) {
  std::vector<VFEigenvalue> out;
  for (const auto& e : j)
    out.push_back({parse_rational(e.at("a").get<std::string>()),
                   parse_rational(e.at("b").get<std::string>())});
  return out;
}

json validation_report_to_json(const ValidationReport& rep) {
  json clauses = json::array();
  for (const auto& c : rep.clauses) {
    json jc{{"name", c.name}, {"pass", c.pass}};
    if (!c.detail.empty()) jc["detail"] = c.detail;
    clauses.push_back(jc);
  }
  return json{{"all_pass", rep.all_pass()}, {"clauses", clauses}};
}

}  // namespace rsnf
