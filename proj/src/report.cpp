#include "toppose/report.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace toppose {

std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& r) {
  return {{"AP", r.ap},    {"AP.5", r.ap50}, {"AP.75", r.ap75}, {"AP_M", r.ap_medium},
          {"AP_L", r.ap_large}, {"AR", r.ar},    {"AR.5", r.ar50}, {"AR.75", r.ar75},
          {"AR_M", r.ar_medium}, {"AR_L", r.ar_large}};
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string format_report(const EvalReport& report) {
  std::string header, values;
  char cell[32];
  for (const auto& [name, value] : report_metrics(report)) {
    std::snprintf(cell, sizeof(cell), "%8s", name.c_str());
    header += cell;
    if (std::isnan(value))
      std::snprintf(cell, sizeof(cell), "%8s", "nan");
    else
      std::snprintf(cell, sizeof(cell), "%8.3f", value);
    values += cell;
  }
  return header + "\n" + values + "\n";
}

std::string report_csv(const EvalReport& report) {
  std::string out = "metric,value\n";
  for (const auto& [name, value] : report_metrics(report))
    out += name + "," + format_number(value) + "\n";
  return out;
}

}  // namespace toppose
