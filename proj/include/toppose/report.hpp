#pragma once

#include <string>
#include <utility>
#include <vector>

#include "toppose/eval.hpp"

namespace toppose {

/// (name, value) in column order: AP, AP.5, AP.75, AP_M, AP_L, AR, ...
std::vector<std::pair<std::string, double>> report_metrics(const EvalReport& report);

/// Two aligned lines: header and values. Undefined cells print as "nan".
std::string format_report(const EvalReport& report);

/// "metric,value" CSV.
std::string report_csv(const EvalReport& report);

/// Shortest round-trip decimal for a double, "nan" for NaN.
std::string format_number(double value);

}  // namespace toppose
