#include "rig/report.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace rig {

const char* to_string(Severity s) { return s == Severity::Error ? "error" : "warning"; }

bool ValidationReport::ok() const { return count(Severity::Error) == 0; }

std::size_t ValidationReport::count(Severity s) const {
  return static_cast<std::size_t>(std::count_if(
      findings.begin(), findings.end(), [s](const Finding& f) { return f.severity == s; }));
}

ordered_json to_json(const Finding& f) {
  ordered_json j;
  j["severity"] = to_string(f.severity);
  j["code"] = f.code;
  j["subject"] = f.subject;
  if (f.index) {
    j["index"] = *f.index;
  } else {
    j["index"] = nullptr;
  }
  j["message"] = f.message;
  return j;
}

std::string format_fixed(double v, int decimals) {
  std::string s = fmt::format("{:.{}f}", v, decimals);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

namespace {

void emit(const ordered_json& j, int decimals, int depth, std::string& out) {
  const std::string pad(static_cast<std::size_t>(depth + 1) * 2, ' ');
  const std::string close_pad(static_cast<std::size_t>(depth) * 2, ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (const auto& [key, value] : j.items()) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        out += ordered_json(key).dump();
        out += ": ";
        emit(value, decimals, depth + 1, out);
      }
      out += "\n" + close_pad + "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      bool first = true;
      for (const auto& value : j) {
        if (!first) out += ",\n";
        first = false;
        out += pad;
        emit(value, decimals, depth + 1, out);
      }
      out += "\n" + close_pad + "]";
      return;
    }
    case ordered_json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_fixed(v, decimals) : std::string("null");
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

std::string dump_canonical(const ordered_json& j, int float_decimals) {
  std::string out;
  emit(j, float_decimals, 0, out);
  out += '\n';
  return out;
}

}  // namespace rig
