#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace rig {

using ordered_json = nlohmann::ordered_json;

enum class Severity { Error, Warning };

const char* to_string(Severity s);

/// One validation finding. `subject` names what is affected (a frame, a
/// stream); `index` is the record position when the finding is local.
struct Finding {
  Severity severity = Severity::Error;
  std::string code;
  std::string subject;
  std::optional<std::size_t> index;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const;  ///< no error-severity findings
  std::size_t count(Severity s) const;
};

ordered_json to_json(const Finding& f);

/// Serializes with insertion-ordered keys, two-space indent and every
/// floating-point number printed fixed with `float_decimals` places.
/// Output is byte-stable for equal inputs.
std::string dump_canonical(const ordered_json& j, int float_decimals = 6);

/// Fixed-point formatting without a "-0.000" artefact.
std::string format_fixed(double v, int decimals);

}  // namespace rig
