#pragma once

// matconc command-line front end. The entry point is run(); it never throws
// and maps outcomes to exit codes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "matconc/concentration.hpp"

namespace matconc::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { finite_chain, product, gaussian, scp, fuzz };
enum class Format { json, csv };

const char* to_string(ScenarioKind k);

struct CheckSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::finite_chain;
  /// The whole document; module fragments are read from it by kind.
  nlohmann::json document;
  std::vector<CheckSpec> checks;
  std::optional<std::string> output_path;
  std::optional<Format> output_format;
  std::optional<std::uint64_t> seed;
};

/// Names accepted in "checks" for a scenario kind.
const std::vector<std::string>& known_checks(ScenarioKind kind);

/// Validates the kind, the module payload and the check list. Errors carry
/// JSON pointers. `default_kind` applies when the document has no "kind".
Scenario parse_scenario(const nlohmann::json& doc, std::optional<ScenarioKind> default_kind = std::nullopt);

/// Throws IoError for unreadable files and JsonError otherwise.
Scenario load_config(const std::string& path, std::optional<ScenarioKind> default_kind = std::nullopt);

struct Report {
  std::vector<nlohmann::json> results;
  /// Set for tail reports; CSV output then uses the tail columns.
  std::optional<std::vector<TailRow>> tail_rows;

  bool pass() const;
};

/// JSON: a sorted-key array of result objects ("[]" when empty).
/// CSV: t,bound,estimate,half_width,pass for tail reports, else name,pass,margin,scale.
std::string render_report(const Report& report, Format format);

/// Writes to `path`, or to `fallback` when the path is empty or "-".
void emit_report(const Report& report, Format format, const std::string& path, std::ostream& fallback);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace matconc::cli
