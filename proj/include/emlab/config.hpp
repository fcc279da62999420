// Scenario configuration: INI-style sections with key = value lines.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "emlab/grid.hpp"
#include "emlab/initial_data.hpp"
#include "emlab/makino.hpp"
#include "emlab/solver.hpp"

namespace emlab {

/// Thrown for malformed configuration; the message carries the source line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Raw parsed file: section -> key -> value, remembering where each entry came from.
class IniDocument {
 public:
  struct Entry {
    std::string value;
    std::string origin;  // "path:line" or "--override"
  };

  static IniDocument parse(const std::string& text, const std::string& source);
  static IniDocument load(const std::string& path);

  /// "section.key=value"
  void apply_override(const std::string& assignment);

  bool has_section(const std::string& section) const;
  const Entry* find(const std::string& section, const std::string& key) const;
  std::vector<std::string> keys(const std::string& section) const;
  std::vector<std::string> sections() const;

 private:
  std::map<std::string, std::map<std::string, Entry>> data_;
  std::map<std::string, std::string> section_origin_;
};

/// Typed reads that record every key they touch, so leftovers can be rejected.
class SectionReader {
 public:
  SectionReader(const IniDocument& doc, std::string section);

  bool present() const;
  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, std::optional<std::string> fallback = std::nullopt);
  double get_double(const std::string& key, std::optional<double> fallback = std::nullopt);
  int get_int(const std::string& key, std::optional<int> fallback = std::nullopt);
  bool get_bool(const std::string& key, std::optional<bool> fallback = std::nullopt);
  std::vector<double> get_list(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt);
  /// Throws for any key in the section that was never read.
  void reject_unknown() const;
  /// Error message anchored at the entry of `key` (or the section header).
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

 private:
  const IniDocument& doc_;
  std::string section_;
  std::set<std::string> used_;
};

const std::vector<std::string>& scenario_names();

struct ScenarioConfig {
  std::string scenario;
  GridSpec grid;
  SimParams params;
  SchemeConfig scheme;
  DataFamily data;
  /// Smallness budget sqrt(Xdot_0^2 + Xdot_s^2); unset means no rescaling.
  std::optional<double> budget;
  double budget_order = 3.0;
  /// B0 = curl u0 instead of a projected B0.
  bool magnetic_from_velocity = false;
  std::string output_dir = "out";
  std::uint64_t seed = 0;
  /// The parsed file; scenarios read their own keys of [scenario] from it.
  IniDocument source;
};

/// Scenario-specific keys accepted in [scenario] besides name and seed.
const std::vector<std::string>& scenario_option_keys(const std::string& scenario);

/// Validates every field; unknown sections or keys are errors.
ScenarioConfig load_config(const IniDocument& doc);
ScenarioConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides = {});

}  // namespace emlab
