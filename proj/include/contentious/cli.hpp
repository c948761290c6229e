#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace contentious {

enum ExitCode : int {
  kExitOk = 0,
  kExitValidation = 1,
  kExitUsage = 2,
  kExitService = 3,
};

/// Effective run settings: defaults, then the config file, then flags.
/// Relative paths resolve against the config file's directory (or the
/// working directory for values given on the command line).
class RunConfig {
 public:
  RunConfig();

  /// `key = value` lines; `#` comments, `[section]` headers and quotes
  /// around values are accepted. Throws ConfigError on unknown keys.
  void merge_file(const std::filesystem::path& path);
  void merge_stream(std::istream& in, const std::filesystem::path& base_dir);
  void set(const std::string& key, const std::string& value, const std::filesystem::path& base_dir);

  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return !get(key).empty(); }
  std::optional<std::filesystem::path> path(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  std::uint64_t seed() const;

  /// Every set path must exist; numeric fields must parse and be in range.
  void validate() const;

  /// sha256 over the sorted settings that can change an artifact.
  std::string hash() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

/// Entry point shared by the executable and the tests. Returns an ExitCode.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace contentious
