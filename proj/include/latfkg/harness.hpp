#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace latfkg::harness {

using nlohmann::json;

enum class Subcommand { coeffs, solve, symbol_gap, converge, energy };

std::optional<Subcommand> parse_subcommand(const std::string& name);
std::string subcommand_name(Subcommand cmd);

// Exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitInvalid = 2;

struct FieldError {
  std::string path;  // e.g. "u0.width", "hbar_list[2]"
  std::string message;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<FieldError> errors);
  const std::vector<FieldError>& errors() const { return errors_; }

 private:
  std::vector<FieldError> errors_;
};

/// Checks every field, rejects unknown keys and fills defaults. Returns the
/// normalized config; validate(validate(c)) == validate(c). All problems are
/// reported together in one ConfigError.
json validate(Subcommand cmd, const json& config);

std::string tool_version();

struct RunOptions {
  std::filesystem::path out_dir = ".";
  // Relative input file paths in the config resolve against this directory.
  std::filesystem::path input_dir = ".";
  bool assert_mode = false;
};

struct RunResult {
  int status = kExitOk;
  std::vector<std::string> outputs;  // file names inside out_dir, manifest last
  json summary;
  std::vector<std::string> failures;  // assertion messages when status == 1
};

/// Validates, runs the subcommand, writes its CSVs and manifest.json into
/// out_dir. Throws ConfigError for invalid configs and std::runtime_error for
/// unreadable inputs.
RunResult dispatch(Subcommand cmd, const json& config, const RunOptions& options);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(const std::string& bytes);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

// Current UTC time as 2024-01-31T12:00:00.123Z.
std::string utc_timestamp();

}  // namespace latfkg::harness
