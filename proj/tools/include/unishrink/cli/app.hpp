#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "unishrink/priors.hpp"

namespace unishrink::cli {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum class Command { Simulate, FitPrecision, FitRegression, FitMcar, ElicitPrior, Bench };

std::string_view command_name(Command command) noexcept;
/// Throws ConfigError for an unknown name.
Command parse_command(std::string_view name);

/// Command-line values; when set they replace the matching config entries.
struct FlagOverrides {
  std::optional<std::filesystem::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> iters;
  std::optional<std::uint64_t> burnin;
  std::optional<std::uint64_t> thin;
  std::optional<std::uint64_t> chains;
  std::optional<std::filesystem::path> out;
};

/// A validated configuration. `resolved` holds every setting with defaults
/// filled in and input paths made absolute; it is echoed into every JSON
/// output.
struct RunConfig {
  Command command = Command::FitPrecision;
  Json resolved;

  std::uint64_t iters() const;
  std::uint64_t burnin() const;
  std::uint64_t thin() const;
  std::uint64_t seed() const;
  std::uint64_t chains() const;
  std::filesystem::path out_dir() const;
};

/// Validates `document` for `command`, applying the flag overrides first.
/// Relative paths inside the document are resolved against base_dir.
/// Errors are ConfigError with a JSON-pointer prefix such as
/// "/sampler/iters: ..."; missing input files raise IoError.
RunConfig resolve_config(Command command, Json document, const FlagOverrides& flags,
                         const std::filesystem::path& base_dir);

/// Reads flags.config (if given) and calls resolve_config.
RunConfig parse_config(Command command, const FlagOverrides& flags);

/// Parses a prior object such as
///   {"family": "ep", "q": 0.2, "tau": {"gamma_inv_q": [1, 1]}}
/// filling defaults into `node`. The tau forms are {"fixed": x},
/// {"gamma_inv_q": [shape, rate]}, {"half_cauchy": scale} and
/// {"uniform_transform": true}.
std::pair<PriorSpec, TauHyperPrior> parse_prior(Json& node, const std::string& pointer);

/// Executes the command and writes its artifacts under out_dir().
void run(const RunConfig& config, std::ostream& log);

/// 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
int exit_code_for(const std::exception& error) noexcept;

/// {"error": {"kind": ..., "message": ..., "exit_code": ...}}
Json error_document(const std::exception& error);

}  // namespace unishrink::cli
