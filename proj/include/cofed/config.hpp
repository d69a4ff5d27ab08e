#pragma once

#include "cofed/orchestrator.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cofed {

enum class RunMode { InProcess, Serve, Join };

inline constexpr std::size_t kDefaultMaxLineBytes = std::size_t{64} << 20;
inline constexpr double kDefaultTimeoutSeconds = 60.0;

struct ServeSettings {
  std::string bind = "127.0.0.1:5555";
  double timeout_s = kDefaultTimeoutSeconds;
  std::size_t max_line_bytes = kDefaultMaxLineBytes;
  /// Optional file receiving every protocol line seen by the coordinator.
  std::string capture;

  friend bool operator==(const ServeSettings&, const ServeSettings&) = default;
};

struct JoinSettings {
  std::string coordinator = "127.0.0.1:5555";
  int participant = 0;
  double timeout_s = kDefaultTimeoutSeconds;
  std::size_t max_line_bytes = kDefaultMaxLineBytes;

  friend bool operator==(const JoinSettings&, const JoinSettings&) = default;
};

/// Parsed run-config document.
struct RunConfig {
  RunMode mode = RunMode::InProcess;
  FederationConfig federation;
  /// When set, data comes from a generate-data manifest instead of being synthesized.
  std::optional<std::string> manifest;
  std::vector<double> sweep_alphas;
  std::vector<int> sweep_sizes;
  std::string output_dir = "cofed-out";
  ServeSettings serve;
  JoinSettings join;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses and schema-checks a JSON document. Unknown keys, wrong types and
/// invariant violations raise ConfigError naming the offending field.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::string& path);

/// Canonical JSON: every field explicit, participants expanded.
std::string canonical_json(const RunConfig& config);

}  // namespace cofed
