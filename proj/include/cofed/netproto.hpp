#pragma once

#include "cofed/config.hpp"
#include "cofed/orchestrator.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace cofed::net {

inline constexpr int kProtocolVersion = 1;

// Wire messages. Every line is {"v": int, "kind": string, "payload": object}.
// Payloads hold only integers, category ids, indices, hashes and text.

struct Register {
  int participant = 0;
  LabelSpace label_space;
  std::size_t n_local = 0;
};

struct RegisterAck {
  int participant = 0;
  std::size_t m = 0;
  std::string public_sha256;
  int participants = 0;
};

struct Predictions {
  int participant = 0;
  PredictionVector predictions;
};

struct Bundle {
  PseudolabelBundle bundle;
};

struct Error {
  std::string message;
};

struct Bye {
  int participant = 0;
};

using Message = std::variant<Register, RegisterAck, Predictions, Bundle, Error, Bye>;

std::string_view kind_name(const Message& message);

/// One line of JSON, without the trailing newline.
std::string encode(const Message& message, int version = kProtocolVersion);

/// Strict decode: unknown or missing keys, wrong types, non-integer numbers
/// and version mismatches raise ProtocolError.
Message decode(std::string_view line);

/// "host:port" with a numeric port.
struct Endpoint {
  std::string host;
  std::uint16_t port = 0;
};
Endpoint parse_endpoint(const std::string& text);

struct CoordinatorSettings {
  Endpoint bind{"127.0.0.1", 0};
  /// Participant ids and vote weights; the round waits for exactly these.
  std::vector<ParticipantConfig> participants;
  double alpha = 0.3;
  ConflictScope conflict_scope = ConflictScope::PerParticipant;
  std::size_t public_size = 0;
  std::string public_sha256;
  /// Abort when nothing happens for this long.
  double timeout_s = kDefaultTimeoutSeconds;
  std::size_t max_line_bytes = kDefaultMaxLineBytes;
  /// When non-empty, every line sent or received is appended here.
  std::filesystem::path capture;
};

struct CoordinatorResult {
  std::vector<int> ids;
  std::vector<LabelSpace> spaces;
  std::vector<PredictionVector> predictions;
  PseudolabelSets pseudolabels;
  std::vector<PseudolabelBundle> bundles;
};

/// Single-round coordinator. Binds on construction so the port is known
/// before run() blocks.
class Coordinator {
 public:
  explicit Coordinator(CoordinatorSettings settings);
  ~Coordinator();
  Coordinator(const Coordinator&) = delete;
  Coordinator& operator=(const Coordinator&) = delete;

  std::uint16_t port() const { return port_; }

  /// Serves until every participant has its bundle. Throws ProtocolError when
  /// the round aborts.
  CoordinatorResult run();

 private:
  CoordinatorSettings settings_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
};

struct JoinResult {
  ParticipantOutcome outcome;
  PseudolabelBundle bundle;
  PredictionVector local_predictions;
  PredictionVector federated_predictions;
};

/// Participant side of a round: trains on local files from the manifest,
/// uploads predictions, receives its bundle and update-trains.
JoinResult join(const Endpoint& coordinator, int participant, const FederationConfig& config,
                const std::filesystem::path& manifest, double timeout_s = kDefaultTimeoutSeconds,
                std::size_t max_line_bytes = kDefaultMaxLineBytes);

/// Settings for serving the federation described by a config and manifest.
CoordinatorSettings coordinator_settings(const RunConfig& config, const std::filesystem::path& manifest);

}  // namespace cofed::net
