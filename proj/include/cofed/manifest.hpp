#pragma once

#include "cofed/orchestrator.hpp"

#include <filesystem>
#include <string>

namespace cofed {

/// Lower-case hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestParticipant {
  int id = 0;
  LabelSpace space;
  std::string train_file;
  std::string test_file;
  std::string train_sha256;
  std::string test_sha256;
  std::map<int, std::vector<int>> owned_subclasses;
};

/// Index of a generated federation on disk. File names are relative to the
/// manifest's directory.
struct Manifest {
  std::uint64_t master_seed = 0;
  std::string partition_mode;
  std::string pool_file;
  std::string pool_sha256;
  std::string unlabeled_file;
  std::string unlabeled_sha256;
  std::size_t unlabeled_size = 0;
  std::vector<ManifestParticipant> participants;
};

/// Writes pool.csv, participant_<id>_{train,test}.csv, unlabeled.csv and
/// manifest.json into `dir`.
Manifest write_federation(const std::filesystem::path& dir, const FederationConfig& config);

void save_manifest(const Manifest& manifest, const std::filesystem::path& path);
Manifest load_manifest(const std::filesystem::path& path);

/// Reads one participant's files, verifying their hashes.
ParticipantData load_participant(const std::filesystem::path& manifest_path, const Manifest& manifest, int id);
/// Reads the public set, verifying its hash.
UnlabeledDataset load_public_set(const std::filesystem::path& manifest_path, const Manifest& manifest);
FederationData load_federation(const std::filesystem::path& manifest_path);

/// Config participants must list the manifest's participant ids in order.
/// Throws ConfigError otherwise.
void check_compatible(const FederationConfig& config, const Manifest& manifest);

}  // namespace cofed
