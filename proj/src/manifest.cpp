#include "cofed/manifest.hpp"

#include "cofed/csv.hpp"
#include "cofed/report.hpp"
#include "cofed/seeds.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <memory>

namespace cofed {
namespace {

using nlohmann::json;

std::filesystem::path base_of(const std::filesystem::path& manifest_path) {
  auto dir = manifest_path.parent_path();
  return dir.empty() ? std::filesystem::path(".") : dir;
}

void check_hash(const std::filesystem::path& file, const std::string& expected) {
  const auto actual = sha256_file(file);
  if (actual != expected)
    throw std::runtime_error("hash mismatch for " + file.string() + ": manifest says " + expected + ", file has " +
                             actual);
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(report::read_text(path)); }

Manifest write_federation(const std::filesystem::path& dir, const FederationConfig& config) {
  std::filesystem::create_directories(dir);
  const auto data = synthesize(config);
  const auto generated = generate_taxonomy(config.taxonomy, derive_seed(config.master_seed, SeedStream::Taxonomy));

  Manifest m;
  m.master_seed = config.master_seed;
  m.partition_mode = config.partition.mode == PartitionMode::IID ? "iid" : "non-iid";
  m.pool_file = "pool.csv";
  csv::save(generated.pool.data, dir / m.pool_file);
  m.pool_sha256 = sha256_file(dir / m.pool_file);
  m.unlabeled_file = "unlabeled.csv";
  csv::save(data.pub, dir / m.unlabeled_file);
  m.unlabeled_sha256 = sha256_file(dir / m.unlabeled_file);
  m.unlabeled_size = data.pub.size();
  for (const auto& p : data.participants) {
    ManifestParticipant mp;
    mp.id = p.id;
    mp.space = p.space;
    mp.train_file = "participant_" + std::to_string(p.id) + "_train.csv";
    mp.test_file = "participant_" + std::to_string(p.id) + "_test.csv";
    csv::save(p.train, dir / mp.train_file);
    csv::save(p.test, dir / mp.test_file);
    mp.train_sha256 = sha256_file(dir / mp.train_file);
    mp.test_sha256 = sha256_file(dir / mp.test_file);
    mp.owned_subclasses = p.owned_subclasses;
    m.participants.push_back(std::move(mp));
  }
  save_manifest(m, dir / "manifest.json");
  return m;
}

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
  json parts = json::array();
  for (const auto& p : m.participants) {
    json space = json::array();
    for (auto c : p.space) space.push_back(c.value);
    json owned = json::object();
    for (const auto& [s, subs] : p.owned_subclasses) owned[std::to_string(s)] = subs;
    parts.push_back({{"id", p.id},
                     {"label_space", space},
                     {"train", {{"file", p.train_file}, {"sha256", p.train_sha256}}},
                     {"test", {{"file", p.test_file}, {"sha256", p.test_sha256}}},
                     {"owned_subclasses", owned}});
  }
  json j{{"master_seed", m.master_seed},
         {"partition_mode", m.partition_mode},
         {"pool", {{"file", m.pool_file}, {"sha256", m.pool_sha256}}},
         {"unlabeled", {{"file", m.unlabeled_file}, {"sha256", m.unlabeled_sha256}, {"size", m.unlabeled_size}}},
         {"participants", parts}};
  report::write_text(path, j.dump(2) + "\n");
}

Manifest load_manifest(const std::filesystem::path& path) {
  try {
    const auto j = json::parse(report::read_text(path));
    Manifest m;
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.partition_mode = j.at("partition_mode").get<std::string>();
    m.pool_file = j.at("pool").at("file").get<std::string>();
    m.pool_sha256 = j.at("pool").at("sha256").get<std::string>();
    m.unlabeled_file = j.at("unlabeled").at("file").get<std::string>();
    m.unlabeled_sha256 = j.at("unlabeled").at("sha256").get<std::string>();
    m.unlabeled_size = j.at("unlabeled").at("size").get<std::size_t>();
    for (const auto& p : j.at("participants")) {
      ManifestParticipant mp;
      mp.id = p.at("id").get<int>();
      std::vector<CategoryId> cats;
      for (const auto& c : p.at("label_space")) cats.emplace_back(c.get<std::uint32_t>());
      mp.space = LabelSpace(std::move(cats));
      mp.train_file = p.at("train").at("file").get<std::string>();
      mp.train_sha256 = p.at("train").at("sha256").get<std::string>();
      mp.test_file = p.at("test").at("file").get<std::string>();
      mp.test_sha256 = p.at("test").at("sha256").get<std::string>();
      for (const auto& [s, subs] : p.at("owned_subclasses").items())
        mp.owned_subclasses[std::stoi(s)] = subs.get<std::vector<int>>();
      m.participants.push_back(std::move(mp));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed manifest " + path.string() + ": " + e.what());
  }
}

ParticipantData load_participant(const std::filesystem::path& manifest_path, const Manifest& m, int id) {
  auto it = std::find_if(m.participants.begin(), m.participants.end(), [&](const auto& p) { return p.id == id; });
  if (it == m.participants.end()) throw std::runtime_error("manifest has no participant " + std::to_string(id));
  const auto base = base_of(manifest_path);
  check_hash(base / it->train_file, it->train_sha256);
  check_hash(base / it->test_file, it->test_sha256);
  ParticipantData p;
  p.id = id;
  p.space = it->space;
  p.train = csv::load_labeled(base / it->train_file, it->space);
  p.train.provenance = "participant-" + std::to_string(id);
  p.test = csv::load_labeled(base / it->test_file, it->space);
  p.owned_subclasses = it->owned_subclasses;
  return p;
}

UnlabeledDataset load_public_set(const std::filesystem::path& manifest_path, const Manifest& m) {
  const auto file = base_of(manifest_path) / m.unlabeled_file;
  check_hash(file, m.unlabeled_sha256);
  auto pub = csv::load_unlabeled(file);
  validate(pub);
  return pub;
}

FederationData load_federation(const std::filesystem::path& manifest_path) {
  const auto m = load_manifest(manifest_path);
  FederationData data;
  for (const auto& p : m.participants) data.participants.push_back(load_participant(manifest_path, m, p.id));
  data.pub = load_public_set(manifest_path, m);
  return data;
}

void check_compatible(const FederationConfig& config, const Manifest& m) {
  if (config.participants.size() != m.participants.size())
    throw ConfigError("config has " + std::to_string(config.participants.size()) + " participants but the manifest has " +
                      std::to_string(m.participants.size()));
  for (std::size_t i = 0; i < m.participants.size(); ++i)
    if (config.participants[i].id != m.participants[i].id)
      throw ConfigError("participant " + std::to_string(i) + " is id " + std::to_string(config.participants[i].id) +
                        " in the config but " + std::to_string(m.participants[i].id) + " in the manifest");
}

}  // namespace cofed
