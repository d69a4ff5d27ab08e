// Command-line front end: data generation, rounds, sweeps, serve/join and analysis.

#include "cofed/config.hpp"
#include "cofed/manifest.hpp"
#include "cofed/netproto.hpp"
#include "cofed/orchestrator.hpp"
#include "cofed/report.hpp"
#include "cofed/theory.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace cofed;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitProtocol = 4;
constexpr const char* kOutputRootEnv = "COFED_OUTPUT_ROOT";

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string format = "table";
};

/// Relative output paths are placed under $COFED_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& dir) {
  fs::path p(dir);
  const char* root = std::getenv(kOutputRootEnv);
  if (p.is_relative() && root && *root) return fs::path(root) / p;
  return p;
}

RunConfig load_config(const std::string& path, const Globals& g) {
  auto rc = path.empty() ? parse_run_config("{}") : load_run_config(path);
  if (g.seed) rc.federation.master_seed = *g.seed;
  return rc;
}

/// Data for a run: from the manifest when the config names one, else synthesized.
FederationData federation_data(const RunConfig& rc) {
  if (!rc.manifest) return synthesize(rc.federation);
  check_compatible(rc.federation, load_manifest(*rc.manifest));
  return load_federation(*rc.manifest);
}

void emit(const Globals& g, const std::string& table, const std::string& records) {
  std::cout << (g.format == "records" ? records : table) << std::flush;
}

int cmd_generate(const std::string& config_path, const std::string& out, const std::optional<int>& participants,
                 const std::optional<std::string>& mode, const std::optional<int>& unlabeled_size, const Globals& g) {
  auto rc = load_config(config_path, g);
  auto& fc = rc.federation;
  if (participants) {
    if (*participants < 1) throw ConfigError("--participants must be at least 1");
    fc.partition.n_participants = *participants;
    fc.participants = cycle_learners(*participants, std::vector{LearnerKind::Logistic, LearnerKind::KNearest,
                                                                LearnerKind::GaussianNaiveBayes, LearnerKind::MLP});
  }
  if (mode) fc.partition.mode = *mode == "iid" ? PartitionMode::IID : PartitionMode::NonIID;
  if (unlabeled_size) fc.unlabeled.size = *unlabeled_size;
  try {
    validate(fc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto dir = output_path(out);
  const auto m = write_federation(dir, fc);
  std::cout << "wrote " << m.participants.size() << " participants and " << m.unlabeled_size
            << " unlabeled rows to " << (dir / "manifest.json").string() << "\n";
  return 0;
}

int cmd_run(const std::string& config_path, const Globals& g) {
  const auto rc = load_config(config_path, g);
  const auto result = run_round(federation_data(rc), rc.federation);
  const auto dir = output_path(rc.output_dir);
  report::write_run_directory(dir, result);
  emit(g, report::to_table(result.report), report::to_records(result.report));
  return 0;
}

int cmd_sweep_alpha(const std::string& config_path, std::vector<double> alphas, const Globals& g) {
  const auto rc = load_config(config_path, g);
  if (alphas.empty()) alphas = rc.sweep_alphas;
  if (alphas.empty()) alphas = {0.0, 0.25, 0.5, 0.75, 1.0};
  const auto points = sweep_alpha(federation_data(rc), rc.federation, alphas);
  const auto dir = output_path(rc.output_dir);
  fs::create_directories(dir);
  const auto table = report::alpha_sweep_table(points);
  const auto records = report::alpha_sweep_records(points);
  report::write_text(dir / "sweep_alpha.txt", table);
  report::write_text(dir / "sweep_alpha.jsonl", records);
  emit(g, table, records);
  return 0;
}

int cmd_sweep_size(const std::string& config_path, std::vector<int> sizes, const Globals& g) {
  const auto rc = load_config(config_path, g);
  if (sizes.empty()) sizes = rc.sweep_sizes;
  if (sizes.empty()) sizes = {100, 500, 2000, 5000};
  std::vector<SizeSweepPoint> points;
  if (rc.manifest) {
    points = sweep_unlabeled_size(federation_data(rc), rc.federation, sizes);
  } else {
    points = sweep_unlabeled_size(rc.federation, sizes);
  }
  const auto dir = output_path(rc.output_dir);
  fs::create_directories(dir);
  const auto table = report::size_sweep_table(points);
  const auto records = report::size_sweep_records(points);
  report::write_text(dir / "sweep_size.txt", table);
  report::write_text(dir / "sweep_size.jsonl", records);
  emit(g, table, records);
  return 0;
}

int cmd_serve(const std::string& config_path, const std::optional<std::string>& manifest,
              const std::optional<std::string>& bind, const std::optional<std::string>& capture,
              const std::optional<double>& timeout, const std::string& port_file, const Globals& g) {
  auto rc = load_config(config_path, g);
  if (manifest) rc.manifest = *manifest;
  if (bind) rc.serve.bind = *bind;
  if (capture) rc.serve.capture = *capture;
  if (timeout) rc.serve.timeout_s = *timeout;
  if (!rc.manifest) throw ConfigError("serve needs data.manifest or --manifest");
  auto settings = net::coordinator_settings(rc, *rc.manifest);
  if (!settings.capture.empty()) settings.capture = output_path(settings.capture.string());
  net::Coordinator coordinator(settings);
  if (!port_file.empty()) report::write_text(port_file, std::to_string(coordinator.port()) + "\n");
  std::cerr << "listening on " << settings.bind.host << ":" << coordinator.port() << std::endl;
  const auto result = coordinator.run();

  const auto dir = output_path(rc.output_dir);
  fs::create_directories(dir);
  std::string bundles;
  for (const auto& b : result.bundles) bundles += report::bundle_line(b) + "\n";
  report::write_text(dir / "bundles.jsonl", bundles);
  std::string summary;
  for (const auto& [c, indices] : result.pseudolabels)
    summary += "category " + std::to_string(c.value) + ": " + std::to_string(indices.size()) + " pseudolabels\n";
  std::cout << "round complete: " << result.ids.size() << " participants, " << total_pseudolabels(result.pseudolabels)
            << " pseudolabels\n"
            << (g.format == "records" ? bundles : summary);
  return 0;
}

int cmd_join(const std::string& config_path, const std::optional<std::string>& manifest,
             const std::optional<std::string>& coordinator, const std::optional<int>& participant,
             const std::optional<double>& timeout, const Globals& g) {
  auto rc = load_config(config_path, g);
  if (manifest) rc.manifest = *manifest;
  if (coordinator) rc.join.coordinator = *coordinator;
  if (participant) rc.join.participant = *participant;
  if (timeout) rc.join.timeout_s = *timeout;
  if (!rc.manifest) throw ConfigError("join needs data.manifest or --manifest");
  const auto result = net::join(net::parse_endpoint(rc.join.coordinator), rc.join.participant, rc.federation,
                                *rc.manifest, rc.join.timeout_s, rc.join.max_line_bytes);
  const auto dir = output_path(rc.output_dir);
  fs::create_directories(dir);
  const auto record = report::participant_record(result.outcome) + "\n";
  const auto id = std::to_string(rc.join.participant);
  report::write_text(dir / ("participant_" + id + ".jsonl"), record);
  report::write_text(dir / ("bundle_" + id + ".jsonl"), report::bundle_line(result.bundle) + "\n");
  if (g.format == "records") {
    std::cout << record;
  } else {
    RoundReport r;
    r.participants.push_back(result.outcome);
    std::cout << "participant " << id << ": bundle of " << result.outcome.bundle_size << " pseudolabels\n"
              << report::to_table(r);
  }
  return 0;
}

int cmd_analyze(const std::string& run_dir, const Globals& g) {
  const auto dir = output_path(run_dir);
  const auto result = report::read_run_directory(dir);
  const auto analysis = theory::analyze_round(result.report, result.artifacts);
  const auto table = report::to_table(analysis);
  const auto records = report::to_records(analysis);
  report::write_text(dir / "analysis.txt", table);
  report::write_text(dir / "analysis.jsonl", records);
  emit(g, table, records);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cotraining-style federated learning over a shared unlabeled dataset"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Override the master seed");
  app.add_option("--format", g.format, "Console output format")->check(CLI::IsMember({"table", "records"}));

  std::string config_path;
  auto* gen = app.add_subcommand("generate-data", "Write pool, partitions, unlabeled set and manifest");
  std::string gen_out = "data";
  std::optional<int> gen_participants, gen_unlabeled;
  std::optional<std::string> gen_mode;
  gen->add_option("--config", config_path, "Run config supplying generator settings")->check(CLI::ExistingFile);
  gen->add_option("--out", gen_out, "Output directory");
  gen->add_option("--participants", gen_participants, "Number of participants");
  gen->add_option("--mode", gen_mode, "Partition mode")->check(CLI::IsMember({"iid", "non-iid"}));
  gen->add_option("--unlabeled-size", gen_unlabeled, "Unlabeled set size");

  auto* run = app.add_subcommand("run", "Run one round and write a report directory");
  run->add_option("config", config_path, "Run config")->required();

  auto* sa = app.add_subcommand("sweep-alpha", "Sweep the aggregation threshold");
  std::vector<double> alphas;
  sa->add_option("config", config_path, "Run config")->required();
  sa->add_option("--alphas", alphas, "Threshold values");

  auto* ss = app.add_subcommand("sweep-size", "Sweep the unlabeled set size");
  std::vector<int> sizes;
  ss->add_option("config", config_path, "Run config")->required();
  ss->add_option("--sizes", sizes, "Unlabeled set sizes");

  std::optional<std::string> manifest, bind, capture, coordinator;
  std::optional<double> timeout;
  std::optional<int> participant;
  std::string port_file;
  auto* serve = app.add_subcommand("serve", "Coordinate one round over TCP");
  serve->add_option("config", config_path, "Run config")->required();
  serve->add_option("--manifest", manifest, "Manifest of the generated data");
  serve->add_option("--bind", bind, "host:port to listen on");
  serve->add_option("--capture", capture, "Record every protocol line to this file");
  serve->add_option("--timeout", timeout, "Seconds of inactivity before the round aborts");
  serve->add_option("--port-file", port_file, "Write the bound port to this file");

  auto* join = app.add_subcommand("join", "Take part in a round as one participant");
  join->add_option("config", config_path, "Run config")->required();
  join->add_option("--manifest", manifest, "Manifest of the generated data");
  join->add_option("--coordinator", coordinator, "host:port of the coordinator");
  join->add_option("--participant", participant, "Participant id");
  join->add_option("--timeout", timeout, "Seconds to wait for the coordinator");

  auto* analyze = app.add_subcommand("analyze", "Error-bound analysis of a finished run directory");
  std::string run_dir;
  analyze->add_option("run_dir", run_dir, "Directory written by run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return cmd_generate(config_path, gen_out, gen_participants, gen_mode, gen_unlabeled, g);
    if (*run) return cmd_run(config_path, g);
    if (*sa) return cmd_sweep_alpha(config_path, alphas, g);
    if (*ss) return cmd_sweep_size(config_path, sizes, g);
    if (*serve) return cmd_serve(config_path, manifest, bind, capture, timeout, port_file, g);
    if (*join) return cmd_join(config_path, manifest, coordinator, participant, timeout, g);
    if (*analyze) return cmd_analyze(run_dir, g);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ProtocolError& e) {
    std::cerr << "protocol error: " << e.what() << "\n";
    return kExitProtocol;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
