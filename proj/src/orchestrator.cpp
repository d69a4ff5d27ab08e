#include "cofed/orchestrator.hpp"

#include "cofed/seeds.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <set>
#include <thread>

namespace cofed {
namespace {

/// Runs fn(i) for every participant slot on a small thread pool. The first
/// failure (lowest slot) is rethrown naming the participant.
template <class Fn>
void for_each_participant(const std::vector<int>& ids, Fn&& fn) {
  const std::size_t n = ids.size();
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw std::runtime_error("participant " + std::to_string(ids[i]) + ": " + e.what());
    }
  }
}

std::vector<int> ids_of(const FederationData& data) {
  std::vector<int> ids;
  for (const auto& p : data.participants) ids.push_back(p.id);
  return ids;
}

const ParticipantConfig& config_for(const FederationConfig& config, std::size_t slot) {
  return config.participants.at(slot);
}

}  // namespace

void validate(const FederationConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  if (config.participants.empty()) throw std::invalid_argument("federation needs at least one participant");
  if (static_cast<int>(config.participants.size()) != config.partition.n_participants)
    throw std::invalid_argument("partition declares " + std::to_string(config.partition.n_participants) +
                                " participants but " + std::to_string(config.participants.size()) +
                                " are configured");
  std::set<int> ids;
  bool any_weight = false;
  for (const auto& p : config.participants) {
    if (!ids.insert(p.id).second) throw std::invalid_argument("duplicate participant id " + std::to_string(p.id));
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
      throw std::invalid_argument("participant " + std::to_string(p.id) + " has an invalid weight");
    any_weight = any_weight || p.weight > 0.0;
    try {
      validate(p.train);
    } catch (const std::exception& e) {
      throw std::invalid_argument("participant " + std::to_string(p.id) + ": " + e.what());
    }
  }
  if (!any_weight) throw std::invalid_argument("at least one participant needs a positive weight");
  if (config.unlabeled.size < 1) throw std::invalid_argument("unlabeled size must be at least 1");
  if (config.test_instances_per_subclass < 1) throw std::invalid_argument("test instances per subclass must be positive");
  if (config.update_batch_size < 1) throw std::invalid_argument("update batch size must be positive");
}

std::vector<ParticipantConfig> cycle_learners(int n, std::span<const LearnerKind> kinds, const TrainConfig& base) {
  if (kinds.empty()) throw std::invalid_argument("need at least one learner kind");
  std::vector<ParticipantConfig> out;
  for (int i = 0; i < n; ++i) out.push_back({i, kinds[static_cast<std::size_t>(i) % kinds.size()], base, 1.0});
  return out;
}

std::uint64_t local_seed(const FederationConfig& config, int participant) {
  return derive_seed(config.master_seed, SeedStream::LocalTraining, static_cast<std::uint64_t>(participant));
}

std::uint64_t update_seed(const FederationConfig& config, int participant) {
  return derive_seed(config.master_seed, SeedStream::UpdateTraining, static_cast<std::uint64_t>(participant));
}

FederationData synthesize(const FederationConfig& config) {
  validate(config);
  const auto seed = config.master_seed;
  auto generated = generate_taxonomy(config.taxonomy, derive_seed(seed, SeedStream::Taxonomy));
  const auto test_pool = sample_taxonomy(generated.taxonomy, config.test_instances_per_subclass,
                                         derive_seed(seed, SeedStream::TestPool), "test");
  auto spec = config.partition;
  spec.seed = derive_seed(seed, SeedStream::Partition);
  auto shards = partition(generated.pool, generated.taxonomy, spec);

  FederationData data;
  for (std::size_t i = 0; i < shards.size(); ++i) {
    ParticipantData p;
    p.id = config.participants[i].id;
    p.space = shards[i].space;
    p.train = std::move(shards[i].train);
    p.train.provenance = "participant-" + std::to_string(p.id);
    p.test = restrict_to(test_pool, p.space);
    p.owned_subclasses = std::move(shards[i].owned_subclasses);
    data.participants.push_back(std::move(p));
  }
  data.pub = generate_unlabeled(generated.pool, generated.taxonomy, config.partition.held_out_subclasses,
                                config.unlabeled, derive_seed(seed, SeedStream::Unlabeled));
  return data;
}

LocalPhase run_local_phase(const FederationData& data, const FederationConfig& config) {
  if (data.participants.size() != config.participants.size())
    throw std::invalid_argument("federation data and configuration disagree on the participant count");
  validate(data.pub);
  const auto n = data.participants.size();
  LocalPhase phase;
  phase.models.resize(n);
  phase.predictions.resize(n);
  for_each_participant(ids_of(data), [&](std::size_t i) {
    const auto& p = data.participants[i];
    const auto& pc = config_for(config, i);
    auto train = pc.train;
    train.seed = local_seed(config, pc.id);
    std::shared_ptr<const Classifier> model = train_local(pc.learner, p.space, p.train, train);
    phase.predictions[i] = pseudolabel(*model, data.pub);
    phase.models[i] = std::move(model);
  });
  return phase;
}

UpdateOutcome run_update_phase(const ParticipantConfig& participant, const LabelSpace& space,
                               const LabeledDataset& train, const PseudolabelBundle& bundle,
                               const UnlabeledDataset& pub, std::uint64_t seed, int update_batch_size) {
  const auto combined = train.size() + bundle.total();
  const auto config = update_phase_config(participant.train, combined, seed, update_batch_size);
  UpdateOutcome out;
  out.federated = update_train(participant.learner, space, train, bundle, pub, config);
  // Equal budget on local data alone: same step count and seed, batch capped by |D_i|.
  auto twin = config;
  twin.batch_size = std::min<int>(config.batch_size, static_cast<int>(std::max<std::size_t>(train.size(), 1)));
  out.baseline = train_local(participant.learner, space, train, twin);
  return out;
}

PseudolabelSets aggregate_votes(std::span<const PredictionVector> predictions, std::span<const LabelSpace> spaces,
                                std::span<const double> weights, double alpha, std::size_t m) {
  const bool unit = std::all_of(weights.begin(), weights.end(), [](double w) { return w == 1.0; });
  return unit ? aggregate(predictions, spaces, alpha, m) : aggregate_weighted(predictions, spaces, weights, alpha, m);
}

ParticipantUpdate update_participant(const FederationConfig& config, const ParticipantConfig& pc,
                                     const ParticipantData& p, const Classifier& local_model,
                                     const PseudolabelBundle& bundle, const UnlabeledDataset& pub) {
  auto models =
      run_update_phase(pc, p.space, p.train, bundle, pub, update_seed(config, pc.id), config.update_batch_size);
  ParticipantUpdate u;
  u.federated_predictions = pseudolabel(*models.federated, pub);
  auto& o = u.outcome;
  o.id = p.id;
  o.learner = pc.learner;
  o.train_size = p.train.size();
  o.test_size = p.test.size();
  o.bundle_size = bundle.total();
  o.initial_accuracy = evaluate(local_model, p.test);
  o.local_accuracy = evaluate(*models.baseline, p.test);
  o.federated_accuracy = evaluate(*models.federated, p.test);
  if (o.local_accuracy > 0.0) o.relative_accuracy = o.federated_accuracy / o.local_accuracy;
  return u;
}

RoundResult finish_round(const FederationData& data, const FederationConfig& config, const LocalPhase& local,
                         double alpha) {
  const auto n = data.participants.size();
  const auto m = data.pub.size();
  RoundResult result;
  auto& art = result.artifacts;
  std::vector<double> weights;
  for (std::size_t i = 0; i < n; ++i) {
    art.ids.push_back(data.participants[i].id);
    art.spaces.push_back(data.participants[i].space);
    art.train_sizes.push_back(data.participants[i].train.size());
    weights.push_back(config_for(config, i).weight);
  }
  art.local_predictions = local.predictions;

  // Single aggregation after the prediction barrier.
  art.pseudolabels = aggregate_votes(art.local_predictions, art.spaces, weights, alpha, m);
  for (std::size_t i = 0; i < n; ++i)
    art.bundles.push_back(build_bundle(art.pseudolabels, art.spaces[i], art.ids[i], config.conflict_scope));

  auto& report = result.report;
  report.alpha = alpha;
  report.public_size = m;
  report.participants.resize(n);
  art.federated_predictions.resize(n);
  for_each_participant(art.ids, [&](std::size_t i) {
    auto u = update_participant(config, config_for(config, i), data.participants[i], *local.models[i], art.bundles[i],
                                data.pub);
    report.participants[i] = u.outcome;
    art.federated_predictions[i] = std::move(u.federated_predictions);
  });

  for (const auto& [c, indices] : art.pseudolabels) report.pseudolabels_per_category[c] = indices.size();
  report.total_pseudolabels = total_pseudolabels(art.pseudolabels);
  std::size_t with_ratio = 0;
  for (const auto& o : report.participants) {
    report.mean_local_accuracy += o.local_accuracy;
    report.mean_federated_accuracy += o.federated_accuracy;
    if (o.relative_accuracy) {
      report.mean_relative_accuracy += *o.relative_accuracy;
      ++with_ratio;
    }
  }
  report.mean_local_accuracy /= static_cast<double>(n);
  report.mean_federated_accuracy /= static_cast<double>(n);
  if (with_ratio) report.mean_relative_accuracy /= static_cast<double>(with_ratio);
  return result;
}

RoundResult run_round(const FederationData& data, const FederationConfig& config) {
  validate(config);
  if (data.participants.empty()) throw std::invalid_argument("federation needs at least one participant");
  const auto local = run_local_phase(data, config);
  return finish_round(data, config, local, config.alpha);
}

RoundResult run_round(const FederationConfig& config) { return run_round(synthesize(config), config); }

std::vector<AlphaSweepPoint> sweep_alpha(const FederationConfig& config, std::span<const double> alphas) {
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("sweep alpha values must lie in [0, 1]");
  return sweep_alpha(synthesize(config), config, alphas);
}

std::vector<AlphaSweepPoint> sweep_alpha(const FederationData& data, const FederationConfig& config,
                                         std::span<const double> alphas) {
  validate(config);
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("sweep alpha values must lie in [0, 1]");
  const auto local = run_local_phase(data, config);
  std::vector<AlphaSweepPoint> out;
  for (double a : alphas) {
    auto r = finish_round(data, config, local, a);
    out.push_back({a, r.report, r.report.total_pseudolabels});
  }
  return out;
}

std::vector<SizeSweepPoint> sweep_unlabeled_size(const FederationConfig& config, std::span<const int> sizes) {
  if (sizes.empty()) return {};
  for (int s : sizes)
    if (s < 1) throw std::invalid_argument("sweep sizes must be at least 1");
  auto largest = config;
  largest.unlabeled.size = *std::max_element(sizes.begin(), sizes.end());
  return sweep_unlabeled_size(synthesize(largest), config, sizes);
}

std::vector<SizeSweepPoint> sweep_unlabeled_size(const FederationData& full, const FederationConfig& config,
                                                 std::span<const int> sizes) {
  if (sizes.empty()) return {};
  validate(config);
  for (int s : sizes) {
    if (s < 1) throw std::invalid_argument("sweep sizes must be at least 1");
    if (static_cast<std::size_t>(s) > full.pub.size())
      throw std::invalid_argument("sweep size " + std::to_string(s) + " exceeds the public set size " +
                                  std::to_string(full.pub.size()));
  }
  const auto local = run_local_phase(full, config);

  std::vector<SizeSweepPoint> out;
  for (int s : sizes) {
    auto data = full;
    data.pub.features = full.pub.features.topRows(s);
    LocalPhase prefix{local.models, {}};
    for (const auto& p : local.predictions) prefix.predictions.emplace_back(p.begin(), p.begin() + s);
    auto cfg = config;
    cfg.unlabeled.size = s;
    out.push_back({s, finish_round(data, cfg, prefix, cfg.alpha).report});
  }
  return out;
}

}  // namespace cofed
