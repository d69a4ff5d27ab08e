#include "cofed/config.hpp"

#include "cofed/report.hpp"

#include <json.hpp>

#include <set>

namespace cofed {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& message) {
  throw ConfigError(path + ": " + message);
}

std::string join_path(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

template <class T>
T convert(const json& j, const std::string& path) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) fail(path, "expected a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!j.is_number()) fail(path, "expected a number");
  } else if constexpr (std::is_unsigned_v<T>) {
    if (!j.is_number_unsigned()) fail(path, "expected a non-negative integer");
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
  }
  return j.get<T>();
}

/// Field reader that rejects keys nobody asked for.
class Object {
 public:
  Object(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }
  Object(const Object&) = delete;
  Object& operator=(const Object&) = delete;

  const json* find(std::string_view key) {
    seen_.insert(std::string(key));
    auto it = j_.find(std::string(key));
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  void read(std::string_view key, T& out) {
    if (const auto* v = find(key)) out = convert<T>(*v, join_path(path_, key));
  }

  template <class T>
  T require(std::string_view key) {
    const auto* v = find(key);
    if (!v) fail(path_.empty() ? "<root>" : path_, "missing key '" + std::string(key) + "'");
    return convert<T>(*v, join_path(path_, key));
  }

  std::string path(std::string_view key) const { return join_path(path_, key); }
  const std::string& path() const { return path_; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.contains(key)) fail(join_path(path_, key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

IntRange parse_range(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2) fail(path, "expected [lo, hi]");
  IntRange r{convert<int>(j[0], path + "[0]"), convert<int>(j[1], path + "[1]")};
  if (r.lo < 1 || r.hi < r.lo) fail(path, "range must satisfy 1 <= lo <= hi");
  return r;
}

template <class T>
std::vector<T> parse_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(convert<T>(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void parse_train(const json& j, const std::string& path, TrainConfig& t) {
  Object o(j, path);
  o.read("learning_rate", t.learning_rate);
  o.read("epochs", t.epochs);
  o.read("batch_size", t.batch_size);
  o.read("l2", t.l2);
  o.read("k", t.k);
  o.read("var_smoothing", t.var_smoothing);
  o.read("hidden", t.hidden);
  o.finish();
  try {
    validate(t);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

json train_json(const TrainConfig& t) {
  return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size}, {"l2", t.l2},
          {"k", t.k},   {"var_smoothing", t.var_smoothing}, {"hidden", t.hidden}};
}

LearnerKind parse_kind(const json& j, const std::string& path) {
  const auto name = convert<std::string>(j, path);
  auto kind = parse_learner_kind(name);
  if (!kind) fail(path, "unknown learner '" + name + "' (expected logistic, knn, naive_bayes or mlp)");
  return *kind;
}

constexpr std::pair<UnlabeledStrategy, std::string_view> kStrategies[] = {
    {UnlabeledStrategy::UniformRandomValid, "uniform"},
    {UnlabeledStrategy::FromHeldOutSubclasses, "held-out"},
    {UnlabeledStrategy::FromTaxonomy, "taxonomy"},
};

constexpr std::pair<RunMode, std::string_view> kModes[] = {
    {RunMode::InProcess, "in-process"}, {RunMode::Serve, "serve"}, {RunMode::Join, "join"}};

template <class E, std::size_t N>
E parse_enum(const json& j, const std::string& path, const std::pair<E, std::string_view> (&table)[N]) {
  const auto name = convert<std::string>(j, path);
  for (const auto& [value, text] : table)
    if (text == name) return value;
  std::string options;
  for (const auto& [value, text] : table) options += (options.empty() ? "" : ", ") + std::string(text);
  fail(path, "unknown value '" + name + "' (expected one of " + options + ")");
}

template <class E, std::size_t N>
std::string enum_name(E value, const std::pair<E, std::string_view> (&table)[N]) {
  for (const auto& [v, text] : table)
    if (v == value) return std::string(text);
  return "?";
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig rc;
  auto& fc = rc.federation;
  Object o(root, "");
  if (const auto* v = o.find("mode")) rc.mode = parse_enum(*v, "mode", kModes);
  o.read("master_seed", fc.master_seed);
  o.read("alpha", fc.alpha);
  if (!(fc.alpha >= 0.0 && fc.alpha <= 1.0)) fail("alpha", "must lie in [0, 1]");
  if (const auto* v = o.find("conflict_scope")) {
    const auto s = convert<std::string>(*v, "conflict_scope");
    if (s == "participant") fc.conflict_scope = ConflictScope::PerParticipant;
    else if (s == "global") fc.conflict_scope = ConflictScope::Global;
    else fail("conflict_scope", "expected 'participant' or 'global'");
  }
  o.read("update_batch_size", fc.update_batch_size);
  if (fc.update_batch_size < 1) fail("update_batch_size", "must be positive");

  if (const auto* v = o.find("taxonomy")) {
    Object t(*v, "taxonomy");
    t.read("superclasses", fc.taxonomy.n_superclasses);
    t.read("subclasses_per_superclass", fc.taxonomy.subclasses_per_superclass);
    t.read("instances_per_subclass", fc.taxonomy.instances_per_subclass);
    t.read("test_instances_per_subclass", fc.test_instances_per_subclass);
    t.read("dim", fc.taxonomy.dim);
    t.read("superclass_spread", fc.taxonomy.superclass_spread);
    t.read("subclass_spread", fc.taxonomy.subclass_spread);
    t.read("noise", fc.taxonomy.noise);
    t.finish();
    if (fc.taxonomy.n_superclasses < 1 || fc.taxonomy.subclasses_per_superclass < 1 ||
        fc.taxonomy.instances_per_subclass < 1 || fc.test_instances_per_subclass < 1 || fc.taxonomy.dim < 1)
      fail("taxonomy", "counts must be positive");
    if (!(fc.taxonomy.noise > 0.0)) fail("taxonomy.noise", "must be positive");
  }

  bool explicit_count = false;
  if (const auto* v = o.find("partition")) {
    Object p(*v, "partition");
    if (const auto* n = p.find("participants")) {
      fc.partition.n_participants = convert<int>(*n, "partition.participants");
      explicit_count = true;
    }
    if (const auto* r = p.find("superclasses_per_participant"))
      fc.partition.superclasses_per_participant = parse_range(*r, "partition.superclasses_per_participant");
    p.read("instances_per_superclass", fc.partition.instances_per_superclass);
    if (const auto* m = p.find("mode")) {
      const auto s = convert<std::string>(*m, "partition.mode");
      if (s == "iid") fc.partition.mode = PartitionMode::IID;
      else if (s == "non-iid") fc.partition.mode = PartitionMode::NonIID;
      else fail("partition.mode", "expected 'iid' or 'non-iid'");
    }
    if (const auto* r = p.find("subclasses_owned")) fc.partition.subclasses_owned = parse_range(*r, "partition.subclasses_owned");
    if (const auto* h = p.find("held_out_subclasses"))
      fc.partition.held_out_subclasses = parse_list<int>(*h, "partition.held_out_subclasses");
    p.finish();
    if (fc.partition.n_participants < 1) fail("partition.participants", "must be at least 1");
    if (fc.partition.instances_per_superclass < 1) fail("partition.instances_per_superclass", "must be positive");
  }

  if (const auto* v = o.find("unlabeled")) {
    Object u(*v, "unlabeled");
    u.read("size", fc.unlabeled.size);
    if (const auto* s = u.find("strategy")) fc.unlabeled.strategy = parse_enum(*s, "unlabeled.strategy", kStrategies);
    u.read("margin", fc.unlabeled.margin);
    u.finish();
    if (fc.unlabeled.size < 1) fail("unlabeled.size", "must be at least 1");
    if (fc.unlabeled.margin < 0.0) fail("unlabeled.margin", "must be non-negative");
  }

  TrainConfig base_train;
  if (const auto* v = o.find("train")) parse_train(*v, "train", base_train);

  const auto* learners = o.find("learners");
  const auto* participants = o.find("participants");
  if (learners && participants) fail("learners", "give either 'learners' or 'participants', not both");
  if (participants) {
    if (!participants->is_array() || participants->empty()) fail("participants", "expected a non-empty array");
    for (std::size_t i = 0; i < participants->size(); ++i) {
      const auto path = "participants[" + std::to_string(i) + "]";
      Object p((*participants)[i], path);
      ParticipantConfig pc;
      pc.id = static_cast<int>(i);
      p.read("id", pc.id);
      const auto who = path + " (participant " + std::to_string(pc.id) + ")";
      const auto* learner = p.find("learner");
      if (!learner) fail(who, "missing key 'learner'");
      pc.learner = parse_kind(*learner, p.path("learner"));
      p.read("weight", pc.weight);
      if (!(pc.weight >= 0.0)) fail(p.path("weight"), "must be non-negative");
      pc.train = base_train;
      if (const auto* t = p.find("train")) parse_train(*t, p.path("train"), pc.train);
      p.finish();
      fc.participants.push_back(pc);
    }
    if (explicit_count && fc.partition.n_participants != static_cast<int>(fc.participants.size()))
      fail("participants", "lists " + std::to_string(fc.participants.size()) + " entries but partition.participants is " +
                               std::to_string(fc.partition.n_participants));
    fc.partition.n_participants = static_cast<int>(fc.participants.size());
  } else {
    std::vector<LearnerKind> kinds{LearnerKind::Logistic, LearnerKind::KNearest, LearnerKind::GaussianNaiveBayes,
                                   LearnerKind::MLP};
    if (learners) {
      if (!learners->is_array() || learners->empty()) fail("learners", "expected a non-empty array");
      kinds.clear();
      for (std::size_t i = 0; i < learners->size(); ++i)
        kinds.push_back(parse_kind((*learners)[i], "learners[" + std::to_string(i) + "]"));
    }
    fc.participants = cycle_learners(fc.partition.n_participants, kinds, base_train);
  }

  if (const auto* v = o.find("data")) {
    Object d(*v, "data");
    rc.manifest = d.require<std::string>("manifest");
    d.finish();
  }
  if (const auto* v = o.find("sweep")) {
    Object s(*v, "sweep");
    if (const auto* a = s.find("alphas")) rc.sweep_alphas = parse_list<double>(*a, "sweep.alphas");
    if (const auto* z = s.find("sizes")) rc.sweep_sizes = parse_list<int>(*z, "sweep.sizes");
    s.finish();
    for (double a : rc.sweep_alphas)
      if (!(a >= 0.0 && a <= 1.0)) fail("sweep.alphas", "values must lie in [0, 1]");
    for (int z : rc.sweep_sizes)
      if (z < 1) fail("sweep.sizes", "values must be at least 1");
  }
  o.read("output_dir", rc.output_dir);
  if (const auto* v = o.find("serve")) {
    Object s(*v, "serve");
    s.read("bind", rc.serve.bind);
    s.read("timeout_s", rc.serve.timeout_s);
    s.read("max_line_bytes", rc.serve.max_line_bytes);
    s.read("capture", rc.serve.capture);
    s.finish();
    if (!(rc.serve.timeout_s > 0.0)) fail("serve.timeout_s", "must be positive");
    if (rc.serve.max_line_bytes < 64) fail("serve.max_line_bytes", "must be at least 64");
  }
  if (const auto* v = o.find("join")) {
    Object s(*v, "join");
    s.read("coordinator", rc.join.coordinator);
    s.read("participant", rc.join.participant);
    s.read("timeout_s", rc.join.timeout_s);
    s.read("max_line_bytes", rc.join.max_line_bytes);
    s.finish();
    if (!(rc.join.timeout_s > 0.0)) fail("join.timeout_s", "must be positive");
    if (rc.join.max_line_bytes < 64) fail("join.max_line_bytes", "must be at least 64");
  }
  o.finish();

  try {
    validate(fc);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("federation: ") + e.what());
  }
  return rc;
}

RunConfig load_run_config(const std::string& path) {
  std::string text;
  try {
    text = report::read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return parse_run_config(text);
}

std::string canonical_json(const RunConfig& rc) {
  const auto& fc = rc.federation;
  json participants = json::array();
  for (const auto& p : fc.participants)
    participants.push_back({{"id", p.id},
                            {"learner", std::string(to_string(p.learner))},
                            {"weight", p.weight},
                            {"train", train_json(p.train)}});
  json j{
      {"mode", enum_name(rc.mode, kModes)},
      {"master_seed", fc.master_seed},
      {"alpha", fc.alpha},
      {"conflict_scope", fc.conflict_scope == ConflictScope::Global ? "global" : "participant"},
      {"update_batch_size", fc.update_batch_size},
      {"taxonomy",
       {{"superclasses", fc.taxonomy.n_superclasses},
        {"subclasses_per_superclass", fc.taxonomy.subclasses_per_superclass},
        {"instances_per_subclass", fc.taxonomy.instances_per_subclass},
        {"test_instances_per_subclass", fc.test_instances_per_subclass},
        {"dim", fc.taxonomy.dim},
        {"superclass_spread", fc.taxonomy.superclass_spread},
        {"subclass_spread", fc.taxonomy.subclass_spread},
        {"noise", fc.taxonomy.noise}}},
      {"partition",
       {{"participants", fc.partition.n_participants},
        {"superclasses_per_participant",
         {fc.partition.superclasses_per_participant.lo, fc.partition.superclasses_per_participant.hi}},
        {"instances_per_superclass", fc.partition.instances_per_superclass},
        {"mode", fc.partition.mode == PartitionMode::IID ? "iid" : "non-iid"},
        {"subclasses_owned", {fc.partition.subclasses_owned.lo, fc.partition.subclasses_owned.hi}},
        {"held_out_subclasses", fc.partition.held_out_subclasses}}},
      {"unlabeled",
       {{"size", fc.unlabeled.size},
        {"strategy", enum_name(fc.unlabeled.strategy, kStrategies)},
        {"margin", fc.unlabeled.margin}}},
      {"participants", participants},
      {"sweep", {{"alphas", rc.sweep_alphas}, {"sizes", rc.sweep_sizes}}},
      {"output_dir", rc.output_dir},
      {"serve",
       {{"bind", rc.serve.bind},
        {"timeout_s", rc.serve.timeout_s},
        {"max_line_bytes", rc.serve.max_line_bytes},
        {"capture", rc.serve.capture}}},
      {"join",
       {{"coordinator", rc.join.coordinator},
        {"participant", rc.join.participant},
        {"timeout_s", rc.join.timeout_s},
        {"max_line_bytes", rc.join.max_line_bytes}}},
  };
  if (rc.manifest) j["data"] = {{"manifest", *rc.manifest}};
  return j.dump(2) + "\n";
}

}  // namespace cofed
