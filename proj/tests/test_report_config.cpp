#include "cofed/config.hpp"
#include "cofed/csv.hpp"
#include "cofed/manifest.hpp"
#include "cofed/report.hpp"
#include "fixtures.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

using namespace cofed;

TEST_CASE("report records round-trip") {
  const auto r = run_round(testing::small_federation(3, 2));
  const auto text = report::to_records(r.report);
  CHECK(report::from_records(text) == r.report);
  CHECK(report::to_records(report::from_records(text)) == text);
  const auto table = report::to_table(r.report);
  CHECK(table.find("relative") != std::string::npos);
  CHECK_THROWS(report::from_records("{\"record\":\"participant\"}\n"));
}

TEST_CASE("participant record and bundle line round-trip") {
  ParticipantOutcome o{.id = 4, .learner = LearnerKind::MLP, .train_size = 10, .test_size = 20, .bundle_size = 3,
                       .initial_accuracy = 0.1, .local_accuracy = 1.0 / 3.0, .federated_accuracy = 0.7};
  CHECK(report::parse_participant_record(report::participant_record(o)) == o);
  o.relative_accuracy = 2.1;
  CHECK(report::parse_participant_record(report::participant_record(o)) == o);
  PseudolabelBundle b{7, {{CategoryId(1), {0, 5}}, {CategoryId(9), {}}}};
  CHECK(report::parse_bundle_line(report::bundle_line(b)) == b);
}

TEST_CASE("run directory round-trips and holds no feature values") {
  const auto cfg = testing::small_federation(3, 4);
  const auto data = synthesize(cfg);
  const auto r = run_round(data, cfg);
  const auto dir = testing::scratch_dir("rundir");
  report::write_run_directory(dir, r);
  const auto back = report::read_run_directory(dir);
  CHECK(back.report == r.report);
  CHECK(back.artifacts == r.artifacts);

  // Exported artifacts carry ids, indices and metrics only: no value from any
  // participant's training rows may appear in them.
  std::string exported;
  for (const char* f : {"predictions.jsonl", "pseudolabels.jsonl", "bundles.jsonl", "participants.jsonl"})
    exported += report::read_text(dir / f);
  for (const auto& p : data.participants)
    for (Eigen::Index r2 = 0; r2 < p.train.features.rows(); r2 += 7)
      CHECK(exported.find(csv::format_double(p.train.features(r2, 0))) == std::string::npos);
  std::istringstream lines(report::read_text(dir / "predictions.jsonl") + report::read_text(dir / "bundles.jsonl"));
  std::string line;
  std::function<void(const nlohmann::json&)> no_floats = [&](const nlohmann::json& j) {
    CHECK_FALSE(j.is_number_float());
    if (j.is_structured())
      for (const auto& v : j) no_floats(v);
  };
  while (std::getline(lines, line)) no_floats(nlohmann::json::parse(line));
}

TEST_CASE("empty config parses to documented defaults") {
  const auto rc = parse_run_config("{}");
  CHECK(rc.mode == RunMode::InProcess);
  CHECK(rc.federation.alpha == 0.3);
  CHECK(rc.federation.participants.size() == 10);
  CHECK(rc.federation.participants[1].learner == LearnerKind::KNearest);
  CHECK(rc.federation.unlabeled.size == 2000);
  CHECK(rc.federation.partition.mode == PartitionMode::NonIID);
  CHECK_FALSE(rc.manifest.has_value());
  CHECK(rc.serve.timeout_s == 60.0);
  CHECK(rc.serve.max_line_bytes == std::size_t{64} << 20);
}

TEST_CASE("canonical form is a fixed point") {
  const auto rc = parse_run_config(R"({
    "alpha": 0.25, "master_seed": 18446744073709551615,
    "partition": {"participants": 3, "mode": "iid", "superclasses_per_participant": [2, 3]},
    "unlabeled": {"size": 300, "strategy": "uniform", "margin": 0.5},
    "learners": ["mlp", "knn"], "train": {"epochs": 5, "k": 3},
    "sweep": {"alphas": [0, 0.5, 1], "sizes": [10, 20]},
    "data": {"manifest": "m.json"}, "output_dir": "x", "conflict_scope": "global",
    "serve": {"bind": "0.0.0.0:7000", "capture": "cap.jsonl"}, "join": {"participant": 2}
  })");
  CHECK(rc.federation.master_seed == 18446744073709551615ull);
  CHECK(rc.federation.participants.size() == 3);
  CHECK(rc.federation.participants[2].learner == LearnerKind::MLP);
  CHECK(rc.federation.participants[1].train.k == 3);
  CHECK(rc.federation.unlabeled.strategy == UnlabeledStrategy::UniformRandomValid);
  CHECK(rc.federation.conflict_scope == ConflictScope::Global);
  const auto canon = canonical_json(rc);
  const auto again = parse_run_config(canon);
  CHECK(again == rc);
  CHECK(canonical_json(again) == canon);
  CHECK(canonical_json(parse_run_config("{}")) == canonical_json(parse_run_config(canonical_json(parse_run_config("{}")))));
}

TEST_CASE("explicit participants with weights and per-participant training") {
  const auto rc = parse_run_config(R"({
    "partition": {"participants": 2},
    "participants": [
      {"id": 5, "learner": "logistic", "weight": 2.5, "train": {"learning_rate": 0.05}},
      {"id": 9, "learner": "naive_bayes"}
    ]
  })");
  REQUIRE(rc.federation.participants.size() == 2);
  CHECK(rc.federation.participants[0].id == 5);
  CHECK(rc.federation.participants[0].weight == 2.5);
  CHECK(rc.federation.participants[0].train.learning_rate == 0.05);
  CHECK(rc.federation.participants[1].learner == LearnerKind::GaussianNaiveBayes);
  CHECK(parse_run_config(canonical_json(rc)) == rc);
}

TEST_CASE("schema violations name the field") {
  auto error_of = [](const std::string& text) -> std::string {
    try {
      parse_run_config(text);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  CHECK(error_of(R"({"partition": {"participantz": 3}})").find("partition.participantz") != std::string::npos);
  CHECK(error_of(R"({"bogus": 1})").find("bogus") != std::string::npos);
  CHECK(error_of(R"({"alpha": "high"})").find("alpha") != std::string::npos);
  CHECK(error_of(R"({"alpha": 2})").find("alpha") != std::string::npos);
  CHECK(error_of(R"({"learners": ["cnn"]})").find("learners[0]") != std::string::npos);
  CHECK(error_of(R"({"unlabeled": {"strategy": "magic"}})").find("unlabeled.strategy") != std::string::npos);
  CHECK(error_of(R"({"train": {"epochs": 0}})").find("train") != std::string::npos);
  CHECK(error_of(R"({"partition": {"superclasses_per_participant": [3, 2]}})").find("superclasses_per_participant") !=
        std::string::npos);
  CHECK(error_of("{not json").find("not valid JSON") != std::string::npos);
  CHECK(error_of(R"({"partition": {"participants": 3}, "participants": [{"id": 0, "learner": "knn"}]})")
            .find("participants") != std::string::npos);
}

TEST_CASE("a participant without a learner is reported by id") {
  try {
    parse_run_config(R"({"partition": {"participants": 2},
                         "participants": [{"id": 0, "learner": "knn"}, {"id": 3}]})");
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    CHECK(what.find("participant 3") != std::string::npos);
    CHECK(what.find("learner") != std::string::npos);
  }
}

TEST_CASE("config files that cannot be read are config errors") {
  CHECK_THROWS_AS(load_run_config("/nonexistent/cofed.json"), ConfigError);
}

TEST_CASE("generated federations reload identically and detect tampering") {
  const auto cfg = testing::small_federation(3, 5);
  const auto dir = testing::scratch_dir("manifest");
  const auto m = write_federation(dir, cfg);
  CHECK(m.participants.size() == 3);
  const auto again = write_federation(testing::scratch_dir("manifest2"), cfg);
  CHECK(again.unlabeled_sha256 == m.unlabeled_sha256);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.participants[i].train_sha256 == m.participants[i].train_sha256);

  const auto loaded = load_manifest(dir / "manifest.json");
  CHECK(loaded.partition_mode == "non-iid");
  for (std::size_t i = 0; i < 3; ++i) CHECK_FALSE(loaded.participants[i].owned_subclasses.empty());
  const auto data = load_federation(dir / "manifest.json");
  const auto synth = synthesize(cfg);
  CHECK(data.pub.features == synth.pub.features);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(data.participants[i].train.features == synth.participants[i].train.features);
    CHECK(data.participants[i].train.labels == synth.participants[i].train.labels);
  }
  CHECK(run_round(data, cfg).report == run_round(cfg).report);

  {
    std::ofstream out(dir / m.unlabeled_file, std::ios::app);
    out << "0,0,0,0,0\n";
  }
  CHECK_THROWS_WITH(load_federation(dir / "manifest.json"), doctest::Contains("hash mismatch"));

  auto wrong = cfg;
  wrong.participants[1].id = 7;
  CHECK_THROWS_AS(check_compatible(wrong, loaded), ConfigError);
}

TEST_CASE("sha256 of known inputs") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
