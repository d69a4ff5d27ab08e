#include "cofed/report.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace cofed::report {
namespace {

using nlohmann::json;

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

json indices_json(const std::vector<std::size_t>& v) { return json(v); }

json labels_json(const PredictionVector& v) {
  json a = json::array();
  for (auto c : v) a.push_back(c.value);
  return a;
}

PredictionVector labels_from(const json& a) {
  PredictionVector v;
  for (const auto& x : a) v.emplace_back(x.get<std::uint32_t>());
  return v;
}

std::vector<json> parse_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(json::parse(line));
  }
  return out;
}

std::string join_lines(const std::vector<json>& lines) {
  std::string out;
  for (const auto& j : lines) out += j.dump() + '\n';
  return out;
}

json participant_json(const ParticipantOutcome& o) {
  return {{"record", "participant"},
          {"participant", o.id},
          {"learner", std::string(to_string(o.learner))},
          {"train_size", o.train_size},
          {"test_size", o.test_size},
          {"bundle_size", o.bundle_size},
          {"initial_accuracy", o.initial_accuracy},
          {"local_accuracy", o.local_accuracy},
          {"federated_accuracy", o.federated_accuracy},
          {"relative_accuracy", o.relative_accuracy ? json(*o.relative_accuracy) : json(nullptr)}};
}

ParticipantOutcome participant_from(const json& j) {
  ParticipantOutcome o;
  o.id = j.at("participant").get<int>();
  auto learner = parse_learner_kind(j.at("learner").get<std::string>());
  if (!learner) throw std::runtime_error("unknown learner in report record");
  o.learner = *learner;
  o.train_size = j.at("train_size").get<std::size_t>();
  o.test_size = j.at("test_size").get<std::size_t>();
  o.bundle_size = j.at("bundle_size").get<std::size_t>();
  o.initial_accuracy = j.at("initial_accuracy").get<double>();
  o.local_accuracy = j.at("local_accuracy").get<double>();
  o.federated_accuracy = j.at("federated_accuracy").get<double>();
  if (!j.at("relative_accuracy").is_null()) o.relative_accuracy = j.at("relative_accuracy").get<double>();
  return o;
}

}  // namespace

std::string participant_record(const ParticipantOutcome& outcome) { return participant_json(outcome).dump(); }

ParticipantOutcome parse_participant_record(const std::string& line) {
  try {
    return participant_from(json::parse(line));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("malformed participant record: ") + e.what());
  }
}

std::string to_records(const RoundReport& r) {
  std::vector<json> lines;
  for (const auto& o : r.participants) lines.push_back(participant_json(o));
  for (const auto& [c, n] : r.pseudolabels_per_category)
    lines.push_back({{"record", "category"}, {"category", c.value}, {"pseudolabels", n}});
  lines.push_back({{"record", "summary"},
                   {"alpha", r.alpha},
                   {"public_size", r.public_size},
                   {"participants", r.participants.size()},
                   {"total_pseudolabels", r.total_pseudolabels},
                   {"mean_local_accuracy", r.mean_local_accuracy},
                   {"mean_federated_accuracy", r.mean_federated_accuracy},
                   {"mean_relative_accuracy", r.mean_relative_accuracy}});
  return join_lines(lines);
}

RoundReport from_records(const std::string& text) {
  RoundReport r;
  bool summary = false;
  for (const auto& j : parse_lines(text)) {
    const auto kind = j.at("record").get<std::string>();
    if (kind == "participant") {
      r.participants.push_back(participant_from(j));
    } else if (kind == "category") {
      r.pseudolabels_per_category[CategoryId(j.at("category").get<std::uint32_t>())] =
          j.at("pseudolabels").get<std::size_t>();
    } else if (kind == "summary") {
      summary = true;
      r.alpha = j.at("alpha").get<double>();
      r.public_size = j.at("public_size").get<std::size_t>();
      r.total_pseudolabels = j.at("total_pseudolabels").get<std::size_t>();
      r.mean_local_accuracy = j.at("mean_local_accuracy").get<double>();
      r.mean_federated_accuracy = j.at("mean_federated_accuracy").get<double>();
      r.mean_relative_accuracy = j.at("mean_relative_accuracy").get<double>();
    }
  }
  if (!summary) throw std::runtime_error("report has no summary record");
  return r;
}

std::string to_table(const RoundReport& r) {
  std::ostringstream out;
  out << "alpha " << fixed(r.alpha, 3) << "  public set " << r.public_size << "  pseudolabels "
      << r.total_pseudolabels << "\n\n";
  out << pad("id", 4) << pad("learner", 13) << pad("train", 7) << pad("bundle", 8) << pad("local", 9)
      << pad("cofed", 9) << pad("relative", 10) << '\n';
  for (const auto& o : r.participants) {
    out << pad(std::to_string(o.id), 4) << pad(std::string(to_string(o.learner)), 13)
        << pad(std::to_string(o.train_size), 7) << pad(std::to_string(o.bundle_size), 8)
        << pad(fixed(o.local_accuracy), 9) << pad(fixed(o.federated_accuracy), 9)
        << pad(o.relative_accuracy ? fixed(*o.relative_accuracy) : "n/a", 10) << '\n';
  }
  out << pad("mean", 4) << pad("", 13) << pad("", 7) << pad("", 8) << pad(fixed(r.mean_local_accuracy), 9)
      << pad(fixed(r.mean_federated_accuracy), 9) << pad(fixed(r.mean_relative_accuracy), 10) << '\n';
  return out.str();
}

std::string alpha_sweep_records(std::span<const AlphaSweepPoint> points) {
  std::vector<json> lines;
  for (const auto& p : points)
    lines.push_back({{"record", "alpha_sweep"},
                     {"alpha", p.alpha},
                     {"total_pseudolabels", p.total_pseudolabels},
                     {"mean_local_accuracy", p.report.mean_local_accuracy},
                     {"mean_federated_accuracy", p.report.mean_federated_accuracy},
                     {"mean_relative_accuracy", p.report.mean_relative_accuracy}});
  return join_lines(lines);
}

std::string alpha_sweep_table(std::span<const AlphaSweepPoint> points) {
  std::ostringstream out;
  out << pad("alpha", 7) << pad("pseudolabels", 14) << pad("local", 9) << pad("cofed", 9) << pad("relative", 10)
      << '\n';
  for (const auto& p : points)
    out << pad(fixed(p.alpha, 3), 7) << pad(std::to_string(p.total_pseudolabels), 14)
        << pad(fixed(p.report.mean_local_accuracy), 9) << pad(fixed(p.report.mean_federated_accuracy), 9)
        << pad(fixed(p.report.mean_relative_accuracy), 10) << '\n';
  return out.str();
}

std::string size_sweep_records(std::span<const SizeSweepPoint> points) {
  std::vector<json> lines;
  for (const auto& p : points)
    lines.push_back({{"record", "size_sweep"},
                     {"size", p.size},
                     {"total_pseudolabels", p.report.total_pseudolabels},
                     {"mean_local_accuracy", p.report.mean_local_accuracy},
                     {"mean_federated_accuracy", p.report.mean_federated_accuracy},
                     {"mean_relative_accuracy", p.report.mean_relative_accuracy}});
  return join_lines(lines);
}

std::string size_sweep_table(std::span<const SizeSweepPoint> points) {
  std::ostringstream out;
  out << pad("size", 7) << pad("pseudolabels", 14) << pad("local", 9) << pad("cofed", 9) << pad("relative", 10)
      << '\n';
  for (const auto& p : points)
    out << pad(std::to_string(p.size), 7) << pad(std::to_string(p.report.total_pseudolabels), 14)
        << pad(fixed(p.report.mean_local_accuracy), 9) << pad(fixed(p.report.mean_federated_accuracy), 9)
        << pad(fixed(p.report.mean_relative_accuracy), 10) << '\n';
  return out.str();
}

std::string to_records(const theory::RoundAnalysis& a) {
  std::vector<json> lines;
  for (const auto& p : a.participants)
    lines.push_back({{"record", "analysis"},
                     {"participant", p.id},
                     {"labeled_size", p.labeled_size},
                     {"pseudo_size", p.pseudo_size},
                     {"eps_f", p.eps_f},
                     {"eps_g", p.eps_g},
                     {"d_f_g", p.d_f_g},
                     {"d_g_fprime", p.d_g_fprime},
                     {"eps_f_prime", p.eps_f_prime},
                     {"condition_bound", p.condition_bound ? json(*p.condition_bound) : json(nullptr)},
                     {"condition_holds", p.condition_holds},
                     {"preconditions_met", p.preconditions_met}});
  for (std::size_t i = 0; i < a.pairwise_disagreement.size(); ++i)
    lines.push_back({{"record", "disagreement"},
                     {"participant", a.participants[i].id},
                     {"row", a.pairwise_disagreement[i]}});
  return join_lines(lines);
}

std::string to_table(const theory::RoundAnalysis& a) {
  std::ostringstream out;
  out << pad("id", 4) << pad("|L|", 6) << pad("|P|", 7) << pad("eps_f", 8) << pad("eps_g", 8) << pad("d(f,g)", 8)
      << pad("d(g,f')", 9) << pad("eps_f'", 8) << pad("cond", 6) << '\n';
  for (const auto& p : a.participants)
    out << pad(std::to_string(p.id), 4) << pad(std::to_string(p.labeled_size), 6)
        << pad(std::to_string(p.pseudo_size), 7) << pad(fixed(p.eps_f), 8) << pad(fixed(p.eps_g), 8)
        << pad(fixed(p.d_f_g), 8) << pad(fixed(p.d_g_fprime), 9) << pad(fixed(p.eps_f_prime), 8)
        << pad(p.condition_bound ? (p.condition_holds ? "yes" : "no") : "n/a", 6) << '\n';
  return out.str();
}

std::string bundle_line(const PseudolabelBundle& b) {
  json entries = json::array();
  for (const auto& e : b.entries) entries.push_back({{"category", e.category.value}, {"indices", indices_json(e.indices)}});
  return json{{"participant", b.owner}, {"entries", entries}}.dump();
}

PseudolabelBundle parse_bundle_line(const std::string& line) {
  const auto j = json::parse(line);
  PseudolabelBundle b;
  b.owner = j.at("participant").get<int>();
  for (const auto& e : j.at("entries"))
    b.entries.push_back({CategoryId(e.at("category").get<std::uint32_t>()),
                         e.at("indices").get<std::vector<std::size_t>>()});
  return b;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_run_directory(const std::filesystem::path& dir, const RoundResult& result) {
  std::filesystem::create_directories(dir);
  const auto& art = result.artifacts;
  write_text(dir / "report.jsonl", to_records(result.report));
  write_text(dir / "report.txt", to_table(result.report));

  std::vector<json> participants, predictions, sets;
  for (std::size_t i = 0; i < art.ids.size(); ++i) {
    json space = json::array();
    for (auto c : art.spaces[i]) space.push_back(c.value);
    participants.push_back({{"participant", art.ids[i]}, {"label_space", space}, {"train_size", art.train_sizes[i]}});
    predictions.push_back({{"participant", art.ids[i]}, {"phase", "local"}, {"labels", labels_json(art.local_predictions[i])}});
  }
  for (std::size_t i = 0; i < art.ids.size(); ++i)
    predictions.push_back(
        {{"participant", art.ids[i]}, {"phase", "federated"}, {"labels", labels_json(art.federated_predictions[i])}});
  for (const auto& [c, indices] : art.pseudolabels) sets.push_back({{"category", c.value}, {"indices", indices}});
  write_text(dir / "participants.jsonl", join_lines(participants));
  write_text(dir / "predictions.jsonl", join_lines(predictions));
  write_text(dir / "pseudolabels.jsonl", join_lines(sets));
  std::string bundles;
  for (const auto& b : art.bundles) bundles += bundle_line(b) + '\n';
  write_text(dir / "bundles.jsonl", bundles);
}

RoundResult read_run_directory(const std::filesystem::path& dir) {
  RoundResult r;
  r.report = from_records(read_text(dir / "report.jsonl"));
  auto& art = r.artifacts;
  for (const auto& j : parse_lines(read_text(dir / "participants.jsonl"))) {
    art.ids.push_back(j.at("participant").get<int>());
    std::vector<CategoryId> cats;
    for (const auto& c : j.at("label_space")) cats.emplace_back(c.get<std::uint32_t>());
    art.spaces.emplace_back(std::move(cats));
    art.train_sizes.push_back(j.at("train_size").get<std::size_t>());
  }
  const auto n = art.ids.size();
  art.local_predictions.resize(n);
  art.federated_predictions.resize(n);
  auto slot = [&](int id) {
    auto it = std::find(art.ids.begin(), art.ids.end(), id);
    if (it == art.ids.end()) throw std::runtime_error("artifact references unknown participant " + std::to_string(id));
    return static_cast<std::size_t>(it - art.ids.begin());
  };
  for (const auto& j : parse_lines(read_text(dir / "predictions.jsonl"))) {
    auto& target = j.at("phase").get<std::string>() == "local" ? art.local_predictions : art.federated_predictions;
    target[slot(j.at("participant").get<int>())] = labels_from(j.at("labels"));
  }
  for (const auto& j : parse_lines(read_text(dir / "pseudolabels.jsonl")))
    art.pseudolabels[CategoryId(j.at("category").get<std::uint32_t>())] =
        j.at("indices").get<std::vector<std::size_t>>();
  std::istringstream in(read_text(dir / "bundles.jsonl"));
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) art.bundles.push_back(parse_bundle_line(line));
  return r;
}

}  // namespace cofed::report
