// Acceptance suite: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include "cofed/config.hpp"
#include "cofed/csv.hpp"
#include "cofed/manifest.hpp"
#include "cofed/netproto.hpp"
#include "cofed/report.hpp"
#include "cofed/theory.hpp"
#include "support.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#ifndef COFED_CLI
#error "COFED_CLI must name the cofed executable"
#endif

namespace fs = std::filesystem;
using namespace cofed;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << std::fixed << v;
  return os.str();
}

// ---------------------------------------------------------------- A1

Verdict aggregation_oracle() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240601);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto vc = testing::random_vote_case(rng, 6, 50, 8);
    const int step = static_cast<int>(rng() % 6);  // alpha = step / 5
    const double alpha = step / 5.0;
    const auto got = aggregate(vc.predictions, vc.spaces, alpha, vc.m);
    if (got != *testing::recount(vc, step, 5, false)) v.fail("unweighted mismatch in case " + std::to_string(t));
    const auto expected_w = testing::recount(vc, step, 5, true);
    if (expected_w) {
      if (aggregate_weighted(vc.predictions, vc.spaces, vc.weights, alpha, vc.m) != *expected_w)
        v.fail("weighted mismatch in case " + std::to_string(t));
    } else {
      try {
        aggregate_weighted(vc.predictions, vc.spaces, vc.weights, alpha, vc.m);
        v.fail("weighted case " + std::to_string(t) + " with an ownerless category was accepted");
      } catch (const std::invalid_argument&) {
      }
    }
    ++checked;
  }
  const double s = seconds_since(t0);
  if (s >= 10.0) v.fail("took " + fmt(s, 2) + " s");
  if (v.pass) v.detail = std::to_string(checked) + " cases in " + fmt(s, 2) + " s";
  return v;
}

// ---------------------------------------------------------------- A2

Verdict alpha_monotonicity() {
  Verdict v;
  const auto t0 = Clock::now();
  std::mt19937_64 rng(77);
  for (int t = 0; t < 100; ++t) {
    const auto vc = testing::random_vote_case(rng, 6, 50, 8);
    std::size_t prev = std::numeric_limits<std::size_t>::max();
    for (int step = 0; step <= 20; ++step) {
      const auto n = total_pseudolabels(aggregate(vc.predictions, vc.spaces, step / 20.0, vc.m));
      if (n > prev) v.fail("count rose with alpha in matrix " + std::to_string(t));
      prev = n;
    }
    if (prev != 0) v.fail("alpha = 1 left " + std::to_string(prev) + " pseudolabels in matrix " + std::to_string(t));
  }
  const double s = seconds_since(t0);
  if (s >= 5.0) v.fail("took " + fmt(s, 2) + " s");
  if (v.pass) v.detail = "100 matrices, 21 thresholds each, " + fmt(s, 2) + " s";
  return v;
}

// ---------------------------------------------------------------- A3

Verdict end_to_end_improvement() {
  Verdict v;
  const auto t0 = Clock::now();
  const auto base = parse_run_config("{}").federation;
  double sum[2] = {0, 0};
  int non_iid_better = 0;
  std::ostringstream per_seed;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    double rel[2];
    for (int mode = 0; mode < 2; ++mode) {
      auto cfg = base;
      cfg.master_seed = seed;
      cfg.alpha = 0.3;
      cfg.partition.mode = mode == 0 ? PartitionMode::IID : PartitionMode::NonIID;
      rel[mode] = run_round(cfg).report.mean_relative_accuracy;
      sum[mode] += rel[mode];
    }
    non_iid_better += rel[1] >= rel[0];
    per_seed << " s" << seed << "=" << fmt(rel[0], 3) << "/" << fmt(rel[1], 3);
  }
  const double iid = sum[0] / 5, non_iid = sum[1] / 5;
  const double s = seconds_since(t0);
  v.detail = "iid " + fmt(iid) + ", non-iid " + fmt(non_iid) + ", non-iid >= iid in " + std::to_string(non_iid_better) +
             "/5 seeds," + per_seed.str() + ", " + fmt(s, 1) + " s";
  if (non_iid < 1.05) v.pass = false;
  if (iid < 1.02) v.pass = false;
  if (non_iid_better < 4) v.pass = false;
  if (s >= 300.0) v.pass = false;
  return v;
}

// ---------------------------------------------------------------- A4

/// Average ranks, ties sharing the mean rank.
std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return saa == 0 || sbb == 0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

Verdict size_trend() {
  Verdict v;
  const auto t0 = Clock::now();
  const std::vector<int> sizes{100, 500, 2000, 5000};
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto cfg = parse_run_config("{}").federation;
    cfg.master_seed = seed;
    const auto pts = sweep_unlabeled_size(cfg, sizes);
    std::vector<double> x, y;
    detail << " seed " << seed << ":";
    for (const auto& p : pts) {
      x.push_back(p.size);
      y.push_back(p.report.mean_relative_accuracy);
      detail << " " << fmt(p.report.mean_relative_accuracy, 3);
    }
    const double rho = spearman(x, y);
    detail << " rho=" << fmt(rho, 2) << ";";
    if (rho < 0.8) v.pass = false;
  }
  const double s = seconds_since(t0);
  if (s >= 300.0) v.pass = false;
  v.detail = detail.str() + " " + fmt(s, 1) + " s";
  return v;
}

// ---------------------------------------------------------------- A5

Verdict theory_calculator() {
  Verdict v;
  const auto t0 = Clock::now();
  std::uint64_t factorial = 1;
  for (int u = 1; u <= 20; ++u) {
    factorial *= static_cast<std::uint64_t>(u);
    const long double exact = std::pow(static_cast<long double>(factorial), 1.0L / u) * std::exp(1.0L) - u;
    const double got = theory::improvement_condition_bound(static_cast<double>(u));
    if (std::abs(static_cast<long double>(got) - exact) > 1e-9L * std::abs(exact))
      v.fail("bound at u = " + std::to_string(u));
  }
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> eps(0.001, 0.499), unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> size(1, 10000);
  for (int t = 0; t < 50; ++t) {
    theory::TheoryParams p{.labeled_size = size(rng), .pseudo_size = size(rng), .eps_f = eps(rng), .eps_g = eps(rng),
                           .delta = 0.05, .d_g_fprime = unit(rng)};
    long double hand = static_cast<long double>(p.eps_f) +
                       static_cast<long double>(p.pseudo_size) / static_cast<long double>(p.labeled_size) *
                           (static_cast<long double>(p.eps_g) - static_cast<long double>(p.d_g_fprime));
    if (hand < 0) hand = 0;
    if (std::abs(static_cast<long double>(theory::eps_f_prime(p)) - hand) > 1e-12L)
      v.fail("eps_f' differs from hand arithmetic in set " + std::to_string(t));
  }
  for (int t = 0; t < 1000; ++t) {
    theory::TheoryParams p{.labeled_size = size(rng), .pseudo_size = size(rng), .eps_f = eps(rng), .eps_g = eps(rng),
                           .delta = 0.05, .d_g_fprime = unit(rng)};
    const double a = theory::eps_f_prime(p);
    if (a < 0.0) v.fail("negative eps_f' in draw " + std::to_string(t));
    auto q = p;
    q.d_g_fprime = std::min(1.0, p.d_g_fprime + unit(rng) * (1.0 - p.d_g_fprime));
    if (theory::eps_f_prime(q) > a) v.fail("eps_f' rose with the disagreement in draw " + std::to_string(t));
    const double u1 = unit(rng) * 100 + 1e-6, u2 = unit(rng) * 100 + 1e-6;
    if (u1 != u2 && (u1 < u2) != (theory::improvement_condition_bound(u1) < theory::improvement_condition_bound(u2)))
      v.fail("bound not increasing in draw " + std::to_string(t));
  }
  const double s = seconds_since(t0);
  if (s >= 5.0) v.fail("took " + fmt(s, 2) + " s");
  if (v.pass) v.detail = "20 factorial points, 50 hand sets, 1000 property draws, " + fmt(s, 2) + " s";
  return v;
}

// ---------------------------------------------------------------- CLI helpers

int cli(const fs::path& dir, const std::string& args, const std::string& tag) {
  const std::string cmd = "cd '" + dir.string() + "' && '" COFED_CLI "' " + args + " >'" + (dir / (tag + ".out")).string() +
                          "' 2>'" + (dir / (tag + ".err")).string() + "'";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines_of(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

// ---------------------------------------------------------------- A6, A7

struct WireRun {
  fs::path dir;
  bool ok = false;
  std::string problem;
};

WireRun run_over_wire() {
  WireRun w;
  w.dir = testing::scratch_dir("acceptance-wire");
  report::write_text(w.dir / "cfg.json", R"({
  "partition": {"participants": 3},
  "data": {"manifest": "data/manifest.json"},
  "output_dir": "out",
  "serve": {"bind": "127.0.0.1:0", "capture": "wire.jsonl", "timeout_s": 60},
  "join": {"timeout_s": 60}
})");
  if (cli(w.dir, "generate-data --config cfg.json --out data", "generate") != 0) {
    w.problem = "generate-data failed";
    return w;
  }
  int serve_code = -1;
  std::thread server([&] { serve_code = cli(w.dir, "serve cfg.json --port-file port.txt", "serve"); });
  for (int i = 0; i < 400 && !fs::exists(w.dir / "port.txt"); ++i)
    std::this_thread::sleep_for(std::chrono::milliseconds(25));
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  std::string port;
  if (fs::exists(w.dir / "port.txt")) port = report::read_text(w.dir / "port.txt");
  while (!port.empty() && port.back() == '\n') port.pop_back();
  int join_codes[3] = {-1, -1, -1};
  if (!port.empty()) {
    std::vector<std::thread> joins;
    for (int i = 0; i < 3; ++i)
      joins.emplace_back([&, i] {
        join_codes[i] = cli(w.dir,
                            "join cfg.json --participant " + std::to_string(i) + " --coordinator 127.0.0.1:" + port,
                            "join" + std::to_string(i));
      });
    for (auto& t : joins) t.join();
  }
  server.join();
  if (port.empty()) w.problem = "coordinator never reported a port";
  else if (serve_code != 0) w.problem = "serve exited " + std::to_string(serve_code);
  for (int i = 0; i < 3 && w.problem.empty(); ++i)
    if (join_codes[i] != 0) w.problem = "join " + std::to_string(i) + " exited " + std::to_string(join_codes[i]);
  w.ok = w.problem.empty();
  return w;
}

Verdict wire_equivalence(const WireRun& w, double seconds) {
  Verdict v;
  if (!w.ok) {
    v.fail(w.problem);
    return v;
  }
  const auto rc = load_run_config((w.dir / "cfg.json").string());
  const auto expected = run_round(load_federation(w.dir / "data" / "manifest.json"), rc.federation);
  const auto served = lines_of(w.dir / "out" / "bundles.jsonl");
  if (served.size() != 3) v.fail("coordinator wrote " + std::to_string(served.size()) + " bundles");
  for (std::size_t i = 0; i < 3 && v.pass; ++i) {
    const auto id = std::to_string(expected.artifacts.ids[i]);
    if (report::parse_bundle_line(served[i]) != expected.artifacts.bundles[i]) v.fail("served bundle " + id + " differs");
    const auto got_bundle = lines_of(w.dir / "out" / ("bundle_" + id + ".jsonl"));
    if (got_bundle.size() != 1 || report::parse_bundle_line(got_bundle[0]) != expected.artifacts.bundles[i])
      v.fail("received bundle " + id + " differs");
    const auto rec = lines_of(w.dir / "out" / ("participant_" + id + ".jsonl"));
    if (rec.size() != 1 || !(report::parse_participant_record(rec[0]) == expected.report.participants[i]))
      v.fail("accuracies of participant " + id + " differ");
  }
  if (seconds >= 60.0) v.fail("took " + fmt(seconds, 1) + " s");
  if (v.pass)
    v.detail = "3 bundles and 3 outcome records bit-identical, " + std::to_string(expected.report.total_pseudolabels) +
               " pseudolabels, " + fmt(seconds, 1) + " s";
  return v;
}

Verdict privacy_boundary(const WireRun& w) {
  Verdict v;
  if (!w.ok) {
    v.fail(w.problem);
    return v;
  }
  const auto captured = lines_of(w.dir / "wire.jsonl");
  if (captured.empty()) {
    v.fail("no captured messages");
    return v;
  }
  std::map<std::string, int> kinds;
  std::function<void(const nlohmann::json&)> integers_only = [&](const nlohmann::json& j) {
    if (j.is_number_float()) v.fail("a message carries a non-integer number");
    if (j.is_structured())
      for (const auto& x : j) integers_only(x);
  };
  for (const auto& line : captured) {
    try {
      kinds[std::string(net::kind_name(net::decode(line)))]++;
    } catch (const std::exception& e) {
      v.fail(std::string("captured line fails schema validation: ") + e.what());
    }
    integers_only(nlohmann::json::parse(line));
  }
  // Every feature cell of every local file must be absent from the capture.
  const auto manifest = load_manifest(w.dir / "data" / "manifest.json");
  std::string all;
  for (const auto& l : captured) all += l + "\n";
  std::size_t cells = 0;
  for (const auto& p : manifest.participants)
    for (const auto& file : {p.train_file, p.test_file}) {
      const auto rows = lines_of(w.dir / "data" / file);
      for (std::size_t r = 1; r < rows.size(); ++r) {
        std::stringstream ss(rows[r]);
        std::string cell;
        std::vector<std::string> cols;
        while (std::getline(ss, cell, ',')) cols.push_back(cell);
        for (std::size_t c = 0; c + 1 < cols.size(); ++c) {
          ++cells;
          if (all.find(cols[c]) != std::string::npos) v.fail("feature value " + cols[c] + " appears on the wire");
        }
      }
    }
  if (kinds["REGISTER"] != 3 || kinds["PREDICTIONS"] != 3 || kinds["BUNDLE"] != 3)
    v.fail("unexpected message mix in the capture");
  if (v.pass)
    v.detail = std::to_string(captured.size()) + " messages valid, integers only, none of " + std::to_string(cells) +
               " local feature cells present";
  return v;
}

// ---------------------------------------------------------------- A8

Verdict determinism() {
  Verdict v;
  const auto dir = testing::scratch_dir("acceptance-determinism");
  report::write_text(dir / "cfg.json", R"({"partition": {"participants": 4}, "unlabeled": {"size": 500},
                                          "output_dir": "run"})");
  fs::create_directories(dir / "a");
  fs::create_directories(dir / "b");
  for (const char* root : {"a", "b"}) {
    ::setenv("COFED_OUTPUT_ROOT", (dir / root).c_str(), 1);
    if (cli(dir, "run cfg.json", std::string("run-") + root) != 0) v.fail(std::string("run into ") + root + " failed");
  }
  ::unsetenv("COFED_OUTPUT_ROOT");
  if (!v.pass) return v;
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir / "a" / "run")) {
    const auto other = dir / "b" / "run" / e.path().filename();
    if (!fs::exists(other) || report::read_text(e.path()) != report::read_text(other))
      v.fail(e.path().filename().string() + " differs between runs");
    ++files;
  }
  if (files == 0) v.fail("no report files written");
  if (v.pass) v.detail = std::to_string(files) + " files byte-identical";
  return v;
}

}  // namespace

int main() {
  bool all = true;
  auto report_line = [&](const char* name, const Verdict& v) {
    std::cout << name << " " << (v.pass ? "PASS" : "FAIL") << "  " << v.detail << std::endl;
    all = all && v.pass;
  };
  report_line("A1", aggregation_oracle());
  report_line("A2", alpha_monotonicity());
  report_line("A3", end_to_end_improvement());
  report_line("A4", size_trend());
  report_line("A5", theory_calculator());
  const auto t0 = Clock::now();
  const auto wire = run_over_wire();
  const double wire_seconds = seconds_since(t0);
  report_line("A6", wire_equivalence(wire, wire_seconds));
  report_line("A7", privacy_boundary(wire));
  report_line("A8", determinism());
  return all ? 0 : 1;
}
