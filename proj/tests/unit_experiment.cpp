#include <catch2/catch_amalgamated.hpp>

#include <cstdio>

#include "dial/experiment.hpp"
#include "dial/report.hpp"

using namespace dial;
using Catch::Approx;

namespace {

Scenario fast_scenario() {
  Scenario s;
  return s;
}

WorkloadSequence one_phase(const std::string& name, double duration) {
  WorkloadSpec spec = parse_spec(name);
  spec.duration = duration;
  WorkloadSequence seq;
  seq.phases = {spec};
  seq.switch_interval = duration;
  return seq;
}

}  // namespace

TEST_CASE("sweep covers the whole grid and argmax dominates") {
  Scenario s = fast_scenario();
  WorkloadSpec spec = parse_spec("s_wr_sq_1m");
  spec.duration = 4.0;
  SweepResult res = sweep(s, spec, 71);
  REQUIRE(res.rows.size() == 42);
  for (const auto& row : res.rows) CHECK(res.best_bps >= row.op_bps);
  CHECK(s.theta.contains(res.best));
}

TEST_CASE("fixed run reproduces the matching sweep row exactly") {
  Scenario s = fast_scenario();
  WorkloadSpec spec = parse_spec("s_wr_rn_1m");
  spec.duration = 3.0;
  SweepResult res = sweep(s, spec, 5);

  RunPlan plan;
  plan.scenario = s;
  plan.per_client = {one_phase("s_wr_rn_1m", 3.0)};
  plan.mode = RunMode::Fixed;
  plan.fixed = res.rows[17].theta;
  plan.seed = 5;
  RunResult r = run_plan(plan);
  CHECK(r.phase_app_bps(0, OpType::Write) == res.rows[17].write_bps);
}

TEST_CASE("tuned run with a below-tau model has the default run's trace") {
  auto low = std::make_shared<GbdtModel>();
  low->base_score = -2.0;  // p ~ 0.12 for every candidate
  low->feature_count = kFeatureCount;

  RunPlan tuned;
  tuned.per_client = {one_phase("s_wr_sq_1m", 4.0)};
  tuned.mode = RunMode::Tuned;
  tuned.read_model = low;
  tuned.write_model = low;
  tuned.seed = 9;
  tuned.trace = true;
  RunResult rt = run_plan(tuned);

  RunPlan dflt = tuned;
  dflt.mode = RunMode::Default;
  dflt.read_model.reset();
  dflt.write_model.reset();
  RunResult rd = run_plan(dflt);

  CHECK(rt.trace_digest == rd.trace_digest);
  CHECK(rt.phase_app_bps(0, OpType::Write) == rd.phase_app_bps(0, OpType::Write));
}

TEST_CASE("contention monotonicity: a second client never helps the first") {
  for (const char* name : {"s_wr_sq_16m", "s_rd_sq_1m"}) {
    RunPlan solo;
    solo.per_client = {one_phase(name, 4.0)};
    solo.clients = 1;
    solo.seed = 31;
    RunResult alone = run_plan(solo);

    RunPlan pair = solo;
    pair.clients = 2;
    RunResult both = run_plan(pair);

    const OpType op = parse_spec(name).op;
    CHECK(both.client_app_bps(0, 0, op) <= alone.client_app_bps(0, 0, op) * 1.0000001);
  }
}

TEST_CASE("phase switch conserves pages (drained accounting balances)") {
  WorkloadSequence seq;
  WorkloadSpec a = parse_spec("s_wr_sq_1m");
  WorkloadSpec b = parse_spec("s_wr_rn_8k");
  a.duration = b.duration = 2.0;
  seq.phases = {a, b};
  seq.switch_interval = 2.0;

  RunPlan plan;
  plan.per_client = {seq};
  plan.seed = 13;
  plan.drain_at_end = true;
  RunResult r = run_plan(plan);
  std::uint64_t accepted = 0, completed = 0, absorbed = 0, dirty = 0;
  for (const auto& per : r.final_counters[0]) {
    accepted += per.llite_bytes_written_total;
    completed += per.write.bytes_transferred;
    absorbed += per.cache_absorbed_bytes;
    dirty += per.dirty_pages_current;
  }
  CHECK(dirty == 0);
  CHECK(completed == accepted - absorbed);
}

TEST_CASE("multi-phase run reports one row per phase") {
  WorkloadSequence seq;
  for (const char* n : {"s_rd_sq_1m", "s_rd_rn_8k", "s_rd_sq_16m", "s_rd_rn_1m"}) {
    WorkloadSpec sp = parse_spec(n);
    sp.duration = 1.5;
    seq.phases.push_back(sp);
  }
  seq.switch_interval = 1.5;
  RunPlan plan;
  plan.per_client = {seq};
  plan.seed = 17;
  RunResult r = run_plan(plan);
  REQUIRE(r.phases.size() == 4);
  for (const auto& ph : r.phases) CHECK(ph.duration == 1.5);
  CHECK(r.phase_app_bps(0, OpType::Read) > 0);
}

TEST_CASE("collect_dataset gathers labeled samples from the base patterns") {
  Scenario s = fast_scenario();
  Dataset ds = collect_dataset(s, 10.0, 1, 4242);
  CHECK(ds.runs == 12);
  // single-OST training files: one active OSC, (20 probes - warmup) / dwell each
  CHECK(ds.read_samples.size() > 40);
  CHECK(ds.write_samples.size() > 40);
  bool has_pos = false, has_neg = false;
  for (const auto& t : ds.write_samples) (t.label ? has_pos : has_neg) = true;
  CHECK(has_pos);
  CHECK(has_neg);
}

TEST_CASE("results csv round-trips through re-ingestion") {
  ResultsFile f;
  f.provenance["tool_version"] = kToolVersion;
  f.provenance["seed"] = "42";
  f.provenance["mode"] = "tuned";
  f.rows.push_back({0, "all", 0, 0, 123.456789, 77.25, 0.0});
  f.rows.push_back({0, "2", 1, 3, 0.125, 9.5, 1.75});
  const std::string path = "test_results_roundtrip.csv";
  save_results_csv(f, path);
  ResultsFile back = load_results_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.rows.size() == 2);
  CHECK(back.provenance.at("seed") == "42");
  CHECK(back.provenance.at("mode") == "tuned");
  CHECK(back.rows[0].read_mbps == f.rows[0].read_mbps);
  CHECK(back.rows[1].osc == "2");
  CHECK(back.rows[1].absorbed_mbps == 1.75);
}

TEST_CASE("report normalizes against default and flags missing cells") {
  std::vector<ReportLine> lines(2);
  lines[0].workload = "s_wr_sq_16m";
  lines[0].has_default = lines[0].has_tuned = true;
  lines[0].dflt = {100.0, 1.0, 5};
  lines[0].tuned = {150.0, 2.0, 5};
  lines[1].workload = "s_rd_rn_8k";
  lines[1].has_tuned = true;
  lines[1].tuned = {88.0, 1.0, 5};
  const std::string text = render_report(lines);
  CHECK(text.find("1.50") != std::string::npos);
  CHECK(text.find("NA") != std::string::npos);
}

TEST_CASE("training pipeline trains both ops on simulator data") {
  Scenario s = fast_scenario();
  Dataset ds = collect_dataset(s, 8.0, 2, 777);
  Hyperparams hp;
  hp.num_trees = 60;
  hp.max_depth = 4;
  TrainOutcome write_out = train_with_holdout(ds.write_samples, hp, 1);
  CHECK(write_out.holdout.n > 0);
  CHECK(write_out.holdout.error_rate < 0.5);
  TrainOutcome read_out = train_with_holdout(ds.read_samples, hp, 1);
  CHECK(read_out.holdout.error_rate < 0.5);
}
