#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "dial/agent.hpp"
#include "dial/experiment.hpp"

using namespace dial;
using Catch::Approx;

namespace {

// Constant-probability model: an empty ensemble predicts sigmoid(base_score).
std::shared_ptr<const GbdtModel> constant_model(double p, OpType op) {
  auto m = std::make_shared<GbdtModel>();
  m->base_score = std::log(p / (1.0 - p));
  m->op = op;
  m->feature_count = kFeatureCount;
  return m;
}

}  // namespace

TEST_CASE("label rule: threshold, identity, boundary, zero and negative") {
  CHECK_FALSE(label(0.0, 123.0, 0.15).has_value());
  CHECK(label(100.0, 100.0, 0.15) == 0);
  CHECK(label(200.0, 231.0, 0.15) == 1);   // ratio 1.155
  CHECK(label(100.0, 114.9, 0.15) == 0);   // 1.149 below threshold
  CHECK(label(100.0, 115.0, 0.15) == 0);   // strict inequality
  CHECK(label(100.0, 120.0, 0.15) == 1);
  CHECK_THROWS_AS(label(-1.0, 2.0, 0.15), std::invalid_argument);
}

TEST_CASE("agent below tau never changes the configuration") {
  WorkloadSpec spec = parse_spec("s_wr_sq_1m");
  spec.duration = 10.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 10.0}};
  plan.mode = RunMode::Tuned;
  plan.read_model = constant_model(0.3, OpType::Read);
  plan.write_model = constant_model(0.3, OpType::Write);
  plan.seed = 11;
  RunResult r = run_plan(plan);
  REQUIRE_FALSE(r.records.empty());
  for (const auto& rec : r.records) {
    CHECK_FALSE(rec.applied);
    CHECK(rec.config_after == plan.scenario.default_config);
  }
}

TEST_CASE("agent warms up before acting") {
  WorkloadSpec spec = parse_spec("s_wr_sq_1m");
  spec.duration = 5.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 5.0}};
  plan.mode = RunMode::Tuned;
  plan.read_model = constant_model(0.95, OpType::Read);
  plan.write_model = constant_model(0.95, OpType::Write);
  plan.seed = 3;
  RunResult r = run_plan(plan);
  for (const auto& rec : r.records)
    if (rec.interval_index <= plan.agent.warmup_intervals) CHECK_FALSE(rec.applied);
}

TEST_CASE("constant high model drives write selection to the regularizer argmax") {
  WorkloadSpec spec = parse_spec("s_wr_sq_1m");
  spec.duration = 5.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 5.0}};
  plan.mode = RunMode::Tuned;
  plan.read_model = constant_model(0.95, OpType::Read);
  plan.write_model = constant_model(0.95, OpType::Write);
  plan.seed = 3;
  RunResult r = run_plan(plan);
  bool applied_any = false;
  for (const auto& rec : r.records)
    if (rec.applied) {
      applied_any = true;
      CHECK(rec.config_after == Configuration{1024, 32});
      CHECK(rec.chosen_p == Approx(0.95).margin(1e-9));
    }
  CHECK(applied_any);
}

TEST_CASE("threshold soundness over tuned-run logs") {
  WorkloadSpec spec = parse_spec("s_wr_rn_8k");
  spec.duration = 8.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 8.0}};
  plan.mode = RunMode::Tuned;
  plan.read_model = constant_model(0.85, OpType::Read);
  plan.write_model = constant_model(0.85, OpType::Write);
  plan.seed = 5;
  RunResult r = run_plan(plan);
  for (const auto& rec : r.records)
    if (rec.applied) CHECK(rec.chosen_p > 0.8);
}

TEST_CASE("collect mode emits causal samples bounded by the probe count") {
  WorkloadSpec spec = parse_spec("s_wr_sq_1m");
  spec.duration = 30.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 30.0}};
  plan.mode = RunMode::Collect;
  plan.seed = 21;
  RunResult r = run_plan(plan);
  // 60 probes per OSC; first two are warmup, one interval lag for labeling
  const std::size_t probes_per_osc = std::size_t(30.0 / plan.agent.probe_interval);
  const std::size_t osc_count = 4;
  CHECK(r.read_samples.size() + r.write_samples.size() + r.discarded <=
        (probes_per_osc - 3) * osc_count);
  CHECK(r.read_samples.size() + r.write_samples.size() > 0);
  for (const auto& s : r.write_samples) {
    REQUIRE(s.features.size() == kFeatureCount);
    CHECK(s.op == OpType::Write);
    CHECK((s.label == 0 || s.label == 1));
  }
}

TEST_CASE("collect on a write-only pattern produces only write samples") {
  WorkloadSpec spec = parse_spec("s_wr_rn_1m");
  spec.duration = 15.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 15.0}};
  plan.mode = RunMode::Collect;
  plan.seed = 2;
  RunResult r = run_plan(plan);
  CHECK(r.read_samples.empty());
  CHECK(!r.write_samples.empty());
}

TEST_CASE("per-osc agents explore independently") {
  WorkloadSpec spec = parse_spec("s_wr_sq_16m");
  spec.duration = 10.0;
  RunPlan plan;
  plan.per_client = {{{spec}, 10.0}};
  plan.mode = RunMode::Collect;
  plan.seed = 8;
  RunResult r = run_plan(plan);
  // at some probe, two OSCs of the same client hold different configurations
  std::map<double, std::map<int, Configuration>> at_time;
  for (const auto& rec : r.records) at_time[rec.time][rec.ost] = rec.config_after;
  bool diverged = false;
  for (const auto& [t, per_ost] : at_time) {
    std::set<std::pair<std::uint32_t, std::uint32_t>> configs;
    for (const auto& [o, c] : per_ost) configs.insert({c.rpc_window_pages, c.rpcs_in_flight});
    if (configs.size() > 1) diverged = true;
  }
  CHECK(diverged);
}
