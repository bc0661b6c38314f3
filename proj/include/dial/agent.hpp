#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "dial/gbdt.hpp"
#include "dial/metrics.hpp"
#include "dial/sim.hpp"
#include "dial/tuner.hpp"
#include "dial/types.hpp"

namespace dial {

enum class AgentMode { Tune, CollectTraining, Passive };

struct AgentConfig {
  double probe_interval = 0.5;
  int warmup_intervals = 2;
  // Collection dwell: each random action stays in force this many probe
  // intervals, and the label compares the settled ends of consecutive dwells.
  int collect_dwell = 2;
  TunerParams tuner;
  AgentMode mode = AgentMode::Tune;

  void validate() const {
    if (probe_interval <= 0) throw std::invalid_argument("agent: probe_interval > 0");
    if (warmup_intervals < 1) throw std::invalid_argument("agent: warmup_intervals >= 1");
    if (collect_dwell < 1) throw std::invalid_argument("agent: collect_dwell >= 1");
    tuner.validate();
  }
};

// Labeling rule: 1 iff next/prev > 1+epsilon; zero-throughput intervals are
// discarded rather than labeled.
inline std::optional<int> label(double prev_perf, double next_perf, double epsilon) {
  if (prev_perf < 0 || next_perf < 0) throw std::invalid_argument("label: negative throughput");
  if (prev_perf == 0.0) return std::nullopt;
  return next_perf / prev_perf > 1.0 + epsilon ? 1 : 0;
}

struct IntervalRecord {
  double time = 0.0;
  int client = -1;
  int ost = -1;
  int interval_index = 0;
  bool idle = false;
  bool applied = false;
  OpType op = OpType::Write;
  Configuration config_before;
  Configuration config_after;
  double chosen_p = 0.0;  // model probability of the applied theta, when applied
  double read_tput = 0.0;   // local estimate, bytes/s
  double write_tput = 0.0;  // local estimate, bytes/s
};

inline nlohmann::json to_json(const IntervalRecord& r) {
  return {{"time", r.time},
          {"client", r.client},
          {"ost", r.ost},
          {"interval", r.interval_index},
          {"idle", r.idle},
          {"applied", r.applied},
          {"op", to_string(r.op)},
          {"config_before",
           {{"rpc_window_pages", r.config_before.rpc_window_pages},
            {"rpcs_in_flight", r.config_before.rpcs_in_flight}}},
          {"config_after",
           {{"rpc_window_pages", r.config_after.rpc_window_pages},
            {"rpcs_in_flight", r.config_after.rpcs_in_flight}}},
          {"chosen_p", r.chosen_p},
          {"read_tput", r.read_tput},
          {"write_tput", r.write_tput}};
}

// One agent per OSC: the capability pair (client, ost) is the only state it
// may touch. Memory is O(1) in run length: the last raw probe, the last
// derived snapshot, and the pending exploration action.
class Agent {
 public:
  Agent(int client, int ost, AgentConfig cfg, const ConfigSpace& theta,
        std::shared_ptr<const GbdtModel> read_model, std::shared_ptr<const GbdtModel> write_model,
        std::uint64_t seed)
      : client_(client),
        ost_(ost),
        cfg_(cfg),
        theta_(theta),
        read_model_(std::move(read_model)),
        write_model_(std::move(write_model)),
        explore_rng_(seed ^ (0x9e3779b97f4a7c15ull * (client * 1024 + ost + 1))) {
    cfg_.validate();
    if (cfg_.mode == AgentMode::Tune && (!read_model_ || !write_model_))
      throw std::invalid_argument("agent: tune mode needs both models");
  }

  int client() const { return client_; }
  int ost() const { return ost_; }

  const std::vector<IntervalRecord>& records() const { return records_; }
  const std::vector<TrainingSample>& samples() const { return samples_; }
  std::uint64_t discarded_samples() const { return discarded_; }
  std::vector<TrainingSample> take_samples() { return std::move(samples_); }

  // Local throughput estimate per op: RPC-transferred bytes, plus bytes the
  // dirty cache absorbed for writes (work done without wire traffic).
  static double local_throughput(const MetricSnapshot& s, OpType op) {
    if (op == OpType::Read) return s.read.data_transfer_volume / s.interval;
    return (s.write.data_transfer_volume + s.estimated_cache_update) / s.interval;
  }

  // One probe boundary: probe -> derive -> select -> tune/explore -> apply.
  void step(SimState& sim, double now) {
    interval_++;
    RawCounters counters = sim.probe(client_, ost_);
    const Configuration current = sim.osc(client_, ost_).config;
    if (!prev_counters_) {
      prev_counters_ = counters;
      return;
    }
    MetricSnapshot snap = derive(counters, *prev_counters_, current, cfg_.probe_interval);
    snap.time = now;
    if (prev_snapshot_) attach_deltas(snap, *prev_snapshot_);

    IntervalRecord rec;
    rec.time = now;
    rec.client = client_;
    rec.ost = ost_;
    rec.interval_index = interval_;
    rec.config_before = current;
    rec.config_after = current;
    rec.read_tput = snap.read.data_transfer_volume / snap.interval;
    rec.write_tput = (snap.write.data_transfer_volume + snap.estimated_cache_update) / snap.interval;

    switch (cfg_.mode) {
      case AgentMode::Passive:
        break;
      case AgentMode::CollectTraining:
        collect_step(sim, snap, rec);
        break;
      case AgentMode::Tune:
        if (snap.has_deltas && interval_ > cfg_.warmup_intervals) tune_step(sim, snap, rec);
        break;
    }

    records_.push_back(rec);
    prev_counters_ = counters;
    prev_snapshot_ = snap;
  }

 private:
  void tune_step(SimState& sim, const MetricSnapshot& snap, IntervalRecord& rec) {
    ModelFn rm = [this](const std::vector<double>& x) { return read_model_->predict_proba(x); };
    ModelFn wm = [this](const std::vector<double>& x) { return write_model_->predict_proba(x); };
    TuneResult r = tune(rm, wm, snap, theta_, rec.config_before, cfg_.tuner);
    rec.idle = r.idle;
    rec.op = r.op;
    if (r.changed) {
      sim.set_config(client_, ost_, r.chosen);
      rec.applied = true;
      rec.config_after = r.chosen;
      rec.chosen_p = r.chosen_p;
    }
  }

  void collect_step(SimState& sim, const MetricSnapshot& snap, IntervalRecord& rec) {
    rec.op = select_op_type(snap).value_or(OpType::Write);
    rec.idle = !select_op_type(snap).has_value();
    if (++dwell_count_ < cfg_.collect_dwell) return;  // let the action settle
    dwell_count_ = 0;

    // Emit the sample for the previous action: its features were observed
    // strictly before the outcome measured now.
    if (pending_) {
      const double s_now = local_throughput(snap, pending_->op);
      auto lab = label(pending_->s_before, s_now, cfg_.tuner.epsilon);
      if (lab) {
        TrainingSample ts;
        ts.features = pending_->features;
        ts.label = *lab;
        ts.op = pending_->op;
        samples_.push_back(std::move(ts));
      } else {
        discarded_++;
      }
      pending_.reset();
    }
    // Random exploration: apply a uniform theta for the next dwell.
    const auto all = theta_.all();
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    const Configuration next = all[pick(explore_rng_)];
    const auto op = select_op_type(snap);
    if (snap.has_deltas && op) {
      Pending p;
      p.op = *op;
      p.s_before = local_throughput(snap, *op);
      p.features = feature_vector(snap, next, *op);
      pending_ = std::move(p);
    }
    if (!(next == rec.config_before)) {
      sim.set_config(client_, ost_, next);
      rec.applied = true;
      rec.config_after = next;
    }
  }

  struct Pending {
    OpType op = OpType::Write;
    double s_before = 0.0;
    std::vector<double> features;
  };

  int client_;
  int ost_;
  AgentConfig cfg_;
  ConfigSpace theta_;
  std::shared_ptr<const GbdtModel> read_model_;
  std::shared_ptr<const GbdtModel> write_model_;
  std::mt19937_64 explore_rng_;

  int interval_ = 0;
  int dwell_count_ = 0;
  std::optional<RawCounters> prev_counters_;
  std::optional<MetricSnapshot> prev_snapshot_;
  std::optional<Pending> pending_;

  std::vector<IntervalRecord> records_;
  std::vector<TrainingSample> samples_;
  std::uint64_t discarded_ = 0;
};

}  // namespace dial
