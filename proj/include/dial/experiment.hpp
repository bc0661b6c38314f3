#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "dial/agent.hpp"
#include "dial/gbdt.hpp"
#include "dial/scenario.hpp"
#include "dial/sim.hpp"
#include "dial/workload.hpp"

namespace dial {

enum class RunMode { Default, Tuned, Fixed, Collect, Passive };

inline const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::Default: return "default";
    case RunMode::Tuned: return "tuned";
    case RunMode::Fixed: return "fixed";
    case RunMode::Collect: return "collect";
    case RunMode::Passive: return "passive";
  }
  return "?";
}

struct RunPlan {
  Scenario scenario;
  std::vector<WorkloadSequence> per_client;  // one entry, or one per client
  int clients = 1;
  RunMode mode = RunMode::Default;
  Configuration fixed{256, 8};
  AgentConfig agent;
  std::shared_ptr<const GbdtModel> read_model;
  std::shared_ptr<const GbdtModel> write_model;
  std::uint64_t seed = 42;
  bool trace = false;
  bool drain_at_end = false;  // flush and run the pipelines empty before reporting counters

  const WorkloadSequence& sequence_for(int client) const {
    return per_client.size() == 1 ? per_client[0] : per_client.at(client);
  }

  void validate() const {
    if (clients < 1) throw std::invalid_argument("plan: clients >= 1");
    if (per_client.empty()) throw std::invalid_argument("plan: no workload");
    if (per_client.size() != 1 && int(per_client.size()) != clients)
      throw std::invalid_argument("plan: per-client workloads must match client count");
    std::size_t phases = per_client[0].phases.size();
    double si = per_client[0].switch_interval;
    for (const auto& seq : per_client) {
      seq.validate();
      if (seq.phases.size() != phases || seq.switch_interval != si)
        throw std::invalid_argument("plan: client sequences must share the phase grid");
    }
    if (mode == RunMode::Fixed && !scenario.theta.contains(fixed))
      throw std::invalid_argument("plan: fixed configuration outside theta");
  }
};

struct PhaseStats {
  int phase = 0;
  double start = 0.0;
  double duration = 0.0;
  // app-level bytes per client, and RPC-level bytes per (client, ost)
  std::vector<std::array<std::uint64_t, 2>> client_app_bytes;             // [read, write]
  std::vector<std::vector<std::array<std::uint64_t, 2>>> osc_rpc_bytes;   // [client][ost][op]
  std::vector<std::vector<std::uint64_t>> osc_absorbed_bytes;             // [client][ost]
};

struct TputSample {
  double time = 0.0;
  int client = 0;
  double read_bps = 0.0;
  double write_bps = 0.0;
};

struct RunResult {
  std::vector<PhaseStats> phases;
  std::vector<IntervalRecord> records;
  std::vector<TrainingSample> read_samples;
  std::vector<TrainingSample> write_samples;
  std::uint64_t discarded = 0;
  std::uint64_t trace_digest = 0;
  std::vector<TputSample> series;  // per probe interval, per client
  std::vector<std::vector<RawCounters>> final_counters;  // [client][ost], after any drain
  std::vector<std::array<std::uint64_t, 2>> final_app_bytes;  // [client][read, write]

  // App-level throughput for one phase, summed over clients, bytes/second.
  double phase_app_bps(int phase, OpType op) const {
    const auto& ph = phases.at(phase);
    std::uint64_t total = 0;
    for (const auto& per : ph.client_app_bytes) total += per[op == OpType::Read ? 0 : 1];
    return double(total) / ph.duration;
  }

  double client_app_bps(int phase, int client, OpType op) const {
    const auto& ph = phases.at(phase);
    return double(ph.client_app_bytes.at(client)[op == OpType::Read ? 0 : 1]) / ph.duration;
  }
};

namespace detail {

struct StreamDriver {
  int client = 0;
  int index = 0;
  std::uint32_t file_id = 0;
  int outstanding = 0;
  std::unique_ptr<StreamGen> gen;
};

}  // namespace detail

// Executes one simulated run end to end: workload streams (closed loop,
// queue depth per spec), per-OSC agents at every probe boundary, phase
// switches in place without resetting simulator or agent state.
inline RunResult run_plan(const RunPlan& plan) {
  plan.validate();
  Scenario scenario = plan.scenario;
  scenario.seed = plan.seed;
  SimState sim(scenario, plan.clients);
  sim.set_trace_enabled(plan.trace);

  const std::size_t num_phases = plan.per_client[0].phases.size();
  const double switch_interval = plan.per_client[0].switch_interval;
  const double total = double(num_phases) * switch_interval;

  // files: one per (client, stream), sized for the largest phase
  constexpr int kMaxStreams = 8;
  for (int c = 0; c < plan.clients; ++c) {
    const auto& seq = plan.sequence_for(c);
    int max_streams = 0;
    std::uint64_t max_size = 0;
    std::uint32_t stripes = 0;
    for (const auto& ph : seq.phases) {
      max_streams = std::max(max_streams, ph.streams);
      max_size = std::max(max_size, ph.file_size);
      stripes = std::max(stripes, ph.stripe_count);
    }
    for (int s = 0; s < max_streams; ++s)
      sim.register_file(std::uint32_t(c * kMaxStreams + s), max_size, stripes,
                        std::uint32_t(s) % scenario.num_osts);
  }

  // stream drivers
  std::vector<std::vector<detail::StreamDriver>> streams(plan.clients);
  std::vector<int> phase_of(plan.clients, -1);

  struct Ctx {
    SimState* sim;
    const RunPlan* plan;
    std::vector<std::vector<detail::StreamDriver>>* streams;
    std::vector<int>* phase_of;
    double switch_interval;
    std::size_t num_phases;
  };
  auto ctx = std::make_shared<Ctx>(
      Ctx{&sim, &plan, &streams, &phase_of, switch_interval, num_phases});

  // closed-loop issue: one request out, one back in while the phase lasts
  std::function<void(int, int)> issue = [&issue, ctx](int client, int index) {
    auto& st = (*ctx->streams)[client][index];
    const int phase = (*ctx->phase_of)[client];
    if (phase < 0 || std::size_t(phase) >= ctx->num_phases) return;
    const auto& spec = ctx->plan->sequence_for(client).phases[phase];
    if (index >= spec.streams) return;
    const double phase_end = double(phase + 1) * ctx->switch_interval;
    if (ctx->sim->clock() >= phase_end) return;
    IoRequest req = st.gen->next(ctx->sim->clock());
    st.outstanding++;
    ctx->sim->submit_io(client, req, [&issue, ctx, client, index, think = spec.think_time](double t) {
      auto& st2 = (*ctx->streams)[client][index];
      st2.outstanding--;
      if (think > 0)
        ctx->sim->schedule(t + think, [&issue, client, index] { issue(client, index); });
      else
        issue(client, index);
    });
  };

  auto enter_phase = [&](int phase) {
    for (int c = 0; c < plan.clients; ++c) {
      const auto& seq = plan.sequence_for(c);
      const auto& spec = seq.phases[phase];
      phase_of[c] = phase;
      streams[c].resize(std::max<std::size_t>(streams[c].size(), spec.streams));
      for (int s = 0; s < int(streams[c].size()); ++s) {
        auto& st = streams[c][s];
        st.client = c;
        st.index = s;
        st.file_id = std::uint32_t(c * kMaxStreams + s);
        if (s < spec.streams)
          st.gen = std::make_unique<StreamGen>(
              spec, st.file_id, plan.seed + 0x51ed2701u * std::uint64_t(phase + 1), c * kMaxStreams + s);
        else
          st.gen.reset();
      }
      for (int s = 0; s < spec.streams; ++s)
        while (streams[c][s].outstanding < spec.queue_depth &&
               sim.clock() < double(phase + 1) * switch_interval)
          issue(c, s);
    }
  };

  // agents
  std::vector<std::unique_ptr<Agent>> agents;
  if (plan.mode == RunMode::Tuned || plan.mode == RunMode::Collect || plan.mode == RunMode::Passive) {
    AgentConfig acfg = plan.agent;
    acfg.mode = plan.mode == RunMode::Tuned ? AgentMode::Tune
                : plan.mode == RunMode::Collect ? AgentMode::CollectTraining
                                                : AgentMode::Passive;
    for (int c = 0; c < plan.clients; ++c)
      for (std::uint32_t o = 0; o < scenario.num_osts; ++o)
        agents.push_back(std::make_unique<Agent>(c, int(o), acfg, scenario.theta, plan.read_model,
                                                 plan.write_model, plan.seed));
  }
  if (plan.mode == RunMode::Fixed)
    for (int c = 0; c < plan.clients; ++c)
      for (std::uint32_t o = 0; o < scenario.num_osts; ++o) sim.set_config(c, int(o), plan.fixed);

  RunResult result;

  // bookkeeping helpers
  auto client_app = [&](int c) {
    return std::array<std::uint64_t, 2>{sim.client(c).app_read_bytes, sim.client(c).app_write_bytes};
  };
  std::vector<std::array<std::uint64_t, 2>> app_mark(plan.clients, {0, 0});
  std::vector<std::vector<std::array<std::uint64_t, 2>>> rpc_mark(
      plan.clients, std::vector<std::array<std::uint64_t, 2>>(scenario.num_osts, {0, 0}));
  std::vector<std::vector<std::uint64_t>> absorbed_mark(
      plan.clients, std::vector<std::uint64_t>(scenario.num_osts, 0));
  std::vector<std::array<std::uint64_t, 2>> series_mark(plan.clients, {0, 0});

  auto close_phase = [&](int phase, double start) {
    PhaseStats ps;
    ps.phase = phase;
    ps.start = start;
    ps.duration = switch_interval;
    for (int c = 0; c < plan.clients; ++c) {
      auto now_app = client_app(c);
      ps.client_app_bytes.push_back(
          {now_app[0] - app_mark[c][0], now_app[1] - app_mark[c][1]});
      app_mark[c] = now_app;
      std::vector<std::array<std::uint64_t, 2>> per_osc;
      std::vector<std::uint64_t> per_absorbed;
      for (std::uint32_t o = 0; o < scenario.num_osts; ++o) {
        RawCounters rc = sim.probe(c, int(o));
        per_osc.push_back({rc.read.bytes_transferred - rpc_mark[c][o][0],
                           rc.write.bytes_transferred - rpc_mark[c][o][1]});
        rpc_mark[c][o] = {rc.read.bytes_transferred, rc.write.bytes_transferred};
        per_absorbed.push_back(rc.cache_absorbed_bytes - absorbed_mark[c][o]);
        absorbed_mark[c][o] = rc.cache_absorbed_bytes;
      }
      ps.osc_rpc_bytes.push_back(std::move(per_osc));
      ps.osc_absorbed_bytes.push_back(std::move(per_absorbed));
    }
    result.phases.push_back(std::move(ps));
  };

  // schedule phase switches first so they precede probes at equal timestamps
  for (std::size_t p = 1; p < num_phases; ++p)
    sim.schedule(double(p) * switch_interval, [&, p] {
      close_phase(int(p) - 1, double(p - 1) * switch_interval);
      enter_phase(int(p));
    });

  const double pi = plan.agent.probe_interval;
  if (!agents.empty() || plan.mode == RunMode::Default || plan.mode == RunMode::Fixed) {
    const int nprobes = int(total / pi + 1e-9);
    for (int k = 1; k <= nprobes; ++k)
      sim.schedule(double(k) * pi, [&, k] {
        for (auto& a : agents) a->step(sim, sim.clock());
        for (int c = 0; c < plan.clients; ++c) {
          auto now_app = client_app(c);
          result.series.push_back({sim.clock(), c,
                                   double(now_app[0] - series_mark[c][0]) / pi,
                                   double(now_app[1] - series_mark[c][1]) / pi});
          series_mark[c] = now_app;
        }
      });
  }

  enter_phase(0);
  sim.advance(total);
  close_phase(int(num_phases) - 1, total - switch_interval);
  if (plan.drain_at_end) {
    for (int c = 0; c < plan.clients; ++c) phase_of[c] = int(num_phases);  // stop reissue
    sim.drain();
  }
  for (int c = 0; c < plan.clients; ++c) {
    std::vector<RawCounters> per;
    for (std::uint32_t o = 0; o < scenario.num_osts; ++o) per.push_back(sim.probe(c, int(o)));
    result.final_counters.push_back(std::move(per));
    result.final_app_bytes.push_back({sim.client(c).app_read_bytes, sim.client(c).app_write_bytes});
  }

  for (auto& a : agents) {
    for (const auto& r : a->records()) result.records.push_back(r);
    result.discarded += a->discarded_samples();
    for (auto& s : a->take_samples())
      (s.op == OpType::Read ? result.read_samples : result.write_samples).push_back(std::move(s));
  }
  if (plan.trace) result.trace_digest = sim.trace_digest();
  return result;
}

// --- exhaustive sweep ------------------------------------------------------

struct SweepRow {
  Configuration theta;
  double read_bps = 0.0;
  double write_bps = 0.0;
  double op_bps = 0.0;  // the workload's op
};

struct SweepResult {
  std::vector<SweepRow> rows;  // theta order: ascending window, then inflight
  Configuration best;
  double best_bps = 0.0;
};

// Runs the workload once per theta under a fixed configuration. The argmax is
// the first maximum in ascending theta order, making ties deterministic.
inline SweepResult sweep(const Scenario& scenario, const WorkloadSpec& spec, std::uint64_t seed) {
  SweepResult res;
  WorkloadSequence seq;
  seq.phases = {spec};
  seq.switch_interval = spec.duration;
  for (const Configuration& theta : scenario.theta.all()) {
    RunPlan plan;
    plan.scenario = scenario;
    plan.per_client = {seq};
    plan.clients = 1;
    plan.mode = RunMode::Fixed;
    plan.fixed = theta;
    plan.seed = seed;
    RunResult r = run_plan(plan);
    SweepRow row;
    row.theta = theta;
    row.read_bps = r.phase_app_bps(0, OpType::Read);
    row.write_bps = r.phase_app_bps(0, OpType::Write);
    row.op_bps = spec.op == OpType::Read ? row.read_bps : row.write_bps;
    res.rows.push_back(row);
    if (res.rows.size() == 1 || row.op_bps > res.best_bps) {
      res.best = theta;
      res.best_bps = row.op_bps;
    }
  }
  return res;
}

// --- training-data collection and model fitting ----------------------------

inline const std::vector<std::string>& base_training_patterns() {
  static const std::vector<std::string> p = {
      "s_rd_sq_8k", "s_rd_sq_1m", "s_rd_sq_16m", "s_rd_rn_8k", "s_rd_rn_1m", "s_rd_rn_16m",
      "s_wr_sq_8k", "s_wr_sq_1m", "s_wr_sq_16m", "s_wr_rn_8k", "s_wr_rn_1m", "s_wr_rn_16m"};
  return p;
}

struct Dataset {
  std::vector<TrainingSample> read_samples;
  std::vector<TrainingSample> write_samples;
  std::uint64_t discarded = 0;
  int runs = 0;
};

// The paper-shaped protocol: every base single-stream pattern, random
// configuration actions at every probe, labels from the following interval.
inline Dataset collect_dataset(const Scenario& scenario, double run_duration, int repeats,
                               std::uint64_t seed, const AgentConfig& agent_cfg = {}) {
  Dataset ds;
  for (const std::string& name : base_training_patterns()) {
    WorkloadSpec spec = parse_spec(name);
    spec.duration = run_duration;
    spec.stripe_count = 1;  // one stream, one OST: the action-outcome loop stays local
    WorkloadSequence seq;
    seq.phases = {spec};
    seq.switch_interval = run_duration;
    for (int rep = 0; rep < repeats; ++rep) {
      RunPlan plan;
      plan.scenario = scenario;
      plan.per_client = {seq};
      plan.clients = 1;
      plan.mode = RunMode::Collect;
      plan.agent = agent_cfg;
      plan.seed = seed + std::uint64_t(rep) * 7919 + fnv1a(name) % 1000003;
      RunResult r = run_plan(plan);
      for (auto& s : r.read_samples) ds.read_samples.push_back(std::move(s));
      for (auto& s : r.write_samples) ds.write_samples.push_back(std::move(s));
      ds.discarded += r.discarded;
      ds.runs++;
    }
  }
  return ds;
}

struct TrainOutcome {
  GbdtModel model;
  EvalReport holdout;
  std::size_t train_n = 0;
  std::size_t eval_n = 0;
};

// 80:20 split with a seeded shuffle, then standard training; the holdout
// report is what cmd_train prints.
inline TrainOutcome train_with_holdout(std::vector<TrainingSample> samples, const Hyperparams& hp,
                                       std::uint64_t split_seed) {
  if (samples.size() < 10) throw std::invalid_argument("train_with_holdout: too few samples");
  std::mt19937_64 rng(split_seed);
  for (std::size_t i = samples.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(samples[i], samples[pick(rng)]);
  }
  const std::size_t eval_n = samples.size() / 5;
  std::vector<TrainingSample> eval(samples.begin(), samples.begin() + eval_n);
  std::vector<TrainingSample> train_set(samples.begin() + eval_n, samples.end());
  TrainOutcome out;
  out.model = train(train_set, hp);
  out.holdout = evaluate(out.model, eval);
  out.train_n = train_set.size();
  out.eval_n = eval.size();
  return out;
}

// --- sample file I/O --------------------------------------------------------

inline void save_samples_jsonl(const std::vector<TrainingSample>& samples, const std::string& path,
                               const std::string& provenance) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write samples file: " + path);
  if (!provenance.empty()) out << "#" << provenance << "\n";
  for (const auto& s : samples) out << to_json(s).dump() << "\n";
}

inline std::vector<TrainingSample> load_samples_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples file: " + path);
  std::vector<TrainingSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    out.push_back(sample_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

}  // namespace dial
