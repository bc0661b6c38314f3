#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dial/config.hpp"
#include "dial/types.hpp"

namespace dial {

// Raw per-OSC counters as a probe would read them. All cumulative except
// dirty_pages_current, which is a gauge.
struct RawCounters {
  struct PerOp {
    std::uint64_t rpc_count = 0;
    std::uint64_t page_count = 0;
    double rpc_latency_sum = 0.0;        // seconds, dispatch -> completion
    double inflight_sample_sum = 0.0;    // sampled at dispatch/completion points
    std::uint64_t inflight_sample_count = 0;
    std::uint64_t bytes_transferred = 0;
  };

  PerOp read;
  PerOp write;
  std::uint64_t dirty_pages_current = 0;
  std::uint64_t dirty_pages_max = 0;
  std::uint64_t cache_absorbed_bytes = 0;
  std::uint64_t llite_bytes_written_total = 0;

  PerOp& op(OpType o) { return o == OpType::Read ? read : write; }
  const PerOp& op(OpType o) const { return o == OpType::Read ? read : write; }
};

struct OpMetrics {
  double rpc_page_utilization = 0.0;   // mean pages/RPC / window
  double rpc_channel_utilization = 0.0;  // mean inflight / cap, clamped to [0,1]
  double unit_page_rpc_latency = 0.0;  // s/page, latency / (pages_per_rpc * (inflight+1))
  double data_transfer_volume = 0.0;   // bytes moved in the interval
};

// Derived local metric vector s_t for one OSC and one probe interval.
struct MetricSnapshot {
  OpMetrics read;
  OpMetrics write;
  double dirty_cache_utilization = 0.0;
  double estimated_cache_update = 0.0;  // bytes absorbed in cache, not transferred

  bool has_deltas = false;
  OpMetrics read_delta;
  OpMetrics write_delta;
  double dirty_cache_utilization_delta = 0.0;
  double estimated_cache_update_delta = 0.0;

  double interval = 0.0;
  double time = 0.0;
  Configuration config_at_sample;

  const OpMetrics& op(OpType o) const { return o == OpType::Read ? read : write; }
  const OpMetrics& op_delta(OpType o) const { return o == OpType::Read ? read_delta : write_delta; }
};

namespace detail {
inline double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

inline OpMetrics derive_op(const RawCounters::PerOp& curr, const RawCounters::PerOp& prev,
                           const Configuration& config) {
  OpMetrics m;
  const double rpcs = double(curr.rpc_count - prev.rpc_count);
  const double pages = double(curr.page_count - prev.page_count);
  const double lat = curr.rpc_latency_sum - prev.rpc_latency_sum;
  const double infl_sum = curr.inflight_sample_sum - prev.inflight_sample_sum;
  const double infl_cnt = double(curr.inflight_sample_count - prev.inflight_sample_count);
  const double mean_pages = ratio_or_zero(pages, rpcs);
  const double mean_inflight = ratio_or_zero(infl_sum, infl_cnt);
  const double mean_latency = ratio_or_zero(lat, rpcs);

  m.rpc_page_utilization =
      std::min(1.0, ratio_or_zero(mean_pages, double(config.rpc_window_pages)));
  m.rpc_channel_utilization =
      std::min(1.0, ratio_or_zero(mean_inflight, double(config.rpcs_in_flight)));
  m.unit_page_rpc_latency = ratio_or_zero(mean_latency, mean_pages * (mean_inflight + 1.0));
  m.data_transfer_volume = double(curr.bytes_transferred - prev.bytes_transferred);
  return m;
}
}  // namespace detail

// Pure function of (curr, prev, config, interval). Zero denominators yield 0,
// so an idle interval produces an all-zero snapshot rather than NaNs.
inline MetricSnapshot derive(const RawCounters& curr, const RawCounters& prev,
                             const Configuration& config, double interval) {
  if (interval <= 0.0) throw std::invalid_argument("derive: interval must be positive");
  if (curr.read.rpc_count < prev.read.rpc_count || curr.write.rpc_count < prev.write.rpc_count ||
      curr.llite_bytes_written_total < prev.llite_bytes_written_total)
    throw std::invalid_argument("derive: prev counters are newer than curr");
  MetricSnapshot s;
  s.read = detail::derive_op(curr.read, prev.read, config);
  s.write = detail::derive_op(curr.write, prev.write, config);
  s.dirty_cache_utilization =
      detail::ratio_or_zero(double(curr.dirty_pages_current), double(curr.dirty_pages_max));
  s.estimated_cache_update = double(curr.cache_absorbed_bytes - prev.cache_absorbed_bytes);
  s.interval = interval;
  s.config_at_sample = config;
  return s;
}

inline void attach_deltas(MetricSnapshot& s, const MetricSnapshot& prev) {
  auto d = [](const OpMetrics& a, const OpMetrics& b) {
    OpMetrics m;
    m.rpc_page_utilization = a.rpc_page_utilization - b.rpc_page_utilization;
    m.rpc_channel_utilization = a.rpc_channel_utilization - b.rpc_channel_utilization;
    m.unit_page_rpc_latency = a.unit_page_rpc_latency - b.unit_page_rpc_latency;
    m.data_transfer_volume = a.data_transfer_volume - b.data_transfer_volume;
    return m;
  };
  s.read_delta = d(s.read, prev.read);
  s.write_delta = d(s.write, prev.write);
  s.dirty_cache_utilization_delta = s.dirty_cache_utilization - prev.dirty_cache_utilization;
  s.estimated_cache_update_delta = s.estimated_cache_update - prev.estimated_cache_update;
  s.has_deltas = true;
}

// Model input layout, frozen; see docs/feature-schema.md. Slots:
//  0..3  op metrics (page util, channel util, unit page latency, volume)
//  4..5  shared metrics (dirty cache util, estimated cache update)
//  6..11 deltas of slots 0..5
// 12..13 current configuration (window pages, rpcs in flight)
// 14..15 candidate configuration (window pages, rpcs in flight)
inline constexpr std::size_t kFeatureCount = 16;

inline std::vector<double> feature_vector(const MetricSnapshot& snap, const Configuration& candidate,
                                          OpType op) {
  if (!snap.has_deltas)
    throw std::invalid_argument("feature_vector: snapshot has no deltas (needs two probes)");
  const OpMetrics& m = snap.op(op);
  const OpMetrics& d = snap.op_delta(op);
  return {
      m.rpc_page_utilization,
      m.rpc_channel_utilization,
      m.unit_page_rpc_latency,
      m.data_transfer_volume,
      snap.dirty_cache_utilization,
      snap.estimated_cache_update,
      d.rpc_page_utilization,
      d.rpc_channel_utilization,
      d.unit_page_rpc_latency,
      d.data_transfer_volume,
      snap.dirty_cache_utilization_delta,
      snap.estimated_cache_update_delta,
      double(snap.config_at_sample.rpc_window_pages),
      double(snap.config_at_sample.rpcs_in_flight),
      double(candidate.rpc_window_pages),
      double(candidate.rpcs_in_flight),
  };
}

inline const std::array<const char*, kFeatureCount>& feature_names() {
  static const std::array<const char*, kFeatureCount> names = {
      "rpc_page_utilization", "rpc_channel_utilization", "unit_page_rpc_latency",
      "data_transfer_volume", "dirty_cache_utilization", "estimated_cache_update",
      "d_rpc_page_utilization", "d_rpc_channel_utilization", "d_unit_page_rpc_latency",
      "d_data_transfer_volume", "d_dirty_cache_utilization", "d_estimated_cache_update",
      "current_window_pages", "current_rpcs_in_flight", "candidate_window_pages",
      "candidate_rpcs_in_flight"};
  return names;
}

inline nlohmann::json to_json(const OpMetrics& m) {
  return {{"rpc_page_utilization", m.rpc_page_utilization},
          {"rpc_channel_utilization", m.rpc_channel_utilization},
          {"unit_page_rpc_latency", m.unit_page_rpc_latency},
          {"data_transfer_volume", m.data_transfer_volume}};
}

inline OpMetrics op_metrics_from_json(const nlohmann::json& j) {
  OpMetrics m;
  m.rpc_page_utilization = j.at("rpc_page_utilization").get<double>();
  m.rpc_channel_utilization = j.at("rpc_channel_utilization").get<double>();
  m.unit_page_rpc_latency = j.at("unit_page_rpc_latency").get<double>();
  m.data_transfer_volume = j.at("data_transfer_volume").get<double>();
  return m;
}

// One snapshot per JSONL line, carrying the schema version.
inline nlohmann::json to_json(const MetricSnapshot& s) {
  nlohmann::json j{{"schema_version", kSchemaVersion},
                   {"time", s.time},
                   {"interval", s.interval},
                   {"read", to_json(s.read)},
                   {"write", to_json(s.write)},
                   {"dirty_cache_utilization", s.dirty_cache_utilization},
                   {"estimated_cache_update", s.estimated_cache_update},
                   {"config",
                    {{"rpc_window_pages", s.config_at_sample.rpc_window_pages},
                     {"rpcs_in_flight", s.config_at_sample.rpcs_in_flight}}},
                   {"has_deltas", s.has_deltas}};
  if (s.has_deltas) {
    j["read_delta"] = to_json(s.read_delta);
    j["write_delta"] = to_json(s.write_delta);
    j["dirty_cache_utilization_delta"] = s.dirty_cache_utilization_delta;
    j["estimated_cache_update_delta"] = s.estimated_cache_update_delta;
  }
  return j;
}

inline MetricSnapshot snapshot_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::invalid_argument("snapshot: schema version mismatch");
  MetricSnapshot s;
  s.time = j.at("time").get<double>();
  s.interval = j.at("interval").get<double>();
  s.read = op_metrics_from_json(j.at("read"));
  s.write = op_metrics_from_json(j.at("write"));
  s.dirty_cache_utilization = j.at("dirty_cache_utilization").get<double>();
  s.estimated_cache_update = j.at("estimated_cache_update").get<double>();
  s.config_at_sample.rpc_window_pages = j.at("config").at("rpc_window_pages").get<std::uint32_t>();
  s.config_at_sample.rpcs_in_flight = j.at("config").at("rpcs_in_flight").get<std::uint32_t>();
  s.has_deltas = j.at("has_deltas").get<bool>();
  if (s.has_deltas) {
    s.read_delta = op_metrics_from_json(j.at("read_delta"));
    s.write_delta = op_metrics_from_json(j.at("write_delta"));
    s.dirty_cache_utilization_delta = j.at("dirty_cache_utilization_delta").get<double>();
    s.estimated_cache_update_delta = j.at("estimated_cache_update_delta").get<double>();
  }
  return s;
}

}  // namespace dial
