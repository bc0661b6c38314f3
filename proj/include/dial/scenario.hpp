#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "dial/config.hpp"
#include "dial/types.hpp"

namespace dial {

// Simulator topology and mechanism constants. Everything here is a file value,
// not a constant baked into code; defaults give the desk-scale cluster shape
// (4 OSTs, 25 Gb/s NIC, 500 MB/s OST disk).
struct Scenario {
  std::uint32_t num_osts = 4;

  double link_bandwidth = 25e9 / 8.0;   // bytes/s per client NIC
  double base_latency = 0.0002;         // seconds, per network leg
  double disk_bandwidth = 500e6;        // bytes/s per OST
  double per_rpc_overhead = 0.002;      // seconds of OST service per RPC
  double client_mem_bandwidth = 2.0e9;  // bytes/s page-cache copy rate per client

  std::uint64_t max_dirty_pages = 8192;      // per OSC commit cap (dirty + in-transfer)
  double dirty_high_watermark = 0.75;        // fraction of max_dirty_pages that forces a flush
  double extent_age_timeout = 1.0;           // seconds before a partial extent is flushed
  double flush_scan_interval = 0.05;         // seconds between background age scans
  std::uint64_t readahead_pages = 1024;      // per-OSC prefetch horizon
  std::uint64_t stripe_unit = 1ull << 20;    // bytes, round-robin striping unit

  Configuration default_config{256, 8};  // Lustre client defaults
  ConfigSpace theta = ConfigSpace::defaults();

  std::uint64_t seed = 42;

  void validate() const {
    if (num_osts == 0) throw std::invalid_argument("scenario: num_osts must be positive");
    if (link_bandwidth <= 0 || disk_bandwidth <= 0 || client_mem_bandwidth <= 0)
      throw std::invalid_argument("scenario: bandwidths must be positive");
    if (base_latency < 0 || per_rpc_overhead < 0)
      throw std::invalid_argument("scenario: latencies must be nonnegative");
    if (max_dirty_pages == 0) throw std::invalid_argument("scenario: max_dirty_pages must be positive");
    if (dirty_high_watermark <= 0 || dirty_high_watermark > 1)
      throw std::invalid_argument("scenario: dirty_high_watermark must be in (0,1]");
    if (extent_age_timeout <= 0 || flush_scan_interval <= 0)
      throw std::invalid_argument("scenario: flush timings must be positive");
    if (stripe_unit % kPageSize != 0)
      throw std::invalid_argument("scenario: stripe_unit must be page aligned");
    if (!theta.contains(default_config))
      throw std::invalid_argument("scenario: default_config must lie in theta");
  }
};

inline nlohmann::json to_json(const Scenario& s) {
  return nlohmann::json{
      {"num_osts", s.num_osts},
      {"link_bandwidth", s.link_bandwidth},
      {"base_latency", s.base_latency},
      {"disk_bandwidth", s.disk_bandwidth},
      {"per_rpc_overhead", s.per_rpc_overhead},
      {"client_mem_bandwidth", s.client_mem_bandwidth},
      {"max_dirty_pages", s.max_dirty_pages},
      {"dirty_high_watermark", s.dirty_high_watermark},
      {"extent_age_timeout", s.extent_age_timeout},
      {"flush_scan_interval", s.flush_scan_interval},
      {"readahead_pages", s.readahead_pages},
      {"stripe_unit", s.stripe_unit},
      {"default_config",
       {{"rpc_window_pages", s.default_config.rpc_window_pages},
        {"rpcs_in_flight", s.default_config.rpcs_in_flight}}},
      {"theta", {{"windows", s.theta.windows()}, {"inflights", s.theta.inflights()}}},
      {"seed", s.seed}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  Scenario s;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
  };
  get("num_osts", s.num_osts);
  get("link_bandwidth", s.link_bandwidth);
  get("base_latency", s.base_latency);
  get("disk_bandwidth", s.disk_bandwidth);
  get("per_rpc_overhead", s.per_rpc_overhead);
  get("client_mem_bandwidth", s.client_mem_bandwidth);
  get("max_dirty_pages", s.max_dirty_pages);
  get("dirty_high_watermark", s.dirty_high_watermark);
  get("extent_age_timeout", s.extent_age_timeout);
  get("flush_scan_interval", s.flush_scan_interval);
  get("readahead_pages", s.readahead_pages);
  get("stripe_unit", s.stripe_unit);
  if (j.contains("default_config")) {
    s.default_config.rpc_window_pages = j["default_config"].at("rpc_window_pages").get<std::uint32_t>();
    s.default_config.rpcs_in_flight = j["default_config"].at("rpcs_in_flight").get<std::uint32_t>();
  }
  if (j.contains("theta"))
    s.theta = ConfigSpace(j["theta"].at("windows").get<std::vector<std::uint32_t>>(),
                          j["theta"].at("inflights").get<std::vector<std::uint32_t>>());
  get("seed", s.seed);
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  nlohmann::json j;
  in >> j;
  return scenario_from_json(j);
}

inline void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scenario file: " + path);
  out << to_json(s).dump(2) << "\n";
}

// Stable identity for provenance lines in result files.
inline std::uint64_t scenario_hash(const Scenario& s) { return fnv1a(to_json(s).dump()); }

}  // namespace dial
