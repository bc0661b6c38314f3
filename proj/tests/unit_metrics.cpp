#include <catch2/catch_amalgamated.hpp>

#include "dial/metrics.hpp"

using namespace dial;
using Catch::Approx;

namespace {
RawCounters counters_after_writes(std::uint64_t rpcs, std::uint64_t pages_per_rpc, double latency_each,
                                  double inflight_mean) {
  RawCounters c;
  c.write.rpc_count = rpcs;
  c.write.page_count = rpcs * pages_per_rpc;
  c.write.bytes_transferred = rpcs * pages_per_rpc * kPageSize;
  c.write.rpc_latency_sum = latency_each * double(rpcs);
  c.write.inflight_sample_sum = inflight_mean * double(rpcs);
  c.write.inflight_sample_count = rpcs;
  c.dirty_pages_max = 8192;
  return c;
}
}  // namespace

TEST_CASE("zero-activity interval derives an all-zero snapshot") {
  RawCounters a;
  a.dirty_pages_max = 8192;
  MetricSnapshot s = derive(a, a, {256, 8}, 0.5);
  CHECK(s.write.rpc_page_utilization == 0.0);
  CHECK(s.write.rpc_channel_utilization == 0.0);
  CHECK(s.write.unit_page_rpc_latency == 0.0);
  CHECK(s.write.data_transfer_volume == 0.0);
  CHECK(s.read.data_transfer_volume == 0.0);
  CHECK(s.dirty_cache_utilization == 0.0);
  CHECK(s.estimated_cache_update == 0.0);
  CHECK_FALSE(s.has_deltas);
}

TEST_CASE("page utilization is mean pages per rpc over the window") {
  RawCounters prev;
  prev.dirty_pages_max = 8192;
  RawCounters curr = counters_after_writes(10, 128, 0.001, 2.0);
  MetricSnapshot s = derive(curr, prev, {256, 8}, 0.5);
  CHECK(s.write.rpc_page_utilization == Approx(0.5));
  CHECK(s.write.data_transfer_volume == Approx(10.0 * 128 * kPageSize));
}

TEST_CASE("unit page rpc latency follows the normalization formula") {
  // mean latency 4 ms, mean 100 pages/RPC, mean inflight 3 -> 4ms/(100*4) = 10 us/page
  RawCounters prev;
  prev.dirty_pages_max = 8192;
  RawCounters curr = counters_after_writes(5, 100, 0.004, 3.0);
  MetricSnapshot s = derive(curr, prev, {256, 8}, 0.5);
  CHECK(s.write.unit_page_rpc_latency == Approx(1e-5));
}

TEST_CASE("channel utilization clamps to [0,1]") {
  RawCounters prev;
  prev.dirty_pages_max = 8192;
  RawCounters curr = counters_after_writes(4, 16, 0.001, 12.0);
  MetricSnapshot s = derive(curr, prev, {256, 8}, 0.5);
  CHECK(s.write.rpc_channel_utilization == 1.0);
}

TEST_CASE("derive rejects reversed counter order and bad interval") {
  RawCounters prev = counters_after_writes(5, 10, 0.001, 1.0);
  RawCounters curr;
  curr.dirty_pages_max = 8192;
  CHECK_THROWS_AS(derive(curr, prev, {256, 8}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(derive(prev, prev, {256, 8}, 0.0), std::invalid_argument);
}

TEST_CASE("deltas are exact differences of successive snapshots") {
  RawCounters zero;
  zero.dirty_pages_max = 8192;
  RawCounters one = counters_after_writes(10, 64, 0.002, 2.0);
  RawCounters two = counters_after_writes(30, 64, 0.002, 4.0);
  two.cache_absorbed_bytes = 4096;
  MetricSnapshot s1 = derive(one, zero, {256, 8}, 0.5);
  MetricSnapshot s2 = derive(two, one, {256, 8}, 0.5);
  attach_deltas(s2, s1);
  REQUIRE(s2.has_deltas);
  CHECK(s2.write_delta.data_transfer_volume ==
        Approx(s2.write.data_transfer_volume - s1.write.data_transfer_volume));
  CHECK(s2.write_delta.rpc_page_utilization ==
        Approx(s2.write.rpc_page_utilization - s1.write.rpc_page_utilization));
  CHECK(s2.estimated_cache_update_delta == Approx(4096.0 - 0.0));
}

TEST_CASE("feature vector layout: candidate slots differ, length fixed") {
  RawCounters zero;
  zero.dirty_pages_max = 8192;
  RawCounters one = counters_after_writes(10, 64, 0.002, 2.0);
  MetricSnapshot s = derive(one, zero, {256, 8}, 0.5);
  MetricSnapshot s2 = derive(one, zero, {256, 8}, 0.5);
  attach_deltas(s2, s);
  auto a = feature_vector(s2, {512, 8}, OpType::Write);
  auto b = feature_vector(s2, {1024, 8}, OpType::Write);
  REQUIRE(a.size() == kFeatureCount);
  REQUIRE(b.size() == kFeatureCount);
  int diffs = 0;
  std::size_t diff_slot = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) {
      diffs++;
      diff_slot = i;
    }
  CHECK(diffs == 1);
  CHECK(diff_slot == 14);  // candidate window slot
  CHECK(a[12] == 256.0);   // current window
  CHECK(a[13] == 8.0);
}

TEST_CASE("feature vector requires deltas") {
  RawCounters zero;
  zero.dirty_pages_max = 8192;
  MetricSnapshot s = derive(zero, zero, {256, 8}, 0.5);
  CHECK_THROWS_AS(feature_vector(s, {256, 8}, OpType::Write), std::invalid_argument);
}

TEST_CASE("snapshot JSONL round-trip is bit exact") {
  RawCounters zero;
  zero.dirty_pages_max = 8192;
  RawCounters one = counters_after_writes(7, 100, 0.0041, 2.5);
  one.dirty_pages_current = 1234;
  one.cache_absorbed_bytes = 987654;
  MetricSnapshot s1 = derive(one, zero, {512, 16}, 0.5);
  MetricSnapshot s2 = derive(one, zero, {512, 16}, 0.5);
  attach_deltas(s2, s1);
  s2.time = 1.5;
  const std::string line = to_json(s2).dump();
  MetricSnapshot back = snapshot_from_json(nlohmann::json::parse(line));
  auto bits = [](double x) {
    std::uint64_t u;
    std::memcpy(&u, &x, sizeof(u));
    return u;
  };
  CHECK(bits(back.write.unit_page_rpc_latency) == bits(s2.write.unit_page_rpc_latency));
  CHECK(bits(back.write.data_transfer_volume) == bits(s2.write.data_transfer_volume));
  CHECK(bits(back.dirty_cache_utilization) == bits(s2.dirty_cache_utilization));
  CHECK(bits(back.write_delta.rpc_page_utilization) == bits(s2.write_delta.rpc_page_utilization));
  CHECK(back.config_at_sample == s2.config_at_sample);
}
