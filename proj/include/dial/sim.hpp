#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "dial/config.hpp"
#include "dial/metrics.hpp"
#include "dial/scenario.hpp"
#include "dial/types.hpp"

namespace dial {

using PageIdx = std::uint64_t;

struct PageRange {
  PageIdx begin = 0;
  PageIdx end = 0;  // exclusive
  PageIdx pages() const { return end - begin; }
  bool empty() const { return begin >= end; }
};

struct IoRequest {
  OpType op = OpType::Write;
  std::uint32_t file_id = 0;
  std::uint64_t offset = 0;  // bytes, need not be page aligned
  std::uint64_t length = 0;  // bytes, > 0
  double submit_time = 0.0;
};

// Sorted disjoint page ranges over one file object; begin -> end.
class RangeSet {
 public:
  struct InsertStats {
    PageIdx added = 0;
    PageIdx overlapped = 0;
  };

  InsertStats insert(PageRange r) {
    InsertStats st;
    if (r.empty()) return st;
    auto it = ranges_.lower_bound(r.begin);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second >= r.begin) it = prev;
    }
    PageIdx nb = r.begin, ne = r.end;
    while (it != ranges_.end() && it->first <= ne) {
      const PageIdx ob = std::max(it->first, r.begin);
      const PageIdx oe = std::min(it->second, r.end);
      if (oe > ob) st.overlapped += oe - ob;
      nb = std::min(nb, it->first);
      ne = std::max(ne, it->second);
      it = ranges_.erase(it);
    }
    ranges_[nb] = ne;
    st.added = r.pages() - st.overlapped;
    total_ += st.added;
    return st;
  }

  // Removes r from the set; returns number of pages actually removed.
  PageIdx subtract(PageRange r) {
    if (r.empty()) return 0;
    PageIdx removed = 0;
    auto it = ranges_.lower_bound(r.begin);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second > r.begin) it = prev;
    }
    while (it != ranges_.end() && it->first < r.end) {
      const PageIdx b = it->first, e = it->second;
      const PageIdx ob = std::max(b, r.begin), oe = std::min(e, r.end);
      if (oe <= ob) {
        ++it;
        continue;
      }
      removed += oe - ob;
      it = ranges_.erase(it);
      if (b < ob) ranges_[b] = ob;
      if (oe < e) ranges_[oe] = e;
      it = ranges_.lower_bound(oe);
    }
    total_ -= removed;
    return removed;
  }

  PageIdx overlap(PageRange r) const {
    PageIdx n = 0;
    auto it = ranges_.lower_bound(r.begin);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second > r.begin) it = prev;
    }
    for (; it != ranges_.end() && it->first < r.end; ++it) {
      const PageIdx ob = std::max(it->first, r.begin), oe = std::min(it->second, r.end);
      if (oe > ob) n += oe - ob;
    }
    return n;
  }

  std::vector<PageRange> intersection(PageRange r) const {
    std::vector<PageRange> out;
    auto it = ranges_.lower_bound(r.begin);
    if (it != ranges_.begin()) {
      auto prev = std::prev(it);
      if (prev->second > r.begin) it = prev;
    }
    for (; it != ranges_.end() && it->first < r.end; ++it) {
      const PageIdx ob = std::max(it->first, r.begin), oe = std::min(it->second, r.end);
      if (oe > ob) out.push_back({ob, oe});
    }
    return out;
  }

  bool empty() const { return ranges_.empty(); }
  PageIdx total_pages() const { return total_; }
  const std::map<PageIdx, PageIdx>& ranges() const { return ranges_; }

 private:
  std::map<PageIdx, PageIdx> ranges_;
  PageIdx total_ = 0;
};

struct Rpc {
  std::uint64_t id = 0;
  OpType op = OpType::Write;
  int client = 0;
  int ost = 0;
  std::uint32_t file = 0;
  PageRange range;  // object pages, one contiguous run
  std::uint32_t page_count = 0;
  std::uint32_t window_at_creation = 0;
  double created_time = 0.0;
  double dispatched_time = -1.0;
  double completed_time = -1.0;
  std::uint64_t bytes() const { return std::uint64_t(page_count) * kPageSize; }
};

enum class TraceKind {
  WriteAccept,
  WriteAck,
  ReadSubmit,
  ReadDone,
  RpcBuilt,
  RpcDispatch,
  OstArrive,
  OstServe,
  RpcDone,
  ConfigChange,
  Absorb
};

inline const char* to_string(TraceKind k) {
  switch (k) {
    case TraceKind::WriteAccept: return "write_accept";
    case TraceKind::WriteAck: return "write_ack";
    case TraceKind::ReadSubmit: return "read_submit";
    case TraceKind::ReadDone: return "read_done";
    case TraceKind::RpcBuilt: return "rpc_built";
    case TraceKind::RpcDispatch: return "rpc_dispatch";
    case TraceKind::OstArrive: return "ost_arrive";
    case TraceKind::OstServe: return "ost_serve";
    case TraceKind::RpcDone: return "rpc_done";
    case TraceKind::ConfigChange: return "config_change";
    case TraceKind::Absorb: return "absorb";
  }
  return "?";
}

struct TraceEvent {
  double time = 0.0;
  TraceKind kind = TraceKind::RpcBuilt;
  int client = -1;
  int ost = -1;
  OpType op = OpType::Write;
  std::uint64_t a = 0, b = 0, c = 0;
};

struct OstState {
  double busy_until = 0.0;
  std::uint64_t rpcs_served = 0;
  std::uint64_t bytes_served = 0;
};

// One write-aggregation extent: window-aligned object-page region with the
// dirty runs accumulated so far.
struct Extent {
  RangeSet runs;
  double created_time = 0.0;
};

// A packed page run awaiting dispatch. The RPC itself is formed at send time
// under the window then in force, so queued runs coalesce after a window grow
// and split after a shrink.
struct ReadyRun {
  OpType op = OpType::Write;
  std::uint32_t file = 0;
  PageRange range;
  double created_time = 0.0;
};

struct OscState {
  Configuration config;
  std::map<std::pair<std::uint32_t, PageIdx>, Extent> open_extents;  // (file, extent idx)
  std::deque<ReadyRun> ready;
  std::map<std::uint32_t, RangeSet> ready_pages;  // write pages packed but not yet on the wire
  std::uint32_t inflight_read = 0;
  std::uint32_t inflight_write = 0;
  std::uint64_t committed_pages = 0;  // dirty + ready + in-transfer write pages
  RawCounters counters;
  std::deque<std::tuple<double, OpType, std::uint64_t>> completions;  // for measure_throughput

  // read side
  std::map<std::uint32_t, RangeSet> present;    // arrived readahead data per file
  std::map<std::uint32_t, RangeSet> requested;  // demanded, not yet arrived
  std::deque<std::pair<std::uint32_t, PageRange>> present_fifo;
  std::uint64_t present_pages = 0;
  struct SeqDetect {
    std::int64_t prev_extent = -2;
    bool sequential = false;
    PageIdx prefetch_frontier = 0;
  };
  std::map<std::uint32_t, SeqDetect> read_streams;  // per file

  std::uint32_t inflight_total() const { return inflight_read + inflight_write; }
};

struct FileInfo {
  std::uint64_t size = 0;
  std::uint32_t stripe_count = 0;  // 0 = stripe over all OSTs
  std::uint32_t first_ost = 0;
};

namespace detail {
struct WriteJob {
  std::uint64_t req_id = 0;
  int client = 0;
  std::uint32_t file = 0;
  std::uint64_t cursor = 0;  // next byte to accept
  std::uint64_t end = 0;
  std::uint64_t length = 0;
  std::function<void(double)> on_complete;
};

struct ReadJob {
  std::uint64_t req_id = 0;
  int client = 0;
  std::uint32_t file = 0;
  std::uint64_t length = 0;
  std::map<int, RangeSet> missing;  // per ost
  PageIdx missing_pages = 0;
  bool submitted = false;
  std::function<void(double)> on_complete;
};
}  // namespace detail

struct ClientState {
  int id = 0;
  int active_transfers = 0;  // concurrent data movements on this client's link
  std::vector<OscState> oscs;

  std::deque<std::shared_ptr<detail::WriteJob>> write_queue;
  std::shared_ptr<detail::WriteJob> active_write;
  int write_blocked_on = -1;

  std::vector<std::shared_ptr<detail::ReadJob>> pending_reads;

  std::uint64_t app_write_bytes = 0;  // acknowledged write bytes
  std::uint64_t app_read_bytes = 0;   // completed read bytes
};

// Deterministic discrete-event simulator of the client->network->OST I/O path.
// Single threaded; one instance per execution context. Identical seed and
// inputs give a bit-identical event trace.
class SimState {
 public:
  SimState(const Scenario& scenario, int num_clients)
      : scenario_(scenario), rng_(scenario.seed) {
    scenario_.validate();
    if (num_clients < 1) throw std::invalid_argument("sim: need at least one client");
    osts_.resize(scenario_.num_osts);
    clients_.resize(num_clients);
    for (int c = 0; c < num_clients; ++c) {
      clients_[c].id = c;
      clients_[c].oscs.resize(scenario_.num_osts);
      for (auto& osc : clients_[c].oscs) {
        osc.config = scenario_.default_config;
        osc.counters.dirty_pages_max = scenario_.max_dirty_pages;
      }
    }
    schedule(scenario_.flush_scan_interval, [this] { flush_tick(); });
  }

  SimState(const SimState&) = delete;
  SimState& operator=(const SimState&) = delete;

  double clock() const { return clock_; }
  const Scenario& scenario() const { return scenario_; }
  int num_clients() const { return int(clients_.size()); }
  ClientState& client(int c) { return clients_.at(c); }
  const ClientState& client(int c) const { return clients_.at(c); }
  OscState& osc(int c, int o) { return clients_.at(c).oscs.at(o); }
  const OscState& osc(int c, int o) const { return clients_.at(c).oscs.at(o); }
  OstState& ost(int o) { return osts_.at(o); }
  std::mt19937_64& rng() { return rng_; }

  void set_trace_enabled(bool on) { trace_enabled_ = on; }
  const std::vector<TraceEvent>& trace() const { return trace_; }
  void clear_trace() { trace_.clear(); }

  void register_file(std::uint32_t file_id, std::uint64_t size_bytes, std::uint32_t stripe_count = 0,
                     std::uint32_t first_ost = 0) {
    if (size_bytes == 0) throw std::invalid_argument("register_file: zero size");
    if (stripe_count > scenario_.num_osts)
      throw std::invalid_argument("register_file: stripe_count exceeds OST count");
    files_[file_id] = FileInfo{size_bytes, stripe_count, first_ost % scenario_.num_osts};
  }

  // Generic deterministic callback scheduling; ties resolve in scheduling order.
  void schedule(double t, std::function<void()> fn) {
    if (t < clock_) t = clock_;
    queue_.push(Ev{t, next_seq_++, std::move(fn)});
  }

  // Routes a request down the client stack. Write: pages become dirty in the
  // target OSC caches, acknowledged after the page-cache copy (and any
  // dirty-limit stalls). Read: pages not satisfied by the readahead buffer
  // become read-extent demand. Returns a request id.
  std::uint64_t submit_io(int client_id, const IoRequest& req,
                          std::function<void(double)> on_complete = nullptr) {
    if (client_id < 0 || client_id >= int(clients_.size()))
      throw std::invalid_argument("submit_io: unknown client");
    auto fit = files_.find(req.file_id);
    if (fit == files_.end()) throw std::invalid_argument("submit_io: unknown file");
    if (req.length == 0) throw std::invalid_argument("submit_io: zero-length request");
    if (req.offset + req.length > fit->second.size)
      throw std::invalid_argument("submit_io: request beyond end of file");

    const std::uint64_t id = next_req_id_++;
    if (req.op == OpType::Write) {
      auto job = std::make_shared<detail::WriteJob>();
      job->req_id = id;
      job->client = client_id;
      job->file = req.file_id;
      job->cursor = req.offset;
      job->end = req.offset + req.length;
      job->length = req.length;
      job->on_complete = std::move(on_complete);
      clients_[client_id].write_queue.push_back(job);
      pump_writes(client_id);
    } else {
      start_read(client_id, req, id, std::move(on_complete));
    }
    return id;
  }

  // Processes the event queue in time order up to `until`; returns the trace
  // events recorded during this call (when tracing is enabled).
  std::vector<TraceEvent> advance(double until) {
    if (until < clock_) throw std::invalid_argument("advance: until < clock");
    const std::size_t mark = trace_.size();
    while (!queue_.empty() && queue_.top().t <= until) {
      Ev ev = queue_.top();
      queue_.pop();
      clock_ = ev.t;
      ev.fn();
    }
    clock_ = until;
    return {trace_.begin() + mark, trace_.end()};
  }

  // Flushes everything and runs until all RPC pipelines are empty. Used by
  // conservation checks; returns the time the system went idle.
  double drain(double max_extra = 600.0) {
    const double deadline = clock_ + max_extra;
    while (clock_ < deadline) {
      for (auto& cl : clients_)
        for (int o = 0; o < int(cl.oscs.size()); ++o) {
          pack_all(cl.id, o);
          dispatch(cl.id, o);
        }
      if (idle()) return clock_;
      advance(std::min(deadline, clock_ + scenario_.flush_scan_interval));
    }
    return clock_;
  }

  bool idle() const {
    for (const auto& cl : clients_) {
      if (cl.active_write || !cl.write_queue.empty() || !cl.pending_reads.empty()) return false;
      for (const auto& osc : cl.oscs)
        if (!osc.ready.empty() || osc.inflight_total() > 0 || !osc.open_extents.empty() ||
            osc.committed_pages > 0)
          return false;
    }
    return true;
  }

  // Applies flush triggers for one OSC now: full extents, aged extents, and a
  // dirty-pressure sweep. Packed runs join the ready queue (the RPC itself is
  // finalized at dispatch); copies are returned for inspection.
  std::vector<ReadyRun> build_rpcs(int client_id, int ost_id, double now) {
    OscState& osc = clients_.at(client_id).oscs.at(ost_id);
    std::vector<ReadyRun> built;
    std::vector<std::pair<std::uint32_t, PageIdx>> to_flush;
    for (const auto& [key, ext] : osc.open_extents) {
      const bool full = ext.runs.total_pages() >= osc.config.rpc_window_pages;
      const bool aged = now - ext.created_time >= scenario_.extent_age_timeout;
      if (full || aged) to_flush.push_back(key);
    }
    for (const auto& key : to_flush) pack_extent(client_id, ost_id, key, &built);

    // dirty pressure: flush oldest partials, but only enough to keep the
    // channels supplied; the extent still accumulating is left open
    const bool pressure = double(osc.committed_pages) >=
                          scenario_.dirty_high_watermark * double(scenario_.max_dirty_pages);
    if (pressure && osc.ready.size() + osc.inflight_total() < osc.config.rpcs_in_flight) {
      std::vector<std::pair<double, std::pair<std::uint32_t, PageIdx>>> by_age;
      for (const auto& [key, ext] : osc.open_extents) by_age.push_back({ext.created_time, key});
      std::sort(by_age.begin(), by_age.end());
      for (const auto& [t, key] : by_age) {
        if (osc.ready.size() + osc.inflight_total() >= osc.config.rpcs_in_flight) break;
        pack_extent(client_id, ost_id, key, &built);
      }
    }
    return built;
  }

  // Moves ready runs into flight until the channel cap binds or supply runs
  // out. The RPC is formed here: one window-aligned contiguous piece, merging
  // adjacent queued runs of the same file and op up to the extent boundary.
  std::vector<Rpc> dispatch(int client_id, int ost_id) {
    OscState& osc = clients_.at(client_id).oscs.at(ost_id);
    std::vector<Rpc> out;
    while (!osc.ready.empty() && osc.inflight_total() < osc.config.rpcs_in_flight) {
      ReadyRun head = osc.ready.front();
      const PageIdx w = osc.config.rpc_window_pages;
      const PageIdx aligned_end = (head.range.begin / w + 1) * w;
      PageIdx end = std::min(head.range.end, aligned_end);
      if (head.range.end > end) {
        osc.ready.front().range.begin = end;  // remainder stays at the head
      } else {
        osc.ready.pop_front();
        while (end < aligned_end && !osc.ready.empty()) {
          ReadyRun& next = osc.ready.front();
          if (next.op != head.op || next.file != head.file || next.range.begin != end) break;
          const PageIdx take = std::min(next.range.end, aligned_end);
          end = take;
          if (next.range.end > take) {
            next.range.begin = take;
            break;
          }
          osc.ready.pop_front();
        }
      }

      Rpc rpc;
      rpc.id = next_rpc_id_++;
      rpc.op = head.op;
      rpc.client = client_id;
      rpc.ost = ost_id;
      rpc.file = head.file;
      rpc.range = {head.range.begin, end};
      rpc.page_count = std::uint32_t(end - head.range.begin);
      rpc.window_at_creation = std::uint32_t(w);
      rpc.created_time = head.created_time;
      rpc.dispatched_time = clock_;
      if (rpc.op == OpType::Write) {
        osc.inflight_write++;
        osc.ready_pages[rpc.file].subtract(rpc.range);
      } else {
        osc.inflight_read++;
      }
      sample_inflight(osc, rpc.op);
      record(TraceKind::RpcBuilt, client_id, ost_id, rpc.op, rpc.id, rpc.page_count,
             rpc.window_at_creation);
      record(TraceKind::RpcDispatch, client_id, ost_id, rpc.op, rpc.id, rpc.page_count,
             osc.inflight_total());
      launch(rpc);
      out.push_back(rpc);
    }
    return out;
  }

  // Applies a new configuration; in-flight RPCs are unaffected. Shrinking the
  // window flushes open extents immediately, partitioned to the new width.
  Configuration set_config(int client_id, int ost_id, const Configuration& theta) {
    if (!scenario_.theta.contains(theta))
      throw std::invalid_argument("set_config: configuration outside theta space");
    OscState& osc = clients_.at(client_id).oscs.at(ost_id);
    const Configuration prev = osc.config;
    if (theta == prev) return prev;

    if (theta.rpc_window_pages != prev.rpc_window_pages) {
      auto old_extents = std::move(osc.open_extents);
      osc.open_extents.clear();
      osc.config.rpc_window_pages = theta.rpc_window_pages;
      if (theta.rpc_window_pages < prev.rpc_window_pages) {
        // flush everything accumulated under the wider window; dispatch will
        // partition the runs to the new width
        for (auto& [key, ext] : old_extents)
          for (const auto& [b, e] : ext.runs.ranges()) {
            osc.ready.push_back({OpType::Write, key.first, {b, e}, ext.created_time});
            osc.ready_pages[key.first].insert({b, e});
          }
      } else {
        // rebucket open pages under the wider alignment, keeping ages
        for (auto& [key, ext] : old_extents)
          for (const auto& [b, e] : ext.runs.ranges())
            rebucket_run(osc, key.first, {b, e}, ext.created_time);
      }
    }
    osc.config = theta;
    record(TraceKind::ConfigChange, client_id, ost_id, OpType::Write, theta.rpc_window_pages,
           theta.rpcs_in_flight, 0);
    build_rpcs(client_id, ost_id, clock_);
    dispatch(client_id, ost_id);
    return prev;
  }

  // Point-in-time copy of the raw per-OSC counters; O(1), no mutation.
  RawCounters probe(int client_id, int ost_id) const {
    const OscState& osc = clients_.at(client_id).oscs.at(ost_id);
    RawCounters c = osc.counters;
    c.dirty_pages_current = osc.committed_pages;
    return c;
  }

  // Completed-RPC bytes per op over the trailing window, as bytes/second.
  std::pair<double, double> measure_throughput(int client_id, int ost_id, double window) const {
    if (window <= 0) throw std::invalid_argument("measure_throughput: window must be positive");
    const OscState& osc = clients_.at(client_id).oscs.at(ost_id);
    double read = 0, write = 0;
    for (const auto& [t, op, bytes] : osc.completions) {
      if (t < clock_ - window) continue;
      (op == OpType::Read ? read : write) += double(bytes);
    }
    return {read / window, write / window};
  }

  std::uint64_t trace_digest() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& e : trace_) {
      h = fnv1a(&e.time, sizeof(e.time), h);
      const int k = int(e.kind);
      h = fnv1a(&k, sizeof(k), h);
      h = fnv1a(&e.client, sizeof(e.client), h);
      h = fnv1a(&e.ost, sizeof(e.ost), h);
      const int op = int(e.op);
      h = fnv1a(&op, sizeof(op), h);
      h = fnv1a(&e.a, sizeof(e.a), h);
      h = fnv1a(&e.b, sizeof(e.b), h);
      h = fnv1a(&e.c, sizeof(e.c), h);
    }
    return h;
  }

 private:
  struct Ev {
    double t;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct EvCmp {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  PageIdx pages_per_stripe() const { return scenario_.stripe_unit / kPageSize; }

  // Maps a byte span to per-OSC object-page chunks (round-robin striping over
  // the file's OST set).
  template <typename Fn>
  void for_each_chunk(const FileInfo& fi, std::uint64_t offset, std::uint64_t length, Fn&& fn) const {
    const PageIdx pps = pages_per_stripe();
    const std::uint32_t n = fi.stripe_count ? fi.stripe_count : scenario_.num_osts;
    const PageIdx p0 = offset / kPageSize;
    const PageIdx p1 = (offset + length + kPageSize - 1) / kPageSize;
    PageIdx p = p0;
    while (p < p1) {
      const PageIdx stripe = p / pps;
      const PageIdx stripe_end = (stripe + 1) * pps;
      const PageIdx chunk_end = std::min(p1, stripe_end);
      const int ost = int((fi.first_ost + stripe % n) % scenario_.num_osts);
      const PageIdx obj_base = (stripe / n) * pps;
      fn(ost, PageRange{obj_base + (p - stripe * pps), obj_base + (chunk_end - stripe * pps)});
      p = chunk_end;
    }
  }

  void record(TraceKind kind, int client, int ost, OpType op, std::uint64_t a, std::uint64_t b,
              std::uint64_t c) {
    if (!trace_enabled_) return;
    trace_.push_back({clock_, kind, client, ost, op, a, b, c});
  }

  void sample_inflight(OscState& osc, OpType op) {
    auto& per = osc.counters.op(op);
    per.inflight_sample_sum += op == OpType::Read ? osc.inflight_read : osc.inflight_write;
    per.inflight_sample_count++;
  }

  // --- write path ---------------------------------------------------------

  void pump_writes(int client_id) {
    ClientState& cl = clients_[client_id];
    if (cl.active_write || cl.write_queue.empty()) return;
    cl.active_write = cl.write_queue.front();
    cl.write_queue.pop_front();
    cl.write_blocked_on = -1;
    continue_write(client_id);
  }

  void continue_write(int client_id) {
    ClientState& cl = clients_[client_id];
    auto job = cl.active_write;
    if (!job || job->cursor >= job->end) return;  // already fully accepted, ack pending
    cl.write_blocked_on = -1;
    std::array<bool, 64> touched{};
    auto run_triggers = [&] {
      for (std::uint32_t o = 0; o < scenario_.num_osts; ++o)
        if (touched[o]) {
          build_rpcs(client_id, int(o), clock_);
          dispatch(client_id, int(o));
          touched[o] = false;
        }
    };
    while (job->cursor < job->end) {
      const PageIdx pps = pages_per_stripe();
      const std::uint64_t stripe = (job->cursor / kPageSize) / pps;
      const std::uint64_t stripe_end_byte = (stripe + 1) * pps * kPageSize;
      const std::uint64_t chunk_end = std::min(job->end, stripe_end_byte);
      const std::uint64_t chunk_bytes = chunk_end - job->cursor;
      int target_ost = -1;
      PageRange obj{};
      for_each_chunk(files_.at(job->file), job->cursor, chunk_bytes, [&](int ost, PageRange r) {
        target_ost = ost;
        obj = r;
      });
      OscState& osc = cl.oscs[target_ost];
      const PageIdx absorbable = extent_overlap(osc, job->file, obj);
      const PageIdx new_pages = obj.pages() - absorbable;
      if (osc.committed_pages + new_pages > scenario_.max_dirty_pages) {
        run_triggers();  // let the pipeline drain what this request accumulated
        build_rpcs(client_id, target_ost, clock_);
        dispatch(client_id, target_ost);
        cl.write_blocked_on = target_ost;  // resumed by a completion on this OSC
        return;
      }
      accept_write_chunk(client_id, target_ost, job->file, obj, chunk_bytes);
      touched[target_ost] = true;
      job->cursor = chunk_end;
    }
    // flush triggers run once per request, so striped requests aggregate into
    // window-sized extents before pressure can fragment them
    run_triggers();
    // page-cache copy pacing: acknowledgment after the memcpy completes
    const double ack_at = clock_ + double(job->length) / scenario_.client_mem_bandwidth;
    schedule(ack_at, [this, client_id, job] {
      ClientState& cl2 = clients_[client_id];
      cl2.app_write_bytes += job->length;
      record(TraceKind::WriteAck, client_id, -1, OpType::Write, job->req_id, job->length, 0);
      if (job->on_complete) job->on_complete(clock_);
      cl2.active_write = nullptr;
      pump_writes(client_id);
    });
  }

  // Pages absorbable without a new RPC obligation: already dirty in an open
  // extent, or sitting in a built RPC that has not yet hit the wire.
  PageIdx extent_overlap(const OscState& osc, std::uint32_t file, PageRange obj) const {
    PageIdx n = 0;
    const PageIdx w = osc.config.rpc_window_pages;
    RangeSet rest;
    rest.insert(obj);
    for (PageIdx e = obj.begin / w; e <= (obj.end - 1) / w; ++e) {
      auto it = osc.open_extents.find({file, e});
      if (it == osc.open_extents.end()) continue;
      for (const auto& hit : it->second.runs.intersection(obj)) n += rest.subtract(hit);
    }
    auto rit = osc.ready_pages.find(file);
    if (rit != osc.ready_pages.end())
      for (const auto& [b, e] : rest.ranges()) n += rit->second.overlap({b, e});
    return n;
  }

  void accept_write_chunk(int client_id, int ost_id, std::uint32_t file, PageRange obj,
                          std::uint64_t bytes) {
    OscState& osc = clients_[client_id].oscs[ost_id];
    const PageIdx w = osc.config.rpc_window_pages;
    PageIdx absorbed_total = 0;
    for (PageIdx e = obj.begin / w; e <= (obj.end - 1) / w; ++e) {
      const PageRange within{std::max(obj.begin, e * w), std::min(obj.end, (e + 1) * w)};
      if (within.empty()) continue;
      // rewrites of pages in ready RPCs update the unsent buffer in place
      RangeSet fresh;
      fresh.insert(within);
      auto rit = osc.ready_pages.find(file);
      if (rit != osc.ready_pages.end())
        for (const auto& hit : rit->second.intersection(within)) absorbed_total += fresh.subtract(hit);
      auto [it, inserted] = osc.open_extents.try_emplace({file, e});
      if (inserted) it->second.created_time = clock_;
      for (const auto& [fb, fe] : fresh.ranges()) {
        auto st = it->second.runs.insert({fb, fe});
        absorbed_total += st.overlapped;
        osc.committed_pages += st.added;
      }
      if (it->second.runs.empty()) osc.open_extents.erase(it);
    }
    osc.counters.llite_bytes_written_total += bytes;
    osc.counters.cache_absorbed_bytes += absorbed_total * kPageSize;
    osc.counters.dirty_pages_current = osc.committed_pages;
    record(TraceKind::WriteAccept, client_id, ost_id, OpType::Write, obj.pages(), absorbed_total,
           osc.committed_pages);
    if (absorbed_total)
      record(TraceKind::Absorb, client_id, ost_id, OpType::Write, absorbed_total, 0, 0);
  }

  void pack_extent(int client_id, int ost_id, std::pair<std::uint32_t, PageIdx> key,
                   std::vector<ReadyRun>* built) {
    OscState& osc = clients_[client_id].oscs[ost_id];
    auto it = osc.open_extents.find(key);
    if (it == osc.open_extents.end()) return;
    for (const auto& [b, e] : it->second.runs.ranges()) {
      ReadyRun run{OpType::Write, key.first, {b, e}, it->second.created_time};
      osc.ready.push_back(run);
      osc.ready_pages[key.first].insert({b, e});
      if (built) built->push_back(run);
    }
    osc.open_extents.erase(it);
  }

  void pack_all(int client_id, int ost_id) {
    OscState& osc = clients_[client_id].oscs[ost_id];
    while (!osc.open_extents.empty())
      pack_extent(client_id, ost_id, osc.open_extents.begin()->first, nullptr);
  }

  void rebucket_run(OscState& osc, std::uint32_t file, PageRange run, double created) {
    const PageIdx w = osc.config.rpc_window_pages;
    for (PageIdx e = run.begin / w; e <= (run.end - 1) / w; ++e) {
      const PageRange within{std::max(run.begin, e * w), std::min(run.end, (e + 1) * w)};
      if (within.empty()) continue;
      auto [it, inserted] = osc.open_extents.try_emplace({file, e});
      if (inserted)
        it->second.created_time = created;
      else
        it->second.created_time = std::min(it->second.created_time, created);
      it->second.runs.insert(within);
    }
  }

  // --- read path ----------------------------------------------------------

  void start_read(int client_id, const IoRequest& req, std::uint64_t id,
                  std::function<void(double)> on_complete) {
    ClientState& cl = clients_[client_id];
    auto job = std::make_shared<detail::ReadJob>();
    job->req_id = id;
    job->client = client_id;
    job->file = req.file_id;
    job->length = req.length;
    job->on_complete = std::move(on_complete);
    record(TraceKind::ReadSubmit, client_id, -1, OpType::Read, id, req.length, 0);

    // gather the needed object ranges per OSC first, so striped requests form
    // window-sized demand runs instead of per-stripe fragments
    std::map<int, RangeSet> wanted;
    std::map<int, PageIdx> read_end;
    for_each_chunk(files_.at(req.file_id), req.offset, req.length, [&](int ost_id, PageRange obj) {
      wanted[ost_id].insert(obj);
      read_end[ost_id] = std::max(read_end[ost_id], obj.end);
    });
    for (auto& [ost_id, want] : wanted) {
      OscState& osc = cl.oscs[ost_id];
      for (const auto& [wb, we] : want.ranges())
        update_seq_detect(osc, req.file_id, {wb, we});
      RangeSet need;
      for (const auto& [wb, we] : want.ranges()) need.insert({wb, we});
      // satisfied by readahead buffer; served pages are consumed
      for (const auto& [wb, we] : want.ranges())
        for (const auto& hit : osc.present[req.file_id].intersection({wb, we})) {
          need.subtract(hit);
          osc.present_pages -= osc.present[req.file_id].subtract(hit);
        }
      for (const auto& [b, e] : need.ranges()) {
        PageRange r{b, e};
        // overlap with outstanding demand: piggyback on it
        RangeSet fresh;
        fresh.insert(r);
        for (const auto& dup : osc.requested[req.file_id].intersection(r)) fresh.subtract(dup);
        job->missing.try_emplace(ost_id);
        job->missing[ost_id].insert(r);
        job->missing_pages += r.pages();
        for (const auto& [fb, fe] : fresh.ranges()) demand_read(client_id, ost_id, req.file_id, {fb, fe});
      }
      if (osc.read_streams[req.file_id].sequential)
        issue_prefetch(client_id, ost_id, req.file_id, read_end[ost_id]);
    }

    job->submitted = true;
    if (job->missing_pages == 0) {
      schedule(clock_, [this, client_id, job] { finish_read(client_id, job); });
    } else {
      cl.pending_reads.push_back(job);
    }
  }

  void update_seq_detect(OscState& osc, std::uint32_t file, PageRange obj) {
    auto& sd = osc.read_streams[file];
    const std::int64_t ext = std::int64_t(obj.begin / osc.config.rpc_window_pages);
    sd.sequential = (ext == sd.prev_extent + 1) || (ext == sd.prev_extent && sd.sequential);
    sd.prev_extent = std::int64_t(( obj.end - 1) / osc.config.rpc_window_pages);
  }

  // Prefetches whole next extents while the consumer is within the horizon,
  // so readahead RPCs carry the full window.
  void issue_prefetch(int client_id, int ost_id, std::uint32_t file, PageIdx read_end) {
    OscState& osc = clients_[client_id].oscs[ost_id];
    auto& sd = osc.read_streams[file];
    const std::uint64_t object_pages = object_page_count(file, ost_id);
    const PageIdx target = std::min<PageIdx>(read_end + scenario_.readahead_pages, object_pages);
    if (sd.prefetch_frontier < read_end) sd.prefetch_frontier = read_end;
    while (sd.prefetch_frontier < target) {
      const PageIdx w = osc.config.rpc_window_pages;
      const PageIdx ext_end = (sd.prefetch_frontier / w + 1) * w;
      PageRange r{sd.prefetch_frontier, std::min<PageIdx>(ext_end, object_pages)};
      if (r.empty()) break;
      RangeSet fresh;
      fresh.insert(r);
      for (const auto& dup : osc.requested[file].intersection(r)) fresh.subtract(dup);
      for (const auto& hit : osc.present[file].intersection(r)) fresh.subtract(hit);
      for (const auto& [fb, fe] : fresh.ranges()) demand_read(client_id, ost_id, file, {fb, fe});
      sd.prefetch_frontier = r.end;
    }
  }

  std::uint64_t object_page_count(std::uint32_t file, int ost_id) const {
    const auto& fi = files_.at(file);
    const PageIdx pps = pages_per_stripe();
    const std::uint32_t n = fi.stripe_count ? fi.stripe_count : scenario_.num_osts;
    const std::uint32_t slot =
        (std::uint32_t(ost_id) + scenario_.num_osts - fi.first_ost) % scenario_.num_osts;
    if (slot >= n) return 0;
    const std::uint64_t total_stripes = (fi.size + scenario_.stripe_unit - 1) / scenario_.stripe_unit;
    const std::uint64_t full_rounds = total_stripes / n;
    const std::uint64_t extra = total_stripes % n > std::uint64_t(slot) ? 1 : 0;
    return (full_rounds + extra) * pps;
  }

  // Enqueues a read demand; dispatch forms window-aligned read RPCs from it.
  void demand_read(int client_id, int ost_id, std::uint32_t file, PageRange r) {
    OscState& osc = clients_[client_id].oscs[ost_id];
    osc.requested[file].insert(r);
    osc.ready.push_back({OpType::Read, file, r, clock_});
    dispatch(client_id, ost_id);
  }

  void finish_read(int client_id, const std::shared_ptr<detail::ReadJob>& job) {
    ClientState& cl = clients_[client_id];
    cl.app_read_bytes += job->length;
    record(TraceKind::ReadDone, client_id, -1, OpType::Read, job->req_id, job->length, 0);
    if (job->on_complete) job->on_complete(clock_);
    for (auto it = cl.pending_reads.begin(); it != cl.pending_reads.end(); ++it)
      if ((*it)->req_id == job->req_id) {
        cl.pending_reads.erase(it);
        break;
      }
  }

  void read_data_arrived(int client_id, int ost_id, std::uint32_t file, PageRange r) {
    ClientState& cl = clients_[client_id];
    OscState& osc = cl.oscs[ost_id];
    osc.requested[file].subtract(r);
    RangeSet surplus;
    surplus.insert(r);
    std::vector<std::shared_ptr<detail::ReadJob>> done;
    for (auto& job : cl.pending_reads) {
      if (job->file != file) continue;
      auto mit = job->missing.find(ost_id);
      if (mit == job->missing.end()) continue;
      for (const auto& hit : mit->second.intersection(r)) {
        const PageIdx n = mit->second.subtract(hit);
        job->missing_pages -= n;
        surplus.subtract(hit);
      }
      if (job->missing_pages == 0 && job->submitted) done.push_back(job);
    }
    // unconsumed arrivals stay in the readahead buffer, FIFO-capped
    for (const auto& [b, e] : surplus.ranges()) {
      auto st = osc.present[file].insert({b, e});
      osc.present_pages += st.added;
      osc.present_fifo.push_back({file, {b, e}});
    }
    // buffer bound: the horizon plus one in-flight extent of headroom
    const std::uint64_t cap = scenario_.readahead_pages + osc.config.rpc_window_pages;
    while (osc.present_pages > cap && !osc.present_fifo.empty()) {
      auto [f, range] = osc.present_fifo.front();
      osc.present_fifo.pop_front();
      osc.present_pages -= osc.present[f].subtract(range);
    }
    for (auto& job : done) finish_read(client_id, job);
  }

  // --- RPC transport ------------------------------------------------------

  void launch(Rpc rpc) {
    ClientState& cl = clients_[rpc.client];
    double arrive;
    if (rpc.op == OpType::Write) {
      const int transfers = cl.active_transfers + 1;
      cl.active_transfers = transfers;
      arrive = clock_ + double(rpc.bytes()) * transfers / scenario_.link_bandwidth +
               scenario_.base_latency;
      schedule(arrive, [this, rpc, client_id = rpc.client] {
        clients_[client_id].active_transfers--;
        ost_arrive(rpc);
      });
    } else {
      arrive = clock_ + scenario_.base_latency;  // request leg carries no payload
      schedule(arrive, [this, rpc] { ost_arrive(rpc); });
    }
  }

  void ost_arrive(Rpc rpc) {
    OstState& ost = osts_[rpc.ost];
    record(TraceKind::OstArrive, rpc.client, rpc.ost, rpc.op, rpc.id, rpc.page_count, 0);
    const double start = std::max(ost.busy_until, clock_);
    const double done = start + scenario_.per_rpc_overhead +
                        double(rpc.bytes()) / scenario_.disk_bandwidth;
    ost.busy_until = done;
    ost.rpcs_served++;
    ost.bytes_served += rpc.bytes();
    schedule(done, [this, rpc] { ost_done(rpc); });
  }

  void ost_done(Rpc rpc) {
    record(TraceKind::OstServe, rpc.client, rpc.ost, rpc.op, rpc.id, rpc.page_count, 0);
    if (rpc.op == OpType::Write) {
      schedule(clock_ + scenario_.base_latency, [this, rpc] { rpc_done(rpc); });
    } else {
      ClientState& cl = clients_[rpc.client];
      const int transfers = cl.active_transfers + 1;
      cl.active_transfers = transfers;
      const double arrive = clock_ + double(rpc.bytes()) * transfers / scenario_.link_bandwidth +
                            scenario_.base_latency;
      schedule(arrive, [this, rpc, client_id = rpc.client] {
        clients_[client_id].active_transfers--;
        rpc_done(rpc);
      });
    }
  }

  void rpc_done(Rpc rpc) {
    rpc.completed_time = clock_;
    OscState& osc = clients_[rpc.client].oscs[rpc.ost];
    if (rpc.op == OpType::Write) {
      osc.inflight_write--;
      osc.committed_pages -= rpc.page_count;
      osc.counters.dirty_pages_current = osc.committed_pages;
    } else {
      osc.inflight_read--;
    }
    auto& per = osc.counters.op(rpc.op);
    per.rpc_count++;
    per.page_count += rpc.page_count;
    per.bytes_transferred += rpc.bytes();
    per.rpc_latency_sum += rpc.completed_time - rpc.dispatched_time;
    sample_inflight(osc, rpc.op);
    osc.completions.push_back({clock_, rpc.op, rpc.bytes()});
    while (!osc.completions.empty() && std::get<0>(osc.completions.front()) < clock_ - 5.0)
      osc.completions.pop_front();
    record(TraceKind::RpcDone, rpc.client, rpc.ost, rpc.op, rpc.id, rpc.page_count,
           osc.inflight_total());

    if (rpc.op == OpType::Read) read_data_arrived(rpc.client, rpc.ost, rpc.file, rpc.range);

    dispatch(rpc.client, rpc.ost);
    ClientState& cl = clients_[rpc.client];
    if (rpc.op == OpType::Write && cl.active_write && cl.write_blocked_on == rpc.ost)
      schedule(clock_, [this, client_id = rpc.client] { continue_write(client_id); });
  }

  void flush_tick() {
    for (auto& cl : clients_)
      for (int o = 0; o < int(cl.oscs.size()); ++o) {
        build_rpcs(cl.id, o, clock_);
        dispatch(cl.id, o);
      }
    schedule(clock_ + scenario_.flush_scan_interval, [this] { flush_tick(); });
  }

  Scenario scenario_;
  std::vector<ClientState> clients_;
  std::vector<OstState> osts_;
  std::map<std::uint32_t, FileInfo> files_;
  std::priority_queue<Ev, std::vector<Ev>, EvCmp> queue_;
  double clock_ = 0.0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t next_rpc_id_ = 1;
  std::uint64_t next_req_id_ = 1;
  std::mt19937_64 rng_;
  bool trace_enabled_ = false;
  std::vector<TraceEvent> trace_;
};

}  // namespace dial
