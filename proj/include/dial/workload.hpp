#pragma once

#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dial/sim.hpp"
#include "dial/types.hpp"

namespace dial {

enum class Access { Sequential, Random };

// One benchmark-style I/O personality, in the fixed naming convention
// [s|f]_[rd|wr]_[sq|rn|ip]_[8k|1m|16m].
struct WorkloadSpec {
  std::string name;
  OpType op = OpType::Write;
  Access access = Access::Sequential;
  std::uint64_t request_size = 1 << 20;
  int streams = 1;
  std::uint64_t file_size = 4ull << 30;
  double think_time = 0.0;
  double duration = 300.0;
  double overwrite_fraction = 0.0;  // share of writes that rewrite recently written offsets
  int queue_depth = 4;              // closed-loop outstanding requests per stream
  std::uint32_t stripe_count = 0;   // OSTs per file; 0 = all (training uses 1, as the
                                    // single-OST protocol does)

  void validate() const {
    if (request_size == 0 || request_size > file_size)
      throw std::invalid_argument("workload: request_size must be in (0, file_size]");
    if (duration <= 0) throw std::invalid_argument("workload: duration must be positive");
    if (streams < 1) throw std::invalid_argument("workload: streams >= 1");
    if (think_time < 0) throw std::invalid_argument("workload: think_time >= 0");
    if (overwrite_fraction < 0 || overwrite_fraction > 1)
      throw std::invalid_argument("workload: overwrite_fraction in [0,1]");
  }
};

// Parses the spec grammar; rejects with the 1-based position of the first bad
// token. The `ip` access token selects the in-place-update write personality
// (sequential frontier with overwrite_fraction 0.8).
inline WorkloadSpec parse_spec(const std::string& name) {
  std::vector<std::string> tok;
  std::stringstream ss(name);
  std::string piece;
  while (std::getline(ss, piece, '_')) tok.push_back(piece);
  auto bad = [&](int pos) {
    throw std::invalid_argument("workload spec '" + name + "': bad token " + std::to_string(pos));
  };
  if (tok.size() != 4) bad(int(tok.size()) + 1 <= 4 ? int(tok.size()) + 1 : 5);

  WorkloadSpec s;
  s.name = name;
  if (tok[0] == "s") s.streams = 1;
  else if (tok[0] == "f") s.streams = 5;
  else bad(1);
  if (tok[1] == "rd") s.op = OpType::Read;
  else if (tok[1] == "wr") s.op = OpType::Write;
  else bad(2);
  if (tok[2] == "sq") s.access = Access::Sequential;
  else if (tok[2] == "rn") s.access = Access::Random;
  else if (tok[2] == "ip") {
    if (s.op != OpType::Write) bad(3);
    s.access = Access::Sequential;
    s.overwrite_fraction = 0.8;
  } else bad(3);
  if (tok[3] == "8k") s.request_size = 8 << 10;
  else if (tok[3] == "1m") s.request_size = 1 << 20;
  else if (tok[3] == "16m") s.request_size = 16 << 20;
  else bad(4);
  s.validate();
  return s;
}

// Per-stream offset generation state. Offsets depend only on the stream's own
// seeded RNG, never on simulation timing, so a given seed replays the same
// access sequence under any configuration.
class StreamGen {
 public:
  StreamGen(const WorkloadSpec& spec, std::uint32_t file_id, std::uint64_t seed, int stream_idx)
      : spec_(spec), file_id_(file_id), rng_(seed ^ (0x9e3779b97f4a7c15ull * (stream_idx + 1))) {}

  std::uint32_t file_id() const { return file_id_; }

  IoRequest next(double now) {
    IoRequest req;
    req.op = spec_.op;
    req.file_id = file_id_;
    req.length = spec_.request_size;
    req.submit_time = now;
    if (spec_.access == Access::Random) {
      const std::uint64_t max_page = (spec_.file_size - spec_.request_size) / kPageSize;
      std::uniform_int_distribution<std::uint64_t> pick(0, max_page);
      req.offset = pick(rng_) * kPageSize;
    } else if (spec_.overwrite_fraction > 0.0 && !recent_.empty() &&
               std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < spec_.overwrite_fraction) {
      std::uniform_int_distribution<std::size_t> pick(0, recent_.size() - 1);
      req.offset = recent_[pick(rng_)];
    } else {
      if (cursor_ + spec_.request_size > spec_.file_size) cursor_ = 0;
      req.offset = cursor_;
      cursor_ += spec_.request_size;
      if (spec_.overwrite_fraction > 0.0) {
        recent_.push_back(req.offset);
        if (recent_.size() > kRecentDepth) recent_.erase(recent_.begin());
      }
    }
    return req;
  }

 private:
  static constexpr std::size_t kRecentDepth = 4;
  WorkloadSpec spec_;
  std::uint32_t file_id_;
  std::mt19937_64 rng_;
  std::uint64_t cursor_ = 0;
  std::vector<std::uint64_t> recent_;
};

// Emits the next due request for each stream (one per stream when `now` is a
// multiple of its pacing). Batch form used by tests; the simulator driver
// issues per-stream via StreamGen directly.
inline std::vector<IoRequest> next_requests(const WorkloadSpec& spec, std::vector<StreamGen>& streams,
                                            double now) {
  if (now >= spec.duration) throw std::invalid_argument("next_requests: now beyond duration");
  std::vector<IoRequest> out;
  out.reserve(streams.size());
  for (auto& s : streams) out.push_back(s.next(now));
  return out;
}

struct WorkloadSequence {
  std::vector<WorkloadSpec> phases;
  double switch_interval = 300.0;

  void validate() const {
    if (phases.empty()) throw std::invalid_argument("sequence: at least one phase");
    if (switch_interval <= 0) throw std::invalid_argument("sequence: switch_interval > 0");
    for (const auto& p : phases) p.validate();
  }
};

inline WorkloadSequence sequence_from_json(const nlohmann::json& j) {
  WorkloadSequence seq;
  seq.switch_interval = j.value("switch_interval", 300.0);
  for (const auto& name : j.at("specs")) {
    WorkloadSpec s = parse_spec(name.get<std::string>());
    s.duration = seq.switch_interval;
    seq.phases.push_back(std::move(s));
  }
  seq.validate();
  return seq;
}

inline WorkloadSequence load_sequence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sequence file: " + path);
  nlohmann::json j;
  in >> j;
  return sequence_from_json(j);
}

}  // namespace dial
