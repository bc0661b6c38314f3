#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "dial/config.hpp"
#include "dial/metrics.hpp"

namespace dial {

struct TunerParams {
  double tau = 0.8;      // probability threshold for the candidate set
  double epsilon = 0.15; // improvement threshold the models were trained against
  double alpha = 0.5;    // read regularizer weight
  double beta = 0.5;     // write regularizer weight

  void validate() const {
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("tuner: tau in (0,1)");
    if (epsilon <= 0.0 || epsilon >= 1.0) throw std::invalid_argument("tuner: epsilon in (0,1)");
    if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("tuner: weights must be nonnegative");
  }
};

struct ScoredCandidate {
  Configuration theta;
  double p = 0.0;            // model probability, > tau for set members
  double window_norm = 0.0;  // theta1 after MinMax normalization over the set
  double inflight_norm = 0.0;
  double score = 0.0;
};

// Model evaluation point: probability of >epsilon improvement for one feature vector.
using ModelFn = std::function<double(const std::vector<double>&)>;

// Picks which trained model applies this interval, by transferred volume.
// Exact tie goes to Write; both zero means the interval was idle.
inline std::optional<OpType> select_op_type(const MetricSnapshot& snap) {
  const double r = snap.read.data_transfer_volume;
  const double w = snap.write.data_transfer_volume;
  if (r == 0.0 && w == 0.0) return std::nullopt;
  return r > w ? OpType::Read : OpType::Write;
}

// Algorithm lines 2-5: evaluate every theta, keep those with p > tau.
// Iteration order over theta is ascending window, then ascending inflight.
inline std::vector<ScoredCandidate> candidate_set(const ModelFn& model, const MetricSnapshot& snap,
                                                  const ConfigSpace& theta, OpType op, double tau) {
  if (!snap.has_deltas) throw std::invalid_argument("candidate_set: snapshot has no deltas");
  std::vector<ScoredCandidate> s;
  for (const Configuration& c : theta.all()) {
    const double p = model(feature_vector(snap, c, op));
    if (p > tau) s.push_back({c, p, 0.0, 0.0, 0.0});
  }
  return s;
}

// MinMax per dimension over the set; a degenerate dimension (max == min)
// normalizes to 0 so the score falls back to the probability term.
inline void minmax_normalize(std::vector<ScoredCandidate>& s) {
  if (s.empty()) throw std::invalid_argument("minmax_normalize: empty candidate set");
  double wmin = s[0].theta.rpc_window_pages, wmax = wmin;
  double fmin = s[0].theta.rpcs_in_flight, fmax = fmin;
  for (const auto& c : s) {
    wmin = std::min(wmin, double(c.theta.rpc_window_pages));
    wmax = std::max(wmax, double(c.theta.rpc_window_pages));
    fmin = std::min(fmin, double(c.theta.rpcs_in_flight));
    fmax = std::max(fmax, double(c.theta.rpcs_in_flight));
  }
  for (auto& c : s) {
    c.window_norm = wmax > wmin ? (double(c.theta.rpc_window_pages) - wmin) / (wmax - wmin) : 0.0;
    c.inflight_norm = fmax > fmin ? (double(c.theta.rpcs_in_flight) - fmin) / (fmax - fmin) : 0.0;
  }
}

inline double write_score(const ScoredCandidate& c, double beta) {
  return c.p * (1.0 + beta * (c.window_norm + c.inflight_norm));
}

inline double read_score(const ScoredCandidate& c, double alpha) {
  return (c.p * (1.0 + alpha * c.window_norm)) + c.inflight_norm;
}

struct TuneResult {
  Configuration chosen;
  bool idle = false;     // both volumes were zero; no decision taken
  bool changed = false;  // chosen != current
  OpType op = OpType::Write;
  double chosen_p = 0.0;                  // model probability of the chosen theta (if changed)
  std::vector<ScoredCandidate> candidates;  // scored set S, for --explain and logs
};

// The full Conditional Score Greedy step. Empty S keeps the current
// configuration; score ties break toward larger window, then larger inflight.
inline TuneResult tune(const ModelFn& read_model, const ModelFn& write_model,
                       const MetricSnapshot& snap, const ConfigSpace& theta,
                       const Configuration& current, const TunerParams& params) {
  params.validate();
  TuneResult r;
  r.chosen = current;
  const auto op = select_op_type(snap);
  if (!op) {
    r.idle = true;
    return r;
  }
  r.op = *op;
  const ModelFn& model = *op == OpType::Read ? read_model : write_model;
  r.candidates = candidate_set(model, snap, theta, *op, params.tau);
  if (r.candidates.empty()) return r;

  minmax_normalize(r.candidates);
  for (auto& c : r.candidates)
    c.score = *op == OpType::Write ? write_score(c, params.beta) : read_score(c, params.alpha);

  const ScoredCandidate* best = &r.candidates[0];
  for (const auto& c : r.candidates) {
    if (c.score > best->score) {
      best = &c;
    } else if (c.score == best->score) {
      if (c.theta.rpc_window_pages > best->theta.rpc_window_pages ||
          (c.theta.rpc_window_pages == best->theta.rpc_window_pages &&
           c.theta.rpcs_in_flight > best->theta.rpcs_in_flight))
        best = &c;
    }
  }
  r.chosen = best->theta;
  r.chosen_p = best->p;
  r.changed = !(r.chosen == current);
  return r;
}

}  // namespace dial
