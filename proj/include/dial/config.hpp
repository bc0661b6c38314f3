#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dial/types.hpp"

namespace dial {

// The tunable pair per OSC: theta1 = RPC window size (pages per RPC extent),
// theta2 = max concurrent RPCs in flight.
struct Configuration {
  std::uint32_t rpc_window_pages = 256;
  std::uint32_t rpcs_in_flight = 8;

  bool operator==(const Configuration&) const = default;
};

inline std::string to_string(const Configuration& c) {
  return "(" + std::to_string(c.rpc_window_pages) + "," + std::to_string(c.rpcs_in_flight) + ")";
}

// The discrete configuration space Theta. Iteration order is fixed:
// ascending window size, then ascending RPCs in flight.
class ConfigSpace {
 public:
  ConfigSpace() = default;
  ConfigSpace(std::vector<std::uint32_t> windows, std::vector<std::uint32_t> inflights)
      : windows_(std::move(windows)), inflights_(std::move(inflights)) {
    std::sort(windows_.begin(), windows_.end());
    std::sort(inflights_.begin(), inflights_.end());
    if (windows_.empty() || inflights_.empty())
      throw std::invalid_argument("configuration space must be nonempty in both dimensions");
    for (auto v : windows_)
      if (v == 0) throw std::invalid_argument("window sizes must be positive");
    for (auto v : inflights_)
      if (v == 0) throw std::invalid_argument("rpcs in flight must be positive");
  }

  static ConfigSpace defaults() {
    return ConfigSpace({16, 32, 64, 128, 256, 512, 1024}, {1, 2, 4, 8, 16, 32});
  }

  const std::vector<std::uint32_t>& windows() const { return windows_; }
  const std::vector<std::uint32_t>& inflights() const { return inflights_; }

  std::size_t size() const { return windows_.size() * inflights_.size(); }

  bool contains(const Configuration& c) const {
    return std::binary_search(windows_.begin(), windows_.end(), c.rpc_window_pages) &&
           std::binary_search(inflights_.begin(), inflights_.end(), c.rpcs_in_flight);
  }

  // All configurations, window-major ascending.
  std::vector<Configuration> all() const {
    std::vector<Configuration> out;
    out.reserve(size());
    for (auto w : windows_)
      for (auto f : inflights_) out.push_back({w, f});
    return out;
  }

 private:
  std::vector<std::uint32_t> windows_;
  std::vector<std::uint32_t> inflights_;
};

}  // namespace dial
