#include "hlb/load_model.hpp"

#include <numeric>
#include <string>

namespace hlb {

void Thresholds::validate() const {
  if (!(0 < low_max && low_max < medium_max)) {
    throw std::invalid_argument(
      "thresholds require 0 < low_max < medium_max (got low_max=" +
      std::to_string(low_max) + ", medium_max=" + std::to_string(medium_max) + ")"
    );
  }
}

std::string_view to_string(LoadClass c) {
  switch (c) {
  case LoadClass::Low: return "LOW";
  case LoadClass::Medium: return "MEDIUM";
  case LoadClass::High: return "HIGH";
  }
  return "?";
}

ClusterCapacity ClusterCapacity::of(std::size_t cluster_size, Thresholds const& t) {
  auto const n = static_cast<LoadValue>(cluster_size);
  return ClusterCapacity{cluster_size, t.low_max * n, t.medium_max * n};
}

LoadClass classify_node_load(LoadValue load, Thresholds const& t) {
  if (load > t.medium_max) {
    return LoadClass::High;
  }
  if (load > t.low_max) {
    return LoadClass::Medium;
  }
  return LoadClass::Low;
}

LoadClass classify_cluster_load(LoadValue total, ClusterCapacity const& cap) {
  if (total > cap.cluster_medium_max) {
    return LoadClass::High;
  }
  if (total > cap.cluster_low_max) {
    return LoadClass::Medium;
  }
  return LoadClass::Low;
}

LoadValue cluster_total(std::span<LoadValue const> loads) {
  return std::accumulate(loads.begin(), loads.end(), LoadValue{0});
}

} // namespace hlb
