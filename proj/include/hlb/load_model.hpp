#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>

namespace hlb {

/// Abstract, integer-valued load units. Never negative.
using LoadValue = std::int64_t;

struct Thresholds {
  LoadValue low_max = 5;
  LoadValue medium_max = 10;

  /// Throws std::invalid_argument unless 0 < low_max < medium_max.
  void validate() const;

  friend bool operator==(Thresholds const&, Thresholds const&) = default;
};

enum class LoadClass : std::uint8_t { Low = 0, Medium = 1, High = 2 };

std::string_view to_string(LoadClass c);

/// Aggregate threshold of one cluster: every member (the coordinator's own
/// node process included) may hold up to medium_max.
struct ClusterCapacity {
  std::size_t cluster_size = 0;
  LoadValue cluster_low_max = 0;
  LoadValue cluster_medium_max = 0;

  static ClusterCapacity of(std::size_t cluster_size, Thresholds const& t);

  friend bool operator==(ClusterCapacity const&, ClusterCapacity const&) = default;
};

LoadClass classify_node_load(LoadValue load, Thresholds const& t);

LoadClass classify_cluster_load(LoadValue total, ClusterCapacity const& cap);

LoadValue cluster_total(std::span<LoadValue const> loads);

} // namespace hlb
