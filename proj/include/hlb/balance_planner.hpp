#pragma once

#include "hlb/load_model.hpp"

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlb {

/// Raised when a planner precondition fails. Inside the protocol this means
/// two coordinators disagree about the global state, which is a bug.
struct PlannerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One shipment between two positions of the planner's input vector (node
/// indices for local plans, cluster indices for global plans).
struct TransferRecord {
  std::size_t from = 0;
  std::size_t to = 0;
  LoadValue amount = 0;

  friend bool operator==(TransferRecord const&, TransferRecord const&) = default;
};

struct TransferPlan {
  std::vector<TransferRecord> transfers;
  std::vector<LoadValue> final_loads;

  friend bool operator==(TransferPlan const&, TransferPlan const&) = default;
};

/// Greedy excess redistribution inside a cluster.
///
/// Donors (load > medium_max) are visited in ascending index order. Each one
/// fills recipients (load < medium_max), also in ascending order, up to
/// medium_max until its excess is gone. One record per (donor, recipient)
/// pair; unabsorbed excess stays on the donor.
TransferPlan local_balance_plan(std::span<LoadValue const> loads, Thresholds const& t);

/// The same greedy at cluster granularity, each cluster capped at its own
/// cluster_medium_max. Inputs are ordered by cluster id.
TransferPlan global_balance_plan(
  std::span<LoadValue const> cluster_totals, std::span<ClusterCapacity const> caps
);

/// Shared greedy kernel: donors are entries above their cap.
TransferPlan greedy_capped_plan(std::span<LoadValue const> loads, std::span<LoadValue const> caps);

template <typename Dest>
struct Outgoing {
  Dest dest{};
  LoadValue amount = 0;
};

template <typename Dest>
struct DonorChunk {
  std::size_t donor = 0;
  Dest dest{};
  LoadValue amount = 0;

  friend bool operator==(DonorChunk const&, DonorChunk const&) = default;
};

struct RecipientChunk {
  std::size_t recipient = 0;
  LoadValue amount = 0;

  friend bool operator==(RecipientChunk const&, RecipientChunk const&) = default;
};

/// Splits a cluster's inter-cluster obligations over its donor nodes.
/// Donors drain in ascending index order, destinations are served in the
/// order given; no donor drops below medium_max.
template <typename Dest>
std::vector<DonorChunk<Dest>> sender_assignment(
  std::span<LoadValue const> local_loads, Thresholds const& t,
  std::span<Outgoing<Dest> const> outgoing
);

/// Fans an incoming inter-cluster amount out over nodes below medium_max,
/// filling in ascending index order.
std::vector<RecipientChunk> receiver_assignment(
  std::span<LoadValue const> local_loads, Thresholds const& t, LoadValue incoming_amount
);

// -- implementation ---------------------------------------------------------

template <typename Dest>
std::vector<DonorChunk<Dest>> sender_assignment(
  std::span<LoadValue const> local_loads, Thresholds const& t,
  std::span<Outgoing<Dest> const> outgoing
) {
  LoadValue available = 0;
  for (auto const load : local_loads) {
    if (load > t.medium_max) {
      available += load - t.medium_max;
    }
  }
  LoadValue requested = 0;
  for (auto const& o : outgoing) {
    if (o.amount < 0) {
      throw PlannerError("sender_assignment: negative outgoing amount");
    }
    requested += o.amount;
  }
  if (requested > available) {
    throw PlannerError(
      "sender_assignment: outgoing " + std::to_string(requested) +
      " exceeds available excess " + std::to_string(available)
    );
  }

  std::vector<DonorChunk<Dest>> chunks;
  std::size_t donor = 0;
  LoadValue donor_left = 0;
  auto advance = [&] {
    while (donor < local_loads.size() && local_loads[donor] <= t.medium_max) {
      ++donor;
    }
    donor_left = donor < local_loads.size() ? local_loads[donor] - t.medium_max : 0;
  };
  advance();

  for (auto const& o : outgoing) {
    LoadValue need = o.amount;
    while (need > 0) {
      if (donor_left == 0) {
        ++donor;
        advance();
      }
      LoadValue const take = std::min(need, donor_left);
      chunks.push_back(DonorChunk<Dest>{donor, o.dest, take});
      need -= take;
      donor_left -= take;
    }
  }
  return chunks;
}

} // namespace hlb
