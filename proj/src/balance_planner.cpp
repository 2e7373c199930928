#include "hlb/balance_planner.hpp"

#include <algorithm>
#include <string>

namespace hlb {

TransferPlan greedy_capped_plan(std::span<LoadValue const> loads, std::span<LoadValue const> caps) {
  if (loads.size() != caps.size()) {
    throw PlannerError("greedy plan: loads and caps differ in length");
  }
  TransferPlan plan;
  plan.final_loads.assign(loads.begin(), loads.end());
  auto& cur = plan.final_loads;

  for (std::size_t i = 0; i < cur.size(); ++i) {
    if (cur[i] <= caps[i]) {
      continue;
    }
    LoadValue excess = cur[i] - caps[i];
    for (std::size_t j = 0; j < cur.size() && excess > 0; ++j) {
      if (j == i || cur[j] >= caps[j]) {
        continue;
      }
      // transferable is taken before the excess is decremented
      LoadValue const shipped = std::min(excess, caps[j] - cur[j]);
      excess -= shipped;
      cur[i] -= shipped;
      cur[j] += shipped;
      plan.transfers.push_back(TransferRecord{i, j, shipped});
    }
  }
  return plan;
}

TransferPlan local_balance_plan(std::span<LoadValue const> loads, Thresholds const& t) {
  if (loads.empty()) {
    throw PlannerError("local_balance_plan: empty load vector");
  }
  std::vector<LoadValue> caps(loads.size(), t.medium_max);
  return greedy_capped_plan(loads, caps);
}

TransferPlan global_balance_plan(
  std::span<LoadValue const> cluster_totals, std::span<ClusterCapacity const> caps
) {
  if (cluster_totals.size() != caps.size()) {
    throw PlannerError("global_balance_plan: totals and capacities differ in length");
  }
  std::vector<LoadValue> limits;
  limits.reserve(caps.size());
  for (auto const& c : caps) {
    limits.push_back(c.cluster_medium_max);
  }
  return greedy_capped_plan(cluster_totals, limits);
}

std::vector<RecipientChunk> receiver_assignment(
  std::span<LoadValue const> local_loads, Thresholds const& t, LoadValue incoming_amount
) {
  if (incoming_amount < 0) {
    throw PlannerError("receiver_assignment: negative incoming amount");
  }
  LoadValue spare = 0;
  for (auto const load : local_loads) {
    spare += std::max<LoadValue>(0, t.medium_max - load);
  }
  if (incoming_amount > spare) {
    throw PlannerError(
      "receiver_assignment: incoming " + std::to_string(incoming_amount) +
      " exceeds spare capacity " + std::to_string(spare)
    );
  }

  std::vector<RecipientChunk> out;
  LoadValue left = incoming_amount;
  for (std::size_t i = 0; i < local_loads.size() && left > 0; ++i) {
    LoadValue const room = t.medium_max - local_loads[i];
    if (room <= 0) {
      continue;
    }
    LoadValue const take = std::min(room, left);
    out.push_back(RecipientChunk{i, take});
    left -= take;
  }
  return out;
}

} // namespace hlb
