#pragma once

#include "hlb/load_model.hpp"
#include "hlb/message.hpp"
#include "hlb/protocol.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlb {

using SimTime = std::int64_t;

/// Time to move a load payload from donor to recipient.
struct LoadTransferModel {
  enum class Kind : std::uint8_t { Constant, Linear };

  Kind kind = Kind::Constant;
  /// Constant: the transfer time. Linear: time per load unit.
  SimTime value = 0;

  SimTime cost(LoadValue amount) const;

  static LoadTransferModel constant(SimTime c) { return {Kind::Constant, c}; }
  static LoadTransferModel linear(SimTime per_unit) { return {Kind::Linear, per_unit}; }

  friend bool operator==(LoadTransferModel const&, LoadTransferModel const&) = default;
};

struct Cluster {
  ClusterId coordinator = 0;
  std::vector<NodeId> members;
};

/// Clusters of consecutive node ids; coordinators joined in a directed ring.
struct Topology {
  std::vector<Cluster> clusters;
  /// Coordinators in ring order; each forwards to the next, the last wraps.
  std::vector<ClusterId> ring;
  /// Hops between a member and its coordinator (cluster diameter).
  SimTime d = 1;
  /// Latency of one hop.
  SimTime T = 1;
  LoadTransferModel load_time;

  std::size_t node_count() const;
  std::size_t cluster_count() const { return clusters.size(); }
  std::size_t cluster_index_of(NodeId node) const;
  ClusterId ring_next(ClusterId c) const;

  /// Delivery latency of a message under the link model below.
  ///
  /// Control messages between a member and its coordinator cost d*T and ring
  /// hops between coordinators cost T; a message to oneself is free. A load
  /// payload takes load_time on its first leg (donor to recipient node, or
  /// donor to own coordinator); coordinator relays of an inter-cluster
  /// payload pass it through without further delay.
  SimTime latency(Envelope const& e) const;
};

/// First node of each cluster coordinates it; ring in ascending id order.
Topology build_topology(
  std::span<std::size_t const> cluster_sizes, SimTime d = 1, SimTime T = 1,
  LoadTransferModel load_time = {}
);

struct RoundOptions {
  /// Timer instant per cluster, in cluster order. Empty: all fire at t = 0.
  std::vector<SimTime> timer_offsets;
  std::uint64_t event_ceiling = 1'000'000;
  bool record_trace = true;
};

struct TraceRecord {
  SimTime at = 0;
  ActorId src;
  ActorId dst;
  /// Empty for timer expiries.
  std::optional<Message> msg;
};

/// Timing of one commanded transfer measured along its causal message chain:
/// the donor's state report, the command, the payload and every ack back to
/// the donor. Time the chain spends queued or waiting for global knowledge
/// is not part of it.
struct TransferTiming {
  TransferTag tag;
  NodeId donor = 0;
  bool remote = false;
  LoadValue amount = 0;
  SimTime load_time = 0;
  SimTime critical_path = 0;
  std::uint32_t path_messages = 0;
  SimTime completed_at = 0;
};

struct MessageCounts {
  std::array<std::uint64_t, kMessageVariants> by_variant{};
  /// Token messages between distinct coordinators.
  std::uint64_t token_hops = 0;
  std::uint64_t load_vector_msgs = 0;

  std::uint64_t total() const;
  std::uint64_t of(std::string_view variant) const;
  std::uint64_t global_knowledge() const { return token_hops + load_vector_msgs; }

  friend bool operator==(MessageCounts const&, MessageCounts const&) = default;
};

struct RoundResult {
  std::vector<LoadValue> initial_loads;
  std::vector<LoadValue> final_loads;
  MessageCounts counts;
  SimTime sim_time = 0;
  std::uint64_t events = 0;
  std::vector<TransferTiming> transfers;
  /// Global-knowledge window: first token sent to last load vector delivered.
  std::optional<SimTime> first_token_sent;
  std::optional<SimTime> last_vector_delivered;
  std::vector<TraceRecord> trace;
};

struct SimulationError : std::runtime_error {
  enum class Kind : std::uint8_t { EventCeiling, NotQuiescent, Invariant };

  SimulationError(Kind k, std::string const& what, std::string live)
      : std::runtime_error(what), kind(k), live_states(std::move(live)) {}

  Kind kind;
  /// One line per actor not in IDLE.
  std::string live_states;
};

/// Runs one balancing round to quiescence.
///
/// Throws SimulationError when the event ceiling is hit, when the queue
/// drains with actors outside IDLE, or when load conservation breaks;
/// ProtocolError and PlannerError propagate from the actors.
RoundResult run_round(
  Topology const& topo, std::span<LoadValue const> initial_loads, Thresholds const& t,
  RoundOptions const& opts = {}
);

MessageCounts message_counts(std::span<TraceRecord const> trace);

/// Line-delimited trace: time, source, destination, variant, payload.
void write_trace(std::ostream& os, std::span<TraceRecord const> trace);

} // namespace hlb
