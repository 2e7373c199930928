#pragma once

#include "hlb/balance_planner.hpp"
#include "hlb/load_model.hpp"
#include "hlb/message.hpp"

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hlb {

/// An actor received an input its transition table does not cover.
struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Input = std::variant<Timeout, Envelope>;

std::string_view input_name(Input const& in);

// -- node process -------------------------------------------------------------

enum class NodePhase : std::uint8_t { Idle, WaitXfer, WaitLd, WaitAck };

std::string_view to_string(NodePhase p);

struct NodeState {
  NodeId self = 0;
  ClusterId coordinator = 0;
  Thresholds thresholds;

  NodePhase phase = NodePhase::Idle;
  LoadValue load = 0;
  /// Commands that arrived while a previous transfer awaited its ack.
  std::deque<XferCmd> pending_cmds;
  std::optional<TransferTag> awaiting;
};

struct NodeStep {
  NodeState state;
  std::vector<Envelope> out;
};

/// Node transition function. Inputs other than envelopes addressed to this
/// node are contract violations and raise ProtocolError.
NodeStep node_step(NodeState s, Input const& in);

// -- coordinator ----------------------------------------------------------------

enum class CoordPhase : std::uint8_t {
  Idle,
  WaitPoll,
  WaitXferMes,
  WaitLd,
  WaitXAck,
  WaitXLd,
  WaitInAck,
};

std::string_view to_string(CoordPhase p);

/// Static knowledge a coordinator holds about the grid.
struct CoordinatorConfig {
  ClusterId self = 0;
  /// Member node ids in ascending order; includes the co-located node process.
  std::vector<NodeId> members;
  ClusterId ring_next = 0;
  /// All coordinators, ascending. Index positions match cluster_sizes.
  std::vector<ClusterId> coordinators;
  std::vector<std::size_t> cluster_sizes;
  Thresholds thresholds;
};

struct OutgoingChunk {
  NodeId donor = 0;
  ClusterId dest_cluster = 0;
  LoadValue amount = 0;
  TransferTag tag;
};

struct InboundDelivery {
  TransferTag tag;
  ClusterId sender = 0;
  std::size_t acks_left = 0;
};

struct CoordinatorState {
  CoordinatorConfig cfg;

  CoordPhase phase = CoordPhase::Idle;
  /// Set once the timer or a token has started this round's activity. Later
  /// timer expiries are superseded.
  bool activated = false;

  std::map<NodeId, LoadValue> member_loads;
  std::size_t reports_pending = 0;
  LoadValue cluster_total = 0;

  bool token_received = false;
  std::optional<Token> held_token;
  /// Smallest originator among tokens this coordinator originated or forwarded.
  std::optional<ClusterId> smallest_seen;
  /// Own entry travels in a live token; a LoadVector is owed to us.
  bool awaiting_vector = false;
  bool global_done = false;

  std::uint32_t next_seq = 0;
  /// Local transfers whose recipient ack has not come back yet, by tag seq.
  std::map<std::uint32_t, NodeId> local_pending;

  std::deque<OutgoingChunk> outgoing;
  std::optional<OutgoingChunk> current_out;

  std::map<ClusterId, LoadValue> expected_in;
  std::deque<XLoad> queued_xloads;
  std::optional<InboundDelivery> current_in;

  LoadValue capacity() const;
  bool is_high() const;
};

CoordinatorState make_coordinator(CoordinatorConfig cfg);

struct CoordStep {
  CoordinatorState state;
  std::vector<Envelope> out;
};

CoordStep coordinator_step(CoordinatorState s, Input const& in);

/// Result of offering an incoming token to a coordinator that did not
/// originate it.
struct TokenDrop {};
using TokenDecision = std::variant<Token, TokenDrop>;

/// Appends (own, total) and returns the token to forward, or drops it when a
/// token with an originator no larger than the incoming one has already
/// passed through here. A token that already carries own's entry is a
/// contract violation.
TokenDecision token_merge(
  ClusterId own, LoadValue own_total, Token incoming, std::optional<ClusterId> smallest_seen
);

} // namespace hlb
