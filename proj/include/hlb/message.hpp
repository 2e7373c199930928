#pragma once

#include "hlb/load_model.hpp"

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hlb {

using NodeId = std::uint32_t;

/// Clusters are named by their coordinator's node id.
using ClusterId = NodeId;

enum class Role : std::uint8_t { Node = 0, Coordinator = 1 };

/// A process in the grid. A coordinator host runs two processes: the
/// coordinator itself and an ordinary node process holding the host's load.
struct ActorId {
  NodeId node = 0;
  Role role = Role::Node;

  static constexpr ActorId node_process(NodeId id) { return {id, Role::Node}; }
  static constexpr ActorId coordinator(ClusterId id) { return {id, Role::Coordinator}; }

  friend auto operator<=>(ActorId const&, ActorId const&) = default;
};

std::string to_string(ActorId const& a);

/// Identifies one commanded transfer end to end, across relays and acks.
struct TransferTag {
  ClusterId issuer = 0;
  std::uint32_t seq = 0;

  friend auto operator<=>(TransferTag const&, TransferTag const&) = default;
};

struct TokenEntry {
  ClusterId cluster = 0;
  LoadValue total = 0;

  friend bool operator==(TokenEntry const&, TokenEntry const&) = default;
};

// Wire vocabulary. Comments give the role pair each variant travels between.

/// coordinator -> member
struct Poll {};

/// member -> coordinator
struct NodeStateReport {
  LoadValue load = 0;
};

/// coordinator -> donor member. Local commands name a node in the same
/// cluster; remote commands name the destination cluster.
struct XferCmd {
  bool remote = false;
  NodeId dest = 0;
  LoadValue amount = 0;
  TransferTag tag;
};

/// Load payload addressed to a node: donor -> recipient (local) or
/// coordinator -> recipient (relay of an inter-cluster shipment).
struct NodeLoad {
  LoadValue amount = 0;
  TransferTag tag;
};

/// Donor -> own coordinator, carrying load bound for another cluster.
struct CoordLoad {
  LoadValue amount = 0;
  ClusterId dest_cluster = 0;
  TransferTag tag;
};

/// Coordinator -> coordinator load relay.
struct XLoad {
  LoadValue amount = 0;
  ClusterId sender_cluster = 0;
  TransferTag tag;
};

/// Delivery acknowledgement travelling on node <-> coordinator links.
struct NodeAck {
  TransferTag tag;
};

/// Coordinator -> coordinator delivery acknowledgement.
struct XAck {
  TransferTag tag;
};

struct Token {
  ClusterId originator = 0;
  std::vector<TokenEntry> entries;
};

/// The completed token contents, multicast by the originator.
struct LoadVector {
  std::vector<TokenEntry> entries;
};

/// coordinator -> member: balancing round over.
struct End {};

using Message = std::variant<
  Poll, NodeStateReport, XferCmd, NodeLoad, CoordLoad, XLoad, NodeAck, XAck, Token,
  LoadVector, End>;

inline constexpr std::size_t kMessageVariants = std::variant_size_v<Message>;

std::string_view variant_name(Message const& m);
std::string_view variant_name(std::size_t index);

/// Short human readable payload, used in traces and error messages.
std::string payload_summary(Message const& m);

/// Whether the message physically carries load.
bool is_load_bearing(Message const& m);

struct Envelope {
  ActorId src;
  ActorId dst;
  Message msg;
};

/// Coordinator timer expiry.
struct Timeout {};

} // namespace hlb
