#include "hlb/protocol.hpp"

#include <doctest.h>

#include <vector>

using namespace hlb;

namespace {

Thresholds const kT{5, 10};

NodeState node(NodeId self, ClusterId coord, LoadValue load, NodePhase phase = NodePhase::Idle) {
  NodeState s;
  s.self = self;
  s.coordinator = coord;
  s.thresholds = kT;
  s.load = load;
  s.phase = phase;
  return s;
}

Envelope from_coord(NodeState const& s, Message m) {
  return Envelope{ActorId::coordinator(s.coordinator), ActorId::node_process(s.self), std::move(m)};
}

CoordinatorConfig ring_config(ClusterId self, std::vector<ClusterId> coords, std::size_t size) {
  CoordinatorConfig cfg;
  cfg.self = self;
  for (std::size_t i = 0; i < size; ++i) cfg.members.push_back(self + static_cast<NodeId>(i));
  cfg.coordinators = coords;
  cfg.cluster_sizes.assign(coords.size(), size);
  auto it = std::find(coords.begin(), coords.end(), self);
  cfg.ring_next = (it + 1 == coords.end()) ? coords.front() : *(it + 1);
  cfg.thresholds = kT;
  return cfg;
}

CoordStep step(CoordinatorState s, ActorId src, Message m) {
  auto const dst = ActorId::coordinator(s.cfg.self);
  return coordinator_step(std::move(s), Envelope{src, dst, std::move(m)});
}

/// Drives a coordinator through its poll with the given member loads.
CoordStep polled(CoordinatorState s, std::vector<LoadValue> const& loads) {
  auto r = coordinator_step(std::move(s), Timeout{});
  auto all = std::move(r.out);
  for (std::size_t i = 0; i < loads.size(); ++i) {
    auto const src = ActorId::node_process(r.state.cfg.members[i]);
    r = step(std::move(r.state), src, NodeStateReport{loads[i]});
    all.insert(all.end(), r.out.begin(), r.out.end());
  }
  r.out = std::move(all);
  return r;
}

template <typename M>
std::vector<Envelope> only(std::vector<Envelope> const& out) {
  std::vector<Envelope> v;
  for (auto const& e : out) {
    if (std::holds_alternative<M>(e.msg)) v.push_back(e);
  }
  return v;
}

} // namespace

TEST_CASE("node answers a poll and picks its phase from its load") {
  SUBCASE("high") {
    auto const s = node(2, 0, 15);
    auto const r = node_step(s, from_coord(s, Poll{}));
    REQUIRE(r.out.size() == 1);
    CHECK(std::get<NodeStateReport>(r.out[0].msg).load == 15);
    CHECK(r.out[0].dst == ActorId::coordinator(0));
    CHECK(r.state.phase == NodePhase::WaitXfer);
  }
  SUBCASE("exactly medium_max") {
    auto const s = node(2, 0, 10);
    auto const r = node_step(s, from_coord(s, Poll{}));
    CHECK(std::get<NodeStateReport>(r.out.at(0).msg).load == 10);
    CHECK(r.state.phase == NodePhase::Idle);
  }
  SUBCASE("below medium_max") {
    auto const s = node(2, 0, 7);
    CHECK(node_step(s, from_coord(s, Poll{})).state.phase == NodePhase::WaitLd);
  }
}

TEST_CASE("node receives load and acks its coordinator") {
  auto const s = node(1, 0, 7, NodePhase::WaitLd);
  auto const r = node_step(s, Envelope{ActorId::node_process(0), ActorId::node_process(1), NodeLoad{3, {0, 4}}});
  CHECK(r.state.load == 10);
  CHECK(r.state.phase == NodePhase::WaitLd);
  REQUIRE(r.out.size() == 1);
  CHECK(r.out[0].dst == ActorId::coordinator(0));
  CHECK(std::get<NodeAck>(r.out[0].msg).tag == TransferTag{0, 4});
  // both endpoints together still hold the shipped amount
  CHECK(r.state.load - s.load == 3);
}

TEST_CASE("node transfer commands, acks and queueing") {
  auto s = node(2, 0, 15, NodePhase::WaitXfer);
  auto r = node_step(s, from_coord(s, XferCmd{false, 4, 2, {0, 1}}));
  CHECK(r.state.load == 13);
  CHECK(r.state.phase == NodePhase::WaitAck);
  REQUIRE(r.out.size() == 1);
  CHECK(r.out[0].dst == ActorId::node_process(4));
  CHECK(std::get<NodeLoad>(r.out[0].msg).amount == 2);

  // a second command while the first is unacknowledged waits
  r = node_step(r.state, from_coord(s, XferCmd{true, 18, 3, {0, 2}}));
  CHECK(r.out.empty());
  CHECK(r.state.load == 13);
  CHECK(r.state.pending_cmds.size() == 1);

  r = node_step(r.state, from_coord(s, NodeAck{{0, 1}}));
  CHECK(r.state.phase == NodePhase::WaitAck);
  CHECK(r.state.load == 10);
  REQUIRE(r.out.size() == 1);
  CHECK(r.out[0].dst == ActorId::coordinator(0));
  auto const& cl = std::get<CoordLoad>(r.out[0].msg);
  CHECK(cl.amount == 3);
  CHECK(cl.dest_cluster == 18);

  r = node_step(r.state, from_coord(s, NodeAck{{0, 2}}));
  CHECK(r.state.phase == NodePhase::WaitXfer);
  r = node_step(r.state, from_coord(s, End{}));
  CHECK(r.state.phase == NodePhase::Idle);
}

TEST_CASE("node rejects every pair outside its table") {
  std::vector<Message> const all{
    Poll{}, NodeStateReport{1}, XferCmd{false, 1, 1, {}}, NodeLoad{1, {}}, CoordLoad{1, 0, {}},
    XLoad{1, 0, {}}, NodeAck{{}}, XAck{{}}, Token{0, {}}, LoadVector{}, End{},
  };
  auto allowed = [](NodePhase p, Message const& m) {
    switch (p) {
    case NodePhase::Idle: return std::holds_alternative<Poll>(m) || std::holds_alternative<End>(m);
    case NodePhase::WaitLd: return std::holds_alternative<NodeLoad>(m) || std::holds_alternative<End>(m);
    case NodePhase::WaitXfer: return std::holds_alternative<XferCmd>(m) || std::holds_alternative<End>(m);
    case NodePhase::WaitAck: return std::holds_alternative<NodeAck>(m) || std::holds_alternative<XferCmd>(m);
    }
    return false;
  };
  for (auto const phase : {NodePhase::Idle, NodePhase::WaitLd, NodePhase::WaitXfer, NodePhase::WaitAck}) {
    for (auto const& m : all) {
      auto s = node(1, 0, 12, phase);
      s.awaiting = TransferTag{};
      auto const env = from_coord(s, m);
      if (allowed(phase, m)) {
        CHECK_NOTHROW(node_step(s, env));
      } else {
        CHECK_THROWS_AS(node_step(s, env), ProtocolError);
      }
    }
    auto const s = node(1, 0, 12, phase);
    CHECK_THROWS_AS(node_step(s, Timeout{}), ProtocolError);
  }
}

TEST_CASE("unexpected-event errors name the state and the variant") {
  auto const s = node(3, 0, 5, NodePhase::WaitLd);
  try {
    node_step(s, from_coord(s, XAck{{}}));
    FAIL("no error");
  } catch (ProtocolError const& e) {
    std::string const what = e.what();
    CHECK(what.find("WAIT_LD") != std::string::npos);
    CHECK(what.find("XAck") != std::string::npos);
    CHECK(what.find("N3") != std::string::npos);
  }
}

TEST_CASE("token merge") {
  SUBCASE("appends own entry") {
    auto const d = token_merge(6, 60, Token{0, {{0, 65}}}, std::nullopt);
    auto const& t = std::get<Token>(d);
    CHECK(t.originator == 0);
    CHECK(t.entries == std::vector<TokenEntry>{{0, 65}, {6, 60}});
  }
  SUBCASE("drops a larger originator after a smaller one passed") {
    auto const d = token_merge(0, 63, Token{12, {{12, 68}}}, ClusterId{0});
    CHECK(std::holds_alternative<TokenDrop>(d));
  }
  SUBCASE("duplicate own entry is a contract violation") {
    CHECK_THROWS_AS(token_merge(6, 60, Token{0, {{0, 65}, {6, 60}}}, std::nullopt), ProtocolError);
  }
}

TEST_CASE("coordinator polls on timeout and ignores later expiries") {
  auto c = make_coordinator(ring_config(0, {0, 6}, 3));
  auto r = coordinator_step(std::move(c), Timeout{});
  CHECK(r.state.phase == CoordPhase::WaitPoll);
  CHECK(only<Poll>(r.out).size() == 3);
  auto again = coordinator_step(r.state, Timeout{});
  CHECK(again.out.empty());
  CHECK(again.state.phase == CoordPhase::WaitPoll);
}

TEST_CASE("coordinator at capacity with no token ends the round") {
  auto r = polled(make_coordinator(ring_config(6, {0, 6, 12, 18}, 6)), {10, 9, 11, 10, 10, 10});
  // local 8 -> 7 runs first; the round closes once its ack is back
  auto const cmds = only<XferCmd>(r.out);
  REQUIRE(cmds.size() == 1);
  CHECK(r.state.cluster_total == 60);
  CHECK(r.state.phase == CoordPhase::WaitInAck);
  auto const tag = std::get<XferCmd>(cmds[0].msg).tag;
  auto done = step(std::move(r.state), ActorId::node_process(7), NodeAck{tag});
  CHECK(done.state.phase == CoordPhase::Idle);
  CHECK(only<End>(done.out).size() == 6);
  CHECK(only<NodeAck>(done.out).at(0).dst == ActorId::node_process(8));

  auto flat = polled(make_coordinator(ring_config(6, {0, 6}, 2)), {10, 10});
  CHECK(flat.state.phase == CoordPhase::Idle);
  CHECK(only<End>(flat.out).size() == 2);
  CHECK(only<Token>(flat.out).empty());
}

TEST_CASE("high coordinator originates a token; ring behaviour") {
  auto c0 = polled(make_coordinator(ring_config(0, {0, 6, 12, 18}, 6)), {12, 8, 15, 10, 8, 10});
  CHECK(c0.state.phase == CoordPhase::WaitXferMes);
  auto const tokens = only<Token>(c0.out);
  REQUIRE(tokens.size() == 1);
  CHECK(tokens[0].dst == ActorId::coordinator(6));
  CHECK(std::get<Token>(tokens[0].msg).entries == std::vector<TokenEntry>{{0, 63}});

  // coordinator 12's token is dropped at 0
  auto drop = step(c0.state, ActorId::coordinator(18), Token{12, {{12, 68}, {18, 48}}});
  CHECK(drop.out.empty());

  // own token returning with every entry triggers the load vector
  Token full{0, {{0, 63}, {6, 60}, {12, 68}, {18, 48}}};
  auto back = step(c0.state, ActorId::coordinator(18), full);
  auto const vecs = only<LoadVector>(back.out);
  CHECK(vecs.size() == 4);
  CHECK(vecs[0].dst == ActorId::coordinator(0));
}

TEST_CASE("idle coordinator woken by a token polls, then forwards it") {
  auto c = make_coordinator(ring_config(6, {0, 6}, 2));
  auto r = step(std::move(c), ActorId::coordinator(0), Token{0, {{0, 25}}});
  CHECK(r.state.phase == CoordPhase::WaitPoll);
  CHECK(r.state.token_received);
  r = step(std::move(r.state), ActorId::node_process(6), NodeStateReport{5});
  r = step(std::move(r.state), ActorId::node_process(7), NodeStateReport{6});
  auto const fwd = only<Token>(r.out);
  REQUIRE(fwd.size() == 1);
  CHECK(fwd[0].dst == ActorId::coordinator(0));
  CHECK(std::get<Token>(fwd[0].msg).entries == std::vector<TokenEntry>{{0, 25}, {6, 11}});
  CHECK(r.state.phase == CoordPhase::WaitXferMes);
}

TEST_CASE("coordinator with no global transfer ends on the load vector") {
  auto c = make_coordinator(ring_config(6, {0, 6, 12}, 2));
  auto r = step(std::move(c), ActorId::coordinator(0), Token{0, {{0, 25}}});
  r = step(std::move(r.state), ActorId::node_process(6), NodeStateReport{10});
  r = step(std::move(r.state), ActorId::node_process(7), NodeStateReport{10});
  REQUIRE(r.state.phase == CoordPhase::WaitXferMes);
  // cluster 12 absorbs everything, cluster 6 is untouched
  auto v = step(std::move(r.state), ActorId::coordinator(0), LoadVector{{{0, 25}, {6, 20}, {12, 10}}});
  CHECK(v.state.phase == CoordPhase::Idle);
  CHECK(only<End>(v.out).size() == 2);
}

TEST_CASE("sender and receiver sides of an inter-cluster transfer") {
  // sender: cluster 0 of two nodes at [13, 10]
  auto s = polled(make_coordinator(ring_config(0, {0, 2}, 2)), {13, 10});
  REQUIRE(s.state.phase == CoordPhase::WaitXferMes);
  LoadVector const lv{{{0, 23}, {2, 15}}};
  auto sv = step(std::move(s.state), ActorId::coordinator(0), lv);
  CHECK(sv.state.phase == CoordPhase::WaitLd);
  auto const cmd = only<XferCmd>(sv.out).at(0);
  auto const& x = std::get<XferCmd>(cmd.msg);
  CHECK(x.remote);
  CHECK(x.dest == 2);
  CHECK(x.amount == 3);
  CHECK(cmd.dst == ActorId::node_process(0));

  auto sl = step(std::move(sv.state), ActorId::node_process(0), CoordLoad{3, 2, x.tag});
  CHECK(sl.state.phase == CoordPhase::WaitXAck);
  auto const xl = only<XLoad>(sl.out).at(0);
  CHECK(xl.dst == ActorId::coordinator(2));

  // receiver: cluster 2 of two nodes at [9, 6]
  auto rcv = make_coordinator(ring_config(2, {0, 2}, 2));
  auto rr = step(std::move(rcv), ActorId::coordinator(0), Token{0, {{0, 23}}});
  rr = step(std::move(rr.state), ActorId::node_process(2), NodeStateReport{9});
  rr = step(std::move(rr.state), ActorId::node_process(3), NodeStateReport{6});
  rr = step(std::move(rr.state), ActorId::coordinator(0), lv);
  CHECK(rr.state.phase == CoordPhase::WaitXLd);
  rr = step(std::move(rr.state), ActorId::coordinator(0), std::get<XLoad>(xl.msg));
  CHECK(rr.state.phase == CoordPhase::WaitInAck);
  auto const loads = only<NodeLoad>(rr.out);
  REQUIRE(loads.size() == 2);
  CHECK(loads[0].dst == ActorId::node_process(2));
  CHECK(std::get<NodeLoad>(loads[0].msg).amount == 1);
  CHECK(std::get<NodeLoad>(loads[1].msg).amount == 2);
  rr = step(std::move(rr.state), ActorId::node_process(2), NodeAck{x.tag});
  CHECK(only<XAck>(rr.out).empty());
  rr = step(std::move(rr.state), ActorId::node_process(3), NodeAck{x.tag});
  CHECK(only<XAck>(rr.out).size() == 1);
  CHECK(rr.state.phase == CoordPhase::Idle);

  auto done = step(std::move(sl.state), ActorId::coordinator(2), XAck{x.tag});
  CHECK(only<NodeAck>(done.out).at(0).dst == ActorId::node_process(0));
  CHECK(done.state.phase == CoordPhase::Idle);
  CHECK(only<End>(done.out).size() == 2);
}

TEST_CASE("coordinator rejects out-of-table events") {
  auto c = make_coordinator(ring_config(0, {0, 6}, 2));
  CHECK_THROWS_AS(step(c, ActorId::node_process(1), NodeStateReport{3}), ProtocolError);
  CHECK_THROWS_AS(step(c, ActorId::coordinator(6), LoadVector{}), ProtocolError);
  CHECK_THROWS_AS(step(c, ActorId::coordinator(6), XAck{{}}), ProtocolError);
  CHECK_THROWS_AS(step(c, ActorId::node_process(1), Poll{}), ProtocolError);
  CHECK_THROWS_AS(make_coordinator(CoordinatorConfig{}), std::invalid_argument);
}
