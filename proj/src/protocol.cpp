#include "hlb/protocol.hpp"

#include <algorithm>
#include <iterator>

namespace hlb {

namespace {

[[noreturn]] void violation(
  std::string const& actor, std::string_view state, std::string_view variant,
  std::string_view detail = {}
) {
  std::string msg = "unexpected event: " + actor + " in state " + std::string(state) +
                    " received " + std::string(variant);
  if (!detail.empty()) {
    msg += " (" + std::string(detail) + ")";
  }
  throw ProtocolError(msg);
}

} // namespace

std::string_view input_name(Input const& in) {
  if (auto const* env = std::get_if<Envelope>(&in)) {
    return variant_name(env->msg);
  }
  return "Timeout";
}

std::string_view to_string(NodePhase p) {
  switch (p) {
  case NodePhase::Idle: return "IDLE";
  case NodePhase::WaitXfer: return "WAIT_XFER";
  case NodePhase::WaitLd: return "WAIT_LD";
  case NodePhase::WaitAck: return "WAIT_ACK";
  }
  return "?";
}

std::string_view to_string(CoordPhase p) {
  switch (p) {
  case CoordPhase::Idle: return "IDLE";
  case CoordPhase::WaitPoll: return "WAIT_POLL";
  case CoordPhase::WaitXferMes: return "WAIT_XFER_MES";
  case CoordPhase::WaitLd: return "WAIT_LD";
  case CoordPhase::WaitXAck: return "WAIT_XACK";
  case CoordPhase::WaitXLd: return "WAIT_XLD";
  case CoordPhase::WaitInAck: return "WAIT_INACK";
  }
  return "?";
}

// -- node -------------------------------------------------------------------------

namespace {

void execute_command(NodeState& s, XferCmd const& cmd, std::vector<Envelope>& out) {
  auto const me = ActorId::node_process(s.self);
  if (cmd.amount <= 0 || cmd.amount > s.load) {
    violation(
      to_string(me), to_string(s.phase), "XferCmd",
      "amount " + std::to_string(cmd.amount) + " with load " + std::to_string(s.load)
    );
  }
  s.load -= cmd.amount;
  if (cmd.remote) {
    out.push_back(Envelope{
      me, ActorId::coordinator(s.coordinator), CoordLoad{cmd.amount, cmd.dest, cmd.tag}
    });
  } else {
    out.push_back(Envelope{me, ActorId::node_process(cmd.dest), NodeLoad{cmd.amount, cmd.tag}});
  }
  s.awaiting = cmd.tag;
  s.phase = NodePhase::WaitAck;
}

} // namespace

NodeStep node_step(NodeState s, Input const& in) {
  auto const me = ActorId::node_process(s.self);
  auto const coord = ActorId::coordinator(s.coordinator);
  auto const* env = std::get_if<Envelope>(&in);
  if (env == nullptr) {
    violation(to_string(me), to_string(s.phase), "Timeout");
  }
  if (env->dst != me) {
    violation(to_string(me), to_string(s.phase), variant_name(env->msg), "misaddressed");
  }
  auto const& msg = env->msg;
  auto const from_coord = env->src == coord;
  std::vector<Envelope> out;

  auto fail = [&](std::string_view detail = {}) {
    violation(to_string(me), to_string(s.phase), variant_name(msg), detail);
  };

  switch (s.phase) {
  case NodePhase::Idle:
    if (std::holds_alternative<Poll>(msg) && from_coord) {
      out.push_back(Envelope{me, coord, NodeStateReport{s.load}});
      if (s.load > s.thresholds.medium_max) {
        s.phase = NodePhase::WaitXfer;
      } else if (s.load < s.thresholds.medium_max) {
        s.phase = NodePhase::WaitLd;
      }
    } else if (std::holds_alternative<End>(msg) && from_coord) {
      // nodes exactly at medium_max went idle at poll time and still get the multicast
    } else {
      fail();
    }
    break;

  case NodePhase::WaitLd:
    if (auto const* load = std::get_if<NodeLoad>(&msg)) {
      if (load->amount <= 0) {
        fail("non-positive amount");
      }
      s.load += load->amount;
      out.push_back(Envelope{me, coord, NodeAck{load->tag}});
    } else if (std::holds_alternative<End>(msg) && from_coord) {
      s.phase = NodePhase::Idle;
    } else {
      fail();
    }
    break;

  case NodePhase::WaitXfer:
    if (auto const* cmd = std::get_if<XferCmd>(&msg); cmd && from_coord) {
      execute_command(s, *cmd, out);
    } else if (std::holds_alternative<End>(msg) && from_coord) {
      if (!s.pending_cmds.empty()) {
        fail("commands still queued");
      }
      s.phase = NodePhase::Idle;
    } else {
      fail();
    }
    break;

  case NodePhase::WaitAck:
    if (auto const* ack = std::get_if<NodeAck>(&msg); ack && from_coord) {
      if (!s.awaiting || *s.awaiting != ack->tag) {
        fail("ack for a transfer not in flight");
      }
      s.awaiting.reset();
      s.phase = NodePhase::WaitXfer;
      if (!s.pending_cmds.empty()) {
        auto next = s.pending_cmds.front();
        s.pending_cmds.pop_front();
        execute_command(s, next, out);
      }
    } else if (auto const* cmd = std::get_if<XferCmd>(&msg); cmd && from_coord) {
      s.pending_cmds.push_back(*cmd);
    } else {
      fail();
    }
    break;
  }
  return NodeStep{std::move(s), std::move(out)};
}

// -- token rule --------------------------------------------------------------------

TokenDecision token_merge(
  ClusterId own, LoadValue own_total, Token incoming, std::optional<ClusterId> smallest_seen
) {
  if (smallest_seen && incoming.originator >= *smallest_seen) {
    return TokenDrop{};
  }
  auto const dup = std::any_of(incoming.entries.begin(), incoming.entries.end(), [&](auto const& e) {
    return e.cluster == own;
  });
  if (dup) {
    throw ProtocolError(
      "token from originator " + std::to_string(incoming.originator) +
      " already carries an entry for cluster " + std::to_string(own)
    );
  }
  incoming.entries.push_back(TokenEntry{own, own_total});
  return incoming;
}

// -- coordinator -----------------------------------------------------------------

LoadValue CoordinatorState::capacity() const {
  return ClusterCapacity::of(cfg.members.size(), cfg.thresholds).cluster_medium_max;
}

bool CoordinatorState::is_high() const {
  auto const cap = ClusterCapacity::of(cfg.members.size(), cfg.thresholds);
  return classify_cluster_load(cluster_total, cap) == LoadClass::High;
}

CoordinatorState make_coordinator(CoordinatorConfig cfg) {
  if (cfg.members.empty() || cfg.members.front() != cfg.self) {
    throw std::invalid_argument("coordinator must be the first member of its cluster");
  }
  if (cfg.coordinators.size() != cfg.cluster_sizes.size()) {
    throw std::invalid_argument("coordinator directory and cluster sizes differ in length");
  }
  CoordinatorState s;
  s.cfg = std::move(cfg);
  return s;
}

namespace {

class CoordinatorMachine {
public:
  explicit CoordinatorMachine(CoordinatorState s) : s_(std::move(s)) {}

  CoordStep run(Input const& in) {
    if (std::holds_alternative<Timeout>(in)) {
      on_timeout();
    } else {
      auto const& env = std::get<Envelope>(in);
      if (env.dst != me()) {
        fail(variant_name(env.msg), "misaddressed");
      }
      dispatch(env);
    }
    return CoordStep{std::move(s_), std::move(out_)};
  }

private:
  ActorId me() const { return ActorId::coordinator(s_.cfg.self); }

  [[noreturn]] void fail(std::string_view variant, std::string_view detail = {}) const {
    violation(to_string(me()), to_string(s_.phase), variant, detail);
  }

  void send(ActorId dst, Message m) { out_.push_back(Envelope{me(), dst, std::move(m)}); }

  void multicast_members(Message const& m) {
    for (auto const n : s_.cfg.members) {
      send(ActorId::node_process(n), m);
    }
  }

  bool is_member(NodeId n) const {
    auto const& m = s_.cfg.members;
    return std::binary_search(m.begin(), m.end(), n);
  }

  std::size_t cluster_index(ClusterId c) const {
    auto const& cs = s_.cfg.coordinators;
    auto it = std::lower_bound(cs.begin(), cs.end(), c);
    if (it == cs.end() || *it != c) {
      throw ProtocolError("unknown cluster " + std::to_string(c));
    }
    return static_cast<std::size_t>(std::distance(cs.begin(), it));
  }

  TransferTag fresh_tag() { return TransferTag{s_.cfg.self, s_.next_seq++}; }

  // -- activation and polling

  void on_timeout() {
    if (s_.phase == CoordPhase::Idle && !s_.activated) {
      s_.activated = true;
      start_poll();
    }
    // otherwise this round is already under way (woken by a token) or over
  }

  void start_poll() {
    s_.member_loads.clear();
    s_.reports_pending = s_.cfg.members.size();
    s_.global_done = false;
    multicast_members(Poll{});
    s_.phase = CoordPhase::WaitPoll;
  }

  void on_report(Envelope const& env, NodeStateReport const& r) {
    auto const n = env.src.node;
    if (env.src.role != Role::Node || !is_member(n) || s_.member_loads.count(n)) {
      fail("NodeState", "duplicate or foreign report");
    }
    s_.member_loads[n] = r.load;
    if (--s_.reports_pending == 0) {
      poll_complete();
    }
  }

  void poll_complete() {
    auto const& members = s_.cfg.members;
    std::vector<LoadValue> loads;
    loads.reserve(members.size());
    for (auto const n : members) {
      loads.push_back(s_.member_loads.at(n));
    }

    auto const plan = local_balance_plan(loads, s_.cfg.thresholds);
    for (auto const& t : plan.transfers) {
      auto const tag = fresh_tag();
      s_.local_pending.emplace(tag.seq, members[t.from]);
      send(ActorId::node_process(members[t.from]), XferCmd{false, members[t.to], t.amount, tag});
    }
    // both parties already count at their end configuration
    for (std::size_t i = 0; i < members.size(); ++i) {
      s_.member_loads[members[i]] = plan.final_loads[i];
    }
    s_.cluster_total = cluster_total(plan.final_loads);

    auto held = std::move(s_.held_token);
    s_.held_token.reset();

    if (s_.is_high()) {
      if (held && held->originator < s_.cfg.self) {
        forward(std::move(*held));
      } else {
        originate();
      }
      s_.phase = CoordPhase::WaitXferMes;
    } else if (held && forward(std::move(*held))) {
      s_.phase = CoordPhase::WaitXferMes;
    } else {
      s_.global_done = true;
      finish_or_wait();
    }
  }

  // -- token circulation

  void originate() {
    s_.smallest_seen = s_.cfg.self;
    s_.awaiting_vector = true;
    send(
      ActorId::coordinator(s_.cfg.ring_next),
      Token{s_.cfg.self, {TokenEntry{s_.cfg.self, s_.cluster_total}}}
    );
  }

  /// Appends own entry and passes the token on; false when the token loses.
  bool forward(Token t) {
    auto decision = token_merge(s_.cfg.self, s_.cluster_total, std::move(t), s_.smallest_seen);
    if (std::holds_alternative<TokenDrop>(decision)) {
      return false;
    }
    auto& fwd = std::get<Token>(decision);
    s_.smallest_seen = fwd.originator;
    s_.awaiting_vector = true;
    send(ActorId::coordinator(s_.cfg.ring_next), std::move(fwd));
    return true;
  }

  bool loses(Token const& t) const { return s_.smallest_seen && t.originator >= *s_.smallest_seen; }

  void on_token(Token const& t) {
    switch (s_.phase) {
    case CoordPhase::Idle:
      if (loses(t)) {
        return;
      }
      s_.activated = true;
      s_.token_received = true;
      s_.held_token = t;
      start_poll();
      return;

    case CoordPhase::WaitPoll:
      if (loses(t)) {
        return;
      }
      s_.token_received = true;
      if (!s_.held_token || t.originator < s_.held_token->originator) {
        s_.held_token = t;
      }
      return;

    case CoordPhase::WaitXferMes:
      if (t.originator == s_.cfg.self) {
        if (s_.smallest_seen != s_.cfg.self) {
          fail("Token", "own token returned after a smaller one passed");
        }
        if (t.entries.size() != s_.cfg.coordinators.size()) {
          fail("Token", "returned token misses cluster entries");
        }
        LoadVector v{t.entries};
        for (auto const c : s_.cfg.coordinators) {
          send(ActorId::coordinator(c), v);
        }
        return;
      }
      forward(t);
      return;

    case CoordPhase::WaitInAck:
      if (!s_.awaiting_vector && s_.global_done && !s_.current_in) {
        // closing out local transfers without having joined any token yet
        if (forward(t)) {
          s_.token_received = true;
          s_.global_done = false;
          s_.phase = CoordPhase::WaitXferMes;
        }
        return;
      }
      [[fallthrough]];

    case CoordPhase::WaitLd:
    case CoordPhase::WaitXAck:
    case CoordPhase::WaitXLd:
      if (!loses(t)) {
        fail("Token", "smaller originator after the load vector");
      }
      return;
    }
  }

  // -- global phase

  void on_vector(LoadVector const& v) {
    if (s_.phase != CoordPhase::WaitXferMes || !s_.awaiting_vector) {
      fail("LoadVector");
    }
    s_.awaiting_vector = false;

    auto const k = s_.cfg.coordinators.size();
    if (v.entries.size() != k) {
      fail("LoadVector", "entry count differs from cluster count");
    }
    std::vector<LoadValue> totals(k, -1);
    for (auto const& e : v.entries) {
      auto const idx = cluster_index(e.cluster);
      if (totals[idx] >= 0) {
        fail("LoadVector", "duplicate cluster entry");
      }
      totals[idx] = e.total;
    }
    std::vector<ClusterCapacity> caps;
    caps.reserve(k);
    for (auto const size : s_.cfg.cluster_sizes) {
      caps.push_back(ClusterCapacity::of(size, s_.cfg.thresholds));
    }

    auto const plan = global_balance_plan(totals, caps);
    auto const self_idx = cluster_index(s_.cfg.self);
    std::vector<Outgoing<ClusterId>> outgoing;
    for (auto const& t : plan.transfers) {
      if (t.from == self_idx) {
        outgoing.push_back({s_.cfg.coordinators[t.to], t.amount});
      } else if (t.to == self_idx) {
        s_.expected_in[s_.cfg.coordinators[t.from]] += t.amount;
      }
    }

    if (!outgoing.empty()) {
      auto const& members = s_.cfg.members;
      std::vector<LoadValue> loads;
      for (auto const n : members) {
        loads.push_back(s_.member_loads.at(n));
      }
      auto const chunks =
        sender_assignment<ClusterId>(loads, s_.cfg.thresholds, std::span<Outgoing<ClusterId> const>(outgoing));
      for (auto const& c : chunks) {
        auto const donor = members[c.donor];
        s_.member_loads[donor] -= c.amount;
        s_.outgoing.push_back(OutgoingChunk{donor, c.dest, c.amount, fresh_tag()});
      }
      next_outgoing();
    } else if (!s_.queued_xloads.empty()) {
      auto first = s_.queued_xloads.front();
      s_.queued_xloads.pop_front();
      start_inbound(first);
    } else if (!s_.expected_in.empty()) {
      s_.phase = CoordPhase::WaitXLd;
    } else {
      s_.global_done = true;
      finish_or_wait();
    }
  }

  void next_outgoing() {
    if (s_.outgoing.empty()) {
      s_.current_out.reset();
      s_.global_done = true;
      finish_or_wait();
      return;
    }
    s_.current_out = s_.outgoing.front();
    s_.outgoing.pop_front();
    auto const& c = *s_.current_out;
    send(ActorId::node_process(c.donor), XferCmd{true, c.dest_cluster, c.amount, c.tag});
    s_.phase = CoordPhase::WaitLd;
  }

  void on_coord_load(Envelope const& env, CoordLoad const& l) {
    if (s_.phase != CoordPhase::WaitLd || !s_.current_out) {
      fail("CoordLoad");
    }
    auto const& c = *s_.current_out;
    if (env.src != ActorId::node_process(c.donor) || l.tag != c.tag || l.amount != c.amount ||
        l.dest_cluster != c.dest_cluster) {
      fail("CoordLoad", "does not match the commanded transfer");
    }
    send(ActorId::coordinator(c.dest_cluster), XLoad{l.amount, s_.cfg.self, l.tag});
    s_.phase = CoordPhase::WaitXAck;
  }

  void on_xack(XAck const& a) {
    if (s_.phase != CoordPhase::WaitXAck || !s_.current_out || a.tag != s_.current_out->tag) {
      fail("XAck");
    }
    send(ActorId::node_process(s_.current_out->donor), NodeAck{a.tag});
    next_outgoing();
  }

  void on_xload(XLoad const& x) {
    // a fast sender can beat the load vector here when ring hops are slow
    auto const early = s_.phase == CoordPhase::WaitXferMes && s_.awaiting_vector;
    if (early || (s_.phase == CoordPhase::WaitInAck && s_.current_in)) {
      s_.queued_xloads.push_back(x);
      return;
    }
    if (s_.phase != CoordPhase::WaitXLd) {
      fail("XLoad");
    }
    start_inbound(x);
  }

  void start_inbound(XLoad const& x) {
    auto it = s_.expected_in.find(x.sender_cluster);
    if (it == s_.expected_in.end() || x.amount <= 0 || x.amount > it->second) {
      fail("XLoad", "not covered by the global plan");
    }
    it->second -= x.amount;
    if (it->second == 0) {
      s_.expected_in.erase(it);
    }

    auto const& members = s_.cfg.members;
    std::vector<LoadValue> loads;
    for (auto const n : members) {
      loads.push_back(s_.member_loads.at(n));
    }
    auto const chunks = receiver_assignment(loads, s_.cfg.thresholds, x.amount);
    for (auto const& c : chunks) {
      auto const n = members[c.recipient];
      s_.member_loads[n] += c.amount;
      send(ActorId::node_process(n), NodeLoad{c.amount, x.tag});
    }
    s_.current_in = InboundDelivery{x.tag, x.sender_cluster, chunks.size()};
    s_.phase = CoordPhase::WaitInAck;
  }

  void on_node_ack(Envelope const& env, NodeAck const& a) {
    if (env.src.role != Role::Node || !is_member(env.src.node)) {
      fail("NodeAck", "from outside the cluster");
    }
    if (s_.phase == CoordPhase::Idle || s_.phase == CoordPhase::WaitPoll) {
      fail("NodeAck");
    }
    if (a.tag.issuer == s_.cfg.self) {
      auto it = s_.local_pending.find(a.tag.seq);
      if (it == s_.local_pending.end()) {
        fail("NodeAck", "unknown local transfer");
      }
      send(ActorId::node_process(it->second), NodeAck{a.tag});
      s_.local_pending.erase(it);
      if (s_.phase == CoordPhase::WaitInAck && s_.global_done && !s_.current_in) {
        finish_or_wait();
      }
      return;
    }

    if (s_.phase != CoordPhase::WaitInAck || !s_.current_in || s_.current_in->tag != a.tag) {
      fail("NodeAck", "no inbound delivery with this tag");
    }
    if (--s_.current_in->acks_left > 0) {
      return;
    }
    send(ActorId::coordinator(s_.current_in->sender), XAck{a.tag});
    s_.current_in.reset();
    if (!s_.queued_xloads.empty()) {
      auto next = s_.queued_xloads.front();
      s_.queued_xloads.pop_front();
      start_inbound(next);
    } else if (!s_.expected_in.empty()) {
      s_.phase = CoordPhase::WaitXLd;
    } else {
      s_.global_done = true;
      finish_or_wait();
    }
  }

  /// Ends the round once global work is over and every local ack is back;
  /// otherwise waits for the outstanding acks.
  void finish_or_wait() {
    if (!s_.local_pending.empty()) {
      s_.phase = CoordPhase::WaitInAck;
      return;
    }
    multicast_members(End{});
    s_.phase = CoordPhase::Idle;
    s_.token_received = false;
    s_.held_token.reset();
    s_.member_loads.clear();
  }

  void dispatch(Envelope const& env) {
    auto const& m = env.msg;
    if (auto const* r = std::get_if<NodeStateReport>(&m)) {
      if (s_.phase != CoordPhase::WaitPoll) {
        fail("NodeState");
      }
      on_report(env, *r);
    } else if (auto const* t = std::get_if<Token>(&m)) {
      if (env.src.role != Role::Coordinator) {
        fail("Token", "not from a coordinator");
      }
      on_token(*t);
    } else if (auto const* v = std::get_if<LoadVector>(&m)) {
      on_vector(*v);
    } else if (auto const* l = std::get_if<CoordLoad>(&m)) {
      on_coord_load(env, *l);
    } else if (auto const* x = std::get_if<XLoad>(&m)) {
      on_xload(*x);
    } else if (auto const* a = std::get_if<XAck>(&m)) {
      on_xack(*a);
    } else if (auto const* na = std::get_if<NodeAck>(&m)) {
      on_node_ack(env, *na);
    } else {
      fail(variant_name(m));
    }
  }

  CoordinatorState s_;
  std::vector<Envelope> out_;
};

} // namespace

CoordStep coordinator_step(CoordinatorState s, Input const& in) {
  return CoordinatorMachine{std::move(s)}.run(in);
}

} // namespace hlb
