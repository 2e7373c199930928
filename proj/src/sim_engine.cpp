#include "hlb/sim_engine.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <queue>
#include <sstream>

namespace hlb {

SimTime LoadTransferModel::cost(LoadValue amount) const {
  return kind == Kind::Constant ? value : value * amount;
}

std::size_t Topology::node_count() const {
  std::size_t n = 0;
  for (auto const& c : clusters) {
    n += c.members.size();
  }
  return n;
}

std::size_t Topology::cluster_index_of(NodeId node) const {
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    auto const& m = clusters[i].members;
    if (std::binary_search(m.begin(), m.end(), node)) {
      return i;
    }
  }
  throw std::out_of_range("node " + std::to_string(node) + " is in no cluster");
}

ClusterId Topology::ring_next(ClusterId c) const {
  auto it = std::find(ring.begin(), ring.end(), c);
  if (it == ring.end()) {
    throw std::out_of_range("coordinator " + std::to_string(c) + " is not on the ring");
  }
  ++it;
  return it == ring.end() ? ring.front() : *it;
}

SimTime Topology::latency(Envelope const& e) const {
  bool const src_coord = e.src.role == Role::Coordinator;
  bool const dst_coord = e.dst.role == Role::Coordinator;
  if (e.src == e.dst) {
    return 0;
  }
  if (src_coord && dst_coord) {
    if (auto const* x = std::get_if<XLoad>(&e.msg)) {
      (void)x;
      return 0;
    }
    return T;
  }
  if (auto const* l = std::get_if<NodeLoad>(&e.msg)) {
    return src_coord ? 0 : load_time.cost(l->amount);
  }
  if (auto const* l = std::get_if<CoordLoad>(&e.msg)) {
    return load_time.cost(l->amount);
  }
  return d * T;
}

Topology build_topology(
  std::span<std::size_t const> cluster_sizes, SimTime d, SimTime T, LoadTransferModel load_time
) {
  if (cluster_sizes.empty()) {
    throw std::invalid_argument("topology needs at least one cluster");
  }
  if (d < 1 || T <= 0 || load_time.value < 0) {
    throw std::invalid_argument("topology requires d >= 1, T > 0 and L >= 0");
  }
  Topology topo;
  topo.d = d;
  topo.T = T;
  topo.load_time = load_time;
  NodeId next = 0;
  for (auto const size : cluster_sizes) {
    if (size == 0) {
      throw std::invalid_argument("cluster sizes must be positive");
    }
    Cluster c;
    c.coordinator = next;
    for (std::size_t i = 0; i < size; ++i) {
      c.members.push_back(next++);
    }
    topo.ring.push_back(c.coordinator);
    topo.clusters.push_back(std::move(c));
  }
  return topo;
}

std::uint64_t MessageCounts::total() const {
  std::uint64_t n = 0;
  for (auto const c : by_variant) {
    n += c;
  }
  return n;
}

std::uint64_t MessageCounts::of(std::string_view variant) const {
  for (std::size_t i = 0; i < by_variant.size(); ++i) {
    if (variant_name(i) == variant) {
      return by_variant[i];
    }
  }
  throw std::invalid_argument("unknown message variant " + std::string(variant));
}

namespace {

void tally(MessageCounts& c, Envelope const& e) {
  ++c.by_variant[e.msg.index()];
  if (std::holds_alternative<Token>(e.msg) && e.src != e.dst) {
    ++c.token_hops;
  }
  if (std::holds_alternative<LoadVector>(e.msg)) {
    ++c.load_vector_msgs;
  }
}

std::optional<TransferTag> tag_of(Message const& m) {
  if (auto const* x = std::get_if<XferCmd>(&m)) return x->tag;
  if (auto const* x = std::get_if<NodeLoad>(&m)) return x->tag;
  if (auto const* x = std::get_if<CoordLoad>(&m)) return x->tag;
  if (auto const* x = std::get_if<XLoad>(&m)) return x->tag;
  if (auto const* x = std::get_if<NodeAck>(&m)) return x->tag;
  if (auto const* x = std::get_if<XAck>(&m)) return x->tag;
  return std::nullopt;
}

LoadValue payload_amount(Message const& m) {
  if (auto const* x = std::get_if<NodeLoad>(&m)) return x->amount;
  if (auto const* x = std::get_if<CoordLoad>(&m)) return x->amount;
  if (auto const* x = std::get_if<XLoad>(&m)) return x->amount;
  return 0;
}

struct Pending {
  SimTime at = 0;
  std::uint64_t seq = 0;
  bool timer = false;
  std::size_t timer_cluster = 0;
  SimTime sent_at = 0;
  Envelope env;

  bool operator>(Pending const& o) const {
    return at != o.at ? at > o.at : seq > o.seq;
  }
};

struct Chain {
  NodeId donor = 0;
  bool remote = false;
  LoadValue amount = 0;
  SimTime latency = 0;
  std::uint32_t messages = 0;
};

class Engine {
public:
  Engine(
    Topology const& topo, std::span<LoadValue const> loads, Thresholds const& t,
    RoundOptions const& opts
  )
      : topo_(topo), opts_(opts) {
    t.validate();
    if (loads.size() != topo.node_count()) {
      throw std::invalid_argument(
        "expected " + std::to_string(topo.node_count()) + " initial loads, got " +
        std::to_string(loads.size())
      );
    }
    if (!opts.timer_offsets.empty() && opts.timer_offsets.size() != topo.cluster_count()) {
      throw std::invalid_argument("timer schedule must give one instant per cluster");
    }

    result_.initial_loads.assign(loads.begin(), loads.end());
    nodes_.resize(loads.size());
    state_latency_.assign(loads.size(), 0);

    std::vector<ClusterId> coordinators;
    std::vector<std::size_t> sizes;
    for (auto const& c : topo.clusters) {
      coordinators.push_back(c.coordinator);
      sizes.push_back(c.members.size());
    }
    for (std::size_t ci = 0; ci < topo.clusters.size(); ++ci) {
      auto const& c = topo.clusters[ci];
      for (auto const n : c.members) {
        if (loads[n] < 0) {
          throw std::invalid_argument("initial loads must be non-negative");
        }
        auto& ns = nodes_[n];
        ns.self = n;
        ns.coordinator = c.coordinator;
        ns.thresholds = t;
        ns.load = loads[n];
        conserved_ += loads[n];
      }
      CoordinatorConfig cfg;
      cfg.self = c.coordinator;
      cfg.members = c.members;
      cfg.ring_next = topo.ring_next(c.coordinator);
      cfg.coordinators = coordinators;
      cfg.cluster_sizes = sizes;
      cfg.thresholds = t;
      coord_index_[c.coordinator] = ci;
      coords_.push_back(make_coordinator(std::move(cfg)));
    }
  }

  RoundResult run() {
    for (std::size_t ci = 0; ci < coords_.size(); ++ci) {
      Pending p;
      p.at = opts_.timer_offsets.empty() ? 0 : opts_.timer_offsets[ci];
      p.seq = seq_++;
      p.timer = true;
      p.timer_cluster = ci;
      auto const self = ActorId::coordinator(coords_[ci].cfg.self);
      p.env = Envelope{self, self, End{}};
      queue_.push(std::move(p));
    }

    while (!queue_.empty()) {
      auto ev = queue_.top();
      queue_.pop();
      now_ = ev.at;
      if (++result_.events > opts_.event_ceiling) {
        throw SimulationError(
          SimulationError::Kind::EventCeiling,
          "event ceiling of " + std::to_string(opts_.event_ceiling) + " reached at t=" +
            std::to_string(now_),
          live_states()
        );
      }
      dispatch(ev);
      check_conservation();
    }

    auto live = live_states();
    if (!live.empty() || in_flight_ != 0) {
      throw SimulationError(
        SimulationError::Kind::NotQuiescent, "event queue drained before every actor was IDLE",
        live
      );
    }

    result_.sim_time = now_;
    for (auto const& n : nodes_) {
      result_.final_loads.push_back(n.load);
    }
    return std::move(result_);
  }

private:
  void dispatch(Pending const& ev) {
    if (opts_.record_trace) {
      TraceRecord r{now_, ev.env.src, ev.env.dst, std::nullopt};
      if (!ev.timer) {
        r.msg = ev.env.msg;
      }
      result_.trace.push_back(std::move(r));
    }

    std::vector<Envelope> out;
    try {
      if (ev.timer) {
        auto step = coordinator_step(std::move(coords_[ev.timer_cluster]), Timeout{});
        coords_[ev.timer_cluster] = std::move(step.state);
        out = std::move(step.out);
      } else {
        on_delivery(ev);
        auto const& dst = ev.env.dst;
        if (dst.role == Role::Node) {
          auto step = node_step(std::move(nodes_.at(dst.node)), ev.env);
          nodes_[dst.node] = std::move(step.state);
          out = std::move(step.out);
        } else {
          auto const ci = coord_index_.at(dst.node);
          auto step = coordinator_step(std::move(coords_[ci]), ev.env);
          coords_[ci] = std::move(step.state);
          out = std::move(step.out);
        }
      }
    } catch (ProtocolError const& e) {
      throw ProtocolError("t=" + std::to_string(now_) + ": " + e.what());
    }

    for (auto& env : out) {
      send(std::move(env));
    }
  }

  void on_delivery(Pending const& ev) {
    auto const& env = ev.env;
    in_flight_ -= payload_amount(env.msg);
    SimTime const lat = ev.at - ev.sent_at;

    if (std::holds_alternative<LoadVector>(env.msg)) {
      result_.last_vector_delivered = now_;
    }

    if (std::holds_alternative<NodeStateReport>(env.msg)) {
      state_latency_[env.src.node] = lat;
    }
    auto const tag = tag_of(env.msg);
    if (!tag) {
      return;
    }
    auto& ch = chains_.at(*tag);
    auto const [base_lat, base_msgs] = sent_chain_.at(ev.seq);
    sent_chain_.erase(ev.seq);
    ch.latency = std::max(ch.latency, base_lat + lat);
    ch.messages = std::max(ch.messages, base_msgs + 1);

    // the donor receiving its ack closes the transfer
    if (std::holds_alternative<NodeAck>(env.msg) && env.dst.role == Role::Node &&
        env.dst.node == ch.donor) {
      result_.transfers.push_back(TransferTiming{
        *tag, ch.donor, ch.remote, ch.amount, topo_.load_time.cost(ch.amount), ch.latency,
        ch.messages, now_
      });
    }
  }

  void send(Envelope env) {
    tally(result_.counts, env);
    if (std::holds_alternative<Token>(env.msg) && !result_.first_token_sent) {
      result_.first_token_sent = now_;
    }
    in_flight_ += payload_amount(env.msg);

    Pending p;
    p.sent_at = now_;
    p.at = now_ + topo_.latency(env);
    auto& clock = link_clock_[{env.src, env.dst}];
    p.at = std::max(p.at, clock);
    clock = p.at;
    p.seq = seq_++;

    if (auto const tag = tag_of(env.msg)) {
      if (auto const* cmd = std::get_if<XferCmd>(&env.msg)) {
        auto const donor = env.dst.node;
        chains_[*tag] = Chain{donor, cmd->remote, cmd->amount, state_latency_[donor], 1};
      }
      auto const& ch = chains_.at(*tag);
      sent_chain_[p.seq] = {ch.latency, ch.messages};
    }
    p.env = std::move(env);
    queue_.push(std::move(p));
  }

  void check_conservation() {
    LoadValue sum = in_flight_;
    for (auto const& n : nodes_) {
      if (n.load < 0) {
        throw SimulationError(
          SimulationError::Kind::Invariant,
          "negative load on node " + std::to_string(n.self) + " at t=" + std::to_string(now_),
          live_states()
        );
      }
      sum += n.load;
    }
    // relayed payloads parked at a busy receiving coordinator
    for (auto const& c : coords_) {
      for (auto const& x : c.queued_xloads) {
        sum += x.amount;
      }
    }
    if (sum != conserved_) {
      throw SimulationError(
        SimulationError::Kind::Invariant,
        "load not conserved at t=" + std::to_string(now_) + ": " + std::to_string(sum) +
          " != " + std::to_string(conserved_),
        live_states()
      );
    }
  }

  std::string live_states() const {
    std::ostringstream os;
    for (auto const& c : coords_) {
      if (c.phase != CoordPhase::Idle) {
        os << to_string(ActorId::coordinator(c.cfg.self)) << ' ' << to_string(c.phase)
           << " total=" << c.cluster_total << " local_pending=" << c.local_pending.size()
           << " outgoing=" << c.outgoing.size() + (c.current_out ? 1 : 0)
           << " expected_in=" << c.expected_in.size() << '\n';
      }
    }
    for (auto const& n : nodes_) {
      if (n.phase != NodePhase::Idle) {
        os << to_string(ActorId::node_process(n.self)) << ' ' << to_string(n.phase)
           << " load=" << n.load << " queued=" << n.pending_cmds.size() << '\n';
      }
    }
    return os.str();
  }

  Topology const& topo_;
  RoundOptions const& opts_;

  std::vector<NodeState> nodes_;
  std::vector<CoordinatorState> coords_;
  std::map<ClusterId, std::size_t> coord_index_;

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue_;
  std::map<std::pair<ActorId, ActorId>, SimTime> link_clock_;
  std::uint64_t seq_ = 0;
  SimTime now_ = 0;

  LoadValue conserved_ = 0;
  LoadValue in_flight_ = 0;

  std::vector<SimTime> state_latency_;
  std::map<TransferTag, Chain> chains_;
  std::map<std::uint64_t, std::pair<SimTime, std::uint32_t>> sent_chain_;

  RoundResult result_;
};

} // namespace

RoundResult run_round(
  Topology const& topo, std::span<LoadValue const> initial_loads, Thresholds const& t,
  RoundOptions const& opts
) {
  return Engine{topo, initial_loads, t, opts}.run();
}

MessageCounts message_counts(std::span<TraceRecord const> trace) {
  MessageCounts c;
  for (auto const& r : trace) {
    if (r.msg) {
      tally(c, Envelope{r.src, r.dst, *r.msg});
    }
  }
  return c;
}

void write_trace(std::ostream& os, std::span<TraceRecord const> trace) {
  for (auto const& r : trace) {
    os << r.at << '\t' << to_string(r.src) << '\t' << to_string(r.dst) << '\t';
    if (r.msg) {
      os << variant_name(*r.msg) << '\t' << payload_summary(*r.msg);
    } else {
      os << "Timeout\t";
    }
    os << '\n';
  }
}

} // namespace hlb
