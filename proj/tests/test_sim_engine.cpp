#include "hlb/sim_engine.hpp"
#include "hlb/scenario.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <map>
#include <random>
#include <sstream>
#include <vector>

using namespace hlb;

namespace {

Thresholds const kT{5, 10};

std::vector<std::size_t> sizes(std::initializer_list<std::size_t> s) { return s; }

} // namespace

TEST_CASE("topology construction") {
  auto const t = build_topology(sizes({6, 6, 6, 6}));
  CHECK(t.ring == std::vector<ClusterId>{0, 6, 12, 18});
  CHECK(t.ring_next(18) == 0);
  CHECK(t.ring_next(6) == 12);
  CHECK(t.node_count() == 24);
  CHECK(t.cluster_index_of(20) == 3);

  auto const one = build_topology(sizes({1}));
  CHECK(one.clusters.at(0).members == std::vector<NodeId>{0});
  CHECK(one.ring_next(0) == 0);

  auto const mixed = build_topology(sizes({3, 4, 6}));
  CHECK(mixed.node_count() == 13);
  CHECK(mixed.ring == std::vector<ClusterId>{0, 3, 7});

  CHECK_THROWS_AS(build_topology(std::vector<std::size_t>{}), std::invalid_argument);
  CHECK_THROWS_AS(build_topology(sizes({2, 0})), std::invalid_argument);
  CHECK_THROWS_AS(build_topology(sizes({2}), 0), std::invalid_argument);
}

TEST_CASE("link latencies") {
  auto const t = build_topology(sizes({3, 3}), 2, 3, LoadTransferModel::constant(7));
  auto const c0 = ActorId::coordinator(0);
  auto const c3 = ActorId::coordinator(3);
  auto const n1 = ActorId::node_process(1);
  auto const n2 = ActorId::node_process(2);
  CHECK(t.latency({c0, n1, Poll{}}) == 6);
  CHECK(t.latency({c0, ActorId::node_process(0), Poll{}}) == 6);
  CHECK(t.latency({c0, c3, Token{}}) == 3);
  CHECK(t.latency({c0, c0, LoadVector{}}) == 0);
  CHECK(t.latency({n1, n2, NodeLoad{4, {}}}) == 7);
  CHECK(t.latency({n1, c0, CoordLoad{4, 3, {}}}) == 7);
  CHECK(t.latency({c0, c3, XLoad{4, 0, {}}}) == 0);
  CHECK(t.latency({c3, ActorId::node_process(4), NodeLoad{4, {}}}) == 0);
  auto const lin = build_topology(sizes({2}), 1, 1, LoadTransferModel::linear(2));
  CHECK(lin.latency({ActorId::node_process(0), ActorId::node_process(1), NodeLoad{5, {}}}) == 10);
}

TEST_CASE("balanced system only polls and ends") {
  auto const t = build_topology(sizes({3, 3}));
  std::vector<LoadValue> const loads(6, 10);
  auto const r = run_round(t, loads, kT);
  CHECK(r.final_loads == loads);
  CHECK(r.transfers.empty());
  CHECK(r.counts.of("Token") == 0);
  CHECK(r.counts.of("Poll") == 6);
  CHECK(r.counts.of("NodeState") == 6);
  CHECK(r.counts.of("End") == 6);
  CHECK(r.counts.total() == 18);
}

TEST_CASE("single local transfer critical path") {
  auto const t = build_topology(sizes({2}), 1, 1, LoadTransferModel::constant(2));
  auto const r = run_round(t, std::vector<LoadValue>{13, 5}, kT);
  REQUIRE(r.transfers.size() == 1);
  CHECK(r.transfers[0].critical_path == 6);
  CHECK(r.transfers[0].critical_path == oracle::local_path(1, 1, 2));
  CHECK_FALSE(r.transfers[0].remote);
  CHECK(r.final_loads == std::vector<LoadValue>{10, 8});
}

TEST_CASE("single remote transfer critical path") {
  for (SimTime d : {1, 2, 3}) {
    for (SimTime T : {1, 2, 5}) {
      for (SimTime L : {0, 4}) {
        auto const t = build_topology(sizes({1, 1}), d, T, LoadTransferModel::constant(L));
        auto const r = run_round(t, std::vector<LoadValue>{13, 5}, kT);
        REQUIRE(r.transfers.size() == 1);
        CHECK(r.transfers[0].remote);
        CHECK(r.transfers[0].critical_path == oracle::remote_path(d, T, L));
      }
    }
  }
}

TEST_CASE("degenerate single cluster") {
  auto const t = build_topology(sizes({3}));
  auto const r = run_round(t, std::vector<LoadValue>{20, 12, 11}, kT);
  CHECK(r.counts.token_hops == 0);
  CHECK(r.counts.of("LoadVector") == 1);
  CHECK(cluster_total(r.final_loads) == 43);
}

TEST_CASE("one high cluster on a ring of four: one circuit and one broadcast") {
  auto const t = build_topology(sizes({2, 2, 2, 2}));
  auto const r = run_round(t, std::vector<LoadValue>{14, 10, 9, 9, 8, 8, 10, 10}, kT);
  CHECK(r.counts.token_hops == 4);
  CHECK(r.counts.load_vector_msgs == 4);
  CHECK(r.counts.global_knowledge() == 8);
  CHECK(r.final_loads == oracle::two_level({14, 10, 9, 9, 8, 8, 10, 10}, {2, 2, 2, 2}, 10));
}

TEST_CASE("links deliver in send order and traces are reproducible") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 60; ++i) {
    ScenarioConfig c;
    c.cluster_sizes = split_clusters(12 + rng() % 40, 3 + rng() % 4);
    c.d = 1 + static_cast<SimTime>(rng() % 2);
    c.T = 1 + static_cast<SimTime>(rng() % 3);
    c.load_time = LoadTransferModel::linear(static_cast<SimTime>(rng() % 2));
    GeneratorSpec g;
    g.profile = static_cast<Profile>(rng() % 3);
    g.seed = rng();
    c.generator = g;
    auto const a = run_scenario(c);
    auto const b = run_scenario(c);
    std::ostringstream ta;
    std::ostringstream tb;
    write_trace(ta, a.trace);
    write_trace(tb, b.trace);
    CHECK(ta.str() == tb.str());

    // per link, payload-carrying deliveries and acks keep their tag order
    std::map<std::pair<ActorId, ActorId>, SimTime> last;
    for (auto const& rec : a.trace) {
      if (!rec.msg) continue;
      auto& l = last[{rec.src, rec.dst}];
      CHECK(rec.at >= l);
      l = rec.at;
    }
    CHECK(message_counts(a.trace) == a.counts);
    CHECK(cluster_total(a.final_loads) == cluster_total(a.initial_loads));
  }
}

TEST_CASE("event ceiling aborts with the live states") {
  auto const t = build_topology(sizes({3, 3}));
  RoundOptions o;
  o.event_ceiling = 10;
  try {
    run_round(t, std::vector<LoadValue>{15, 4, 10, 15, 15, 15}, kT, o);
    FAIL("no abort");
  } catch (SimulationError const& e) {
    CHECK(e.kind == SimulationError::Kind::EventCeiling);
    CHECK_FALSE(e.live_states.empty());
    CHECK(e.live_states.find("WAIT_POLL") != std::string::npos);
  }
}

TEST_CASE("input validation") {
  auto const t = build_topology(sizes({2}));
  CHECK_THROWS_AS(run_round(t, std::vector<LoadValue>{1}, kT), std::invalid_argument);
  CHECK_THROWS_AS(run_round(t, std::vector<LoadValue>{1, -1}, kT), std::invalid_argument);
  RoundOptions o;
  o.timer_offsets = {0, 1};
  CHECK_THROWS_AS(run_round(t, std::vector<LoadValue>{1, 2}, kT, o), std::invalid_argument);
}

TEST_CASE("staggered timers still quiesce and conserve") {
  auto const t = build_topology(sizes({4, 4, 4}), 1, 2, LoadTransferModel::constant(3));
  std::vector<LoadValue> const loads{15, 15, 14, 9, 12, 3, 4, 6, 20, 11, 10, 10};
  for (SimTime a = 0; a < 6; ++a) {
    for (SimTime b = 0; b < 6; ++b) {
      RoundOptions o;
      o.timer_offsets = {a, b, 5 - a};
      auto const r = run_round(t, loads, kT, o);
      CHECK(r.final_loads == oracle::two_level(loads, {4, 4, 4}, 10));
    }
  }
}
