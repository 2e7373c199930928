#include "hlb/metrics.hpp"

#include <json.hpp>

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace hlb {

std::size_t count_high(std::span<LoadValue const> loads, Thresholds const& t) {
  std::size_t n = 0;
  for (auto const l : loads) {
    if (classify_node_load(l, t) == LoadClass::High) {
      ++n;
    }
  }
  return n;
}

double std_dev(std::span<LoadValue const> loads) {
  if (loads.empty()) {
    throw std::invalid_argument("std_dev of an empty load vector");
  }
  // two passes over exact integer sums keep equal inputs at exactly 0
  long double sum = 0;
  for (auto const l : loads) {
    sum += static_cast<long double>(l);
  }
  long double const n = static_cast<long double>(loads.size());
  long double const mean = sum / n;
  long double sq = 0;
  for (auto const l : loads) {
    long double const dev = static_cast<long double>(l) - mean;
    sq += dev * dev;
  }
  return static_cast<double>(std::sqrt(sq / n));
}

Theorem2Check check_theorem2(MessageCounts const& counts, std::size_t k) {
  Theorem2Check c;
  c.k = k;
  c.token_hops = counts.token_hops;
  c.global_knowledge_msgs = counts.global_knowledge();
  c.broadcast_cost = k * (k == 0 ? 0 : k - 1);
  c.token_bound = c.broadcast_cost / 2;
  c.total_bound = k + c.token_bound;
  c.token_ok = c.token_hops <= c.token_bound;
  c.total_ok = c.global_knowledge_msgs <= c.total_bound;
  c.ratio_ok = 2 * c.token_hops <= c.broadcast_cost;
  return c;
}

Theorem2Check check_theorem2(RoundResult const& round, std::size_t k) {
  return check_theorem2(round.counts, k);
}

Corollary2Check check_corollary2(RoundResult const& round, std::size_t k, SimTime d, SimTime T) {
  Corollary2Check c;
  c.bound = (2 * static_cast<SimTime>(k) - 1 + d) * T;
  if (round.first_token_sent && round.last_vector_delivered) {
    c.elapsed = *round.last_vector_delivered - *round.first_token_sent;
  }
  return c;
}

Theorem3Check check_theorem3(
  RoundResult const& round, SimTime d, SimTime T, LoadTransferModel const& L
) {
  Theorem3Check c;
  c.lower = 4 * d * T + L.cost(1);
  c.upper = (4 * d + 1) * T + L.cost(1);
  c.transfers = round.transfers;
  for (auto const& tr : round.transfers) {
    auto const l = L.cost(tr.amount);
    if (tr.critical_path < 4 * d * T + l || tr.critical_path > (4 * d + 1) * T + l) {
      c.outside.push_back(tr);
    }
  }
  return c;
}

namespace {

Metrics load_metrics(
  std::span<LoadValue const> before, std::span<LoadValue const> after, Thresholds const& t
) {
  if (before.size() != after.size()) {
    throw std::invalid_argument("before and after load vectors differ in length");
  }
  Metrics m;
  m.n_actors = before.size();
  m.high_count_before = count_high(before, t);
  m.high_count_after = count_high(after, t);
  auto const n = static_cast<double>(before.size());
  m.high_pct_before = before.empty() ? 0.0 : static_cast<double>(m.high_count_before) / n;
  m.high_pct_after = before.empty() ? 0.0 : static_cast<double>(m.high_count_after) / n;
  m.std_dev_before = before.empty() ? 0.0 : std_dev(before);
  m.std_dev_after = after.empty() ? 0.0 : std_dev(after);
  return m;
}

void fill_counts(Metrics& m, MessageCounts const& c) {
  for (std::size_t i = 0; i < c.by_variant.size(); ++i) {
    m.message_counts[std::string(variant_name(i))] = c.by_variant[i];
  }
  m.messages_total = c.total();
  m.token_hops = c.token_hops;
  m.global_knowledge_msgs = c.global_knowledge();
}

} // namespace

Metrics summarize(
  std::span<LoadValue const> before, std::span<LoadValue const> after,
  std::span<TraceRecord const> trace, Thresholds const& t
) {
  auto m = load_metrics(before, after, t);
  fill_counts(m, message_counts(trace));
  for (auto const& r : trace) {
    m.sim_time = std::max(m.sim_time, r.at);
    // an ack reaching a node process closes one commanded transfer
    if (r.msg && std::holds_alternative<NodeAck>(*r.msg) && r.dst.role == Role::Node) {
      ++m.transfers_completed;
    }
  }
  return m;
}

Metrics summarize(RoundResult const& round, Thresholds const& t) {
  auto m = load_metrics(round.initial_loads, round.final_loads, t);
  fill_counts(m, round.counts);
  m.sim_time = round.sim_time;
  m.transfers_completed = round.transfers.size();
  return m;
}

SweepRow to_row(
  std::string scenario_id, std::string seed, std::size_t n_clusters, std::string profile,
  Metrics const& m
) {
  SweepRow r;
  r.scenario_id = std::move(scenario_id);
  r.seed = std::move(seed);
  r.n_actors = m.n_actors;
  r.n_clusters = n_clusters;
  r.profile = std::move(profile);
  r.high_before = static_cast<double>(m.high_count_before);
  r.high_after = static_cast<double>(m.high_count_after);
  r.pct_before = m.high_pct_before;
  r.pct_after = m.high_pct_after;
  r.std_before = m.std_dev_before;
  r.std_after = m.std_dev_after;
  r.token_hops = static_cast<double>(m.token_hops);
  r.msgs_total = static_cast<double>(m.messages_total);
  r.sim_time = static_cast<double>(m.sim_time);
  return r;
}

SweepRow mean_row(std::span<SweepRow const> rows) {
  if (rows.empty()) {
    throw std::invalid_argument("mean of no rows");
  }
  SweepRow out = rows.front();
  out.seed = "mean";
  double const n = static_cast<double>(rows.size());
  auto avg = [&](double SweepRow::*f) {
    double s = 0.0;
    for (auto const& r : rows) {
      s += r.*f;
    }
    out.*f = s / n;
  };
  avg(&SweepRow::high_before);
  avg(&SweepRow::high_after);
  avg(&SweepRow::pct_before);
  avg(&SweepRow::pct_after);
  avg(&SweepRow::std_before);
  avg(&SweepRow::std_after);
  avg(&SweepRow::token_hops);
  avg(&SweepRow::msgs_total);
  avg(&SweepRow::sim_time);
  return out;
}

void write_csv_header(std::ostream& os) {
  os << "scenario_id,seed,n_actors,n_clusters,profile,high_before,high_after,pct_before,"
        "pct_after,std_before,std_after,token_hops,msgs_total,sim_time\n";
}

void write_csv_row(std::ostream& os, SweepRow const& r) {
  std::ostringstream line;
  line << std::fixed << std::setprecision(6);
  line << r.scenario_id << ',' << r.seed << ',' << r.n_actors << ',' << r.n_clusters << ','
       << r.profile << ',' << r.high_before << ',' << r.high_after << ',' << r.pct_before << ','
       << r.pct_after << ',' << r.std_before << ',' << r.std_after << ',' << r.token_hops << ','
       << r.msgs_total << ',' << r.sim_time << '\n';
  os << line.str();
}

std::string rows_to_json(std::span<SweepRow const> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (auto const& r : rows) {
    arr.push_back({
      {"scenario_id", r.scenario_id},
      {"seed", r.seed},
      {"n_actors", r.n_actors},
      {"n_clusters", r.n_clusters},
      {"profile", r.profile},
      {"high_before", r.high_before},
      {"high_after", r.high_after},
      {"pct_before", r.pct_before},
      {"pct_after", r.pct_after},
      {"std_before", r.std_before},
      {"std_after", r.std_after},
      {"token_hops", r.token_hops},
      {"msgs_total", r.msgs_total},
      {"sim_time", r.sim_time},
    });
  }
  return arr.dump(2);
}

std::string metrics_to_json(Metrics const& m) {
  nlohmann::ordered_json j;
  j["n_actors"] = m.n_actors;
  j["high_count_before"] = m.high_count_before;
  j["high_count_after"] = m.high_count_after;
  j["high_pct_before"] = m.high_pct_before;
  j["high_pct_after"] = m.high_pct_after;
  j["std_dev_before"] = m.std_dev_before;
  j["std_dev_after"] = m.std_dev_after;
  j["message_counts"] = m.message_counts;
  j["messages_total"] = m.messages_total;
  j["token_hops"] = m.token_hops;
  j["global_knowledge_msgs"] = m.global_knowledge_msgs;
  j["sim_time"] = m.sim_time;
  j["transfers_completed"] = m.transfers_completed;
  return j.dump(2);
}

} // namespace hlb
