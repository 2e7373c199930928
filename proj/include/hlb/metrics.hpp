#pragma once

#include "hlb/load_model.hpp"
#include "hlb/sim_engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hlb {

struct Metrics {
  std::size_t n_actors = 0;
  std::size_t high_count_before = 0;
  std::size_t high_count_after = 0;
  double high_pct_before = 0.0;
  double high_pct_after = 0.0;
  double std_dev_before = 0.0;
  double std_dev_after = 0.0;
  std::map<std::string, std::uint64_t> message_counts;
  std::uint64_t messages_total = 0;
  std::uint64_t token_hops = 0;
  std::uint64_t global_knowledge_msgs = 0;
  SimTime sim_time = 0;
  std::size_t transfers_completed = 0;
};

std::size_t count_high(std::span<LoadValue const> loads, Thresholds const& t);

/// Population standard deviation. Throws std::invalid_argument on empty input.
double std_dev(std::span<LoadValue const> loads);

struct Theorem2Check {
  std::size_t k = 0;
  std::uint64_t token_hops = 0;
  std::uint64_t global_knowledge_msgs = 0;
  std::uint64_t token_bound = 0;
  std::uint64_t total_bound = 0;
  /// Cost of every coordinator broadcasting its total, k(k-1).
  std::uint64_t broadcast_cost = 0;
  bool token_ok = false;
  bool total_ok = false;
  /// Token hops at most half the broadcast cost.
  bool ratio_ok = false;

  bool passed() const { return token_ok && total_ok && ratio_ok; }
};

Theorem2Check check_theorem2(MessageCounts const& counts, std::size_t k);
Theorem2Check check_theorem2(RoundResult const& round, std::size_t k);

/// Elapsed time to acquire global load knowledge against ((2k-1)+d)T. A
/// round without a completed token circuit passes vacuously.
struct Corollary2Check {
  std::optional<SimTime> elapsed;
  SimTime bound = 0;

  bool passed() const { return !elapsed || *elapsed <= bound; }
};

Corollary2Check check_corollary2(RoundResult const& round, std::size_t k, SimTime d, SimTime T);

struct Theorem3Check {
  SimTime lower = 0;
  SimTime upper = 0;
  std::vector<TransferTiming> transfers;
  /// Transfers whose critical path falls outside [lower, upper].
  std::vector<TransferTiming> outside;

  bool passed() const { return !transfers.empty() && outside.empty(); }
};

/// Bounds use the model's cost of each transfer's own amount, so linear
/// models are checked per transfer; lower/upper report the bounds for L = cost(1).
Theorem3Check check_theorem3(
  RoundResult const& round, SimTime d, SimTime T, LoadTransferModel const& L
);

Metrics summarize(
  std::span<LoadValue const> before, std::span<LoadValue const> after,
  std::span<TraceRecord const> trace, Thresholds const& t
);

/// Same as the trace form but reads counts and transfers straight off the
/// round, so it works with tracing disabled.
Metrics summarize(RoundResult const& round, Thresholds const& t);

// -- output ----------------------------------------------------------------------

struct SweepRow {
  std::string scenario_id;
  /// Seed as decimal text, or "mean" for averaged rows.
  std::string seed;
  std::size_t n_actors = 0;
  std::size_t n_clusters = 0;
  std::string profile;
  double high_before = 0.0;
  double high_after = 0.0;
  double pct_before = 0.0;
  double pct_after = 0.0;
  double std_before = 0.0;
  double std_after = 0.0;
  double token_hops = 0.0;
  double msgs_total = 0.0;
  double sim_time = 0.0;
};

SweepRow to_row(
  std::string scenario_id, std::string seed, std::size_t n_clusters, std::string profile,
  Metrics const& m
);

/// Field-wise mean of rows sharing one configuration; seed becomes "mean".
SweepRow mean_row(std::span<SweepRow const> rows);

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, SweepRow const& r);
std::string rows_to_json(std::span<SweepRow const> rows);
std::string metrics_to_json(Metrics const& m);

} // namespace hlb
