#pragma once

#include "hlb/load_model.hpp"
#include "hlb/metrics.hpp"
#include "hlb/sim_engine.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hlb {

/// Malformed or inconsistent configuration. The message names the field
/// (dotted path) or the line of a JSON syntax error.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Profile : std::uint8_t { Low, Medium, High };

std::string_view to_string(Profile p);
Profile parse_profile(std::string_view s);

/// Inclusive bounds: low [0]..[1], medium [2]..[3], high [4]..[5].
using Intervals = std::array<LoadValue, 6>;
/// Probabilities of drawing a LOW, MEDIUM or HIGH load.
using ClassWeights = std::array<double, 3>;

inline constexpr Intervals kDefaultIntervals{5, 9, 10, 14, 15, 20};
inline constexpr Thresholds kDefaultThresholds{9, 14};

ClassWeights default_weights(Profile p);

struct GeneratorSpec {
  Profile profile = Profile::Medium;
  Intervals intervals = kDefaultIntervals;
  std::uint64_t seed = 0;
  /// Profile default when unset.
  std::optional<ClassWeights> weights;

  friend bool operator==(GeneratorSpec const&, GeneratorSpec const&) = default;
};

/// Throws ConfigError unless intervals are ordered, non-overlapping and
/// non-negative and weights are non-negative with a positive sum.
void validate(GeneratorSpec const& g);

/// One load per actor: a class drawn by weight, then a uniform integer from
/// that class's interval. Identical for identical specs on every platform.
std::vector<LoadValue> generate_loads(GeneratorSpec const& g, std::size_t n_actors);

struct ScenarioConfig {
  std::vector<std::size_t> cluster_sizes;
  Thresholds thresholds = kDefaultThresholds;
  SimTime d = 1;
  SimTime T = 1;
  LoadTransferModel load_time;
  /// Exactly one of loads and generator is set.
  std::optional<std::vector<LoadValue>> loads;
  std::optional<GeneratorSpec> generator;
  /// Empty: every timer fires at t = 0.
  std::vector<SimTime> timer_offsets;
  std::uint64_t event_ceiling = 1'000'000;

  std::size_t n_actors() const;
  friend bool operator==(ScenarioConfig const&, ScenarioConfig const&) = default;
};

ScenarioConfig parse_config(std::string_view json_text);
ScenarioConfig load_config(std::string const& path);
std::string emit_config(ScenarioConfig const& c);

/// Explicit loads, or the generator's output.
std::vector<LoadValue> initial_loads(ScenarioConfig const& c);

RoundResult run_scenario(ScenarioConfig const& c, bool record_trace = true);

// -- sweeps -----------------------------------------------------------------------

struct SweepGrid {
  std::vector<std::size_t> actors;
  std::vector<std::size_t> cluster_sizes;
  std::vector<Profile> profiles;

  friend bool operator==(SweepGrid const&, SweepGrid const&) = default;
};

struct SweepSpec {
  std::vector<SweepGrid> grids;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  Thresholds thresholds = kDefaultThresholds;
  Intervals intervals = kDefaultIntervals;
  SimTime d = 1;
  SimTime T = 1;
  LoadTransferModel load_time;
  std::uint64_t event_ceiling = 1'000'000;

  friend bool operator==(SweepSpec const&, SweepSpec const&) = default;
};

SweepSpec parse_sweep(std::string_view json_text);
SweepSpec load_sweep(std::string const& path);
std::string emit_sweep(SweepSpec const& s);

/// Actor counts 12..120 in steps of 12 with 4-node clusters under every
/// profile, then the medium profile over cluster sizes 3, 4 and 6.
SweepSpec default_sweep();

/// One configuration of a sweep, run once per seed.
struct SweepCell {
  std::string scenario_id;
  std::size_t actors = 0;
  std::size_t cluster_size = 0;
  Profile profile = Profile::Medium;
};

std::vector<SweepCell> sweep_cells(SweepSpec const& s);

/// n actors split into clusters of the given size; a remainder forms one
/// smaller trailing cluster.
std::vector<std::size_t> split_clusters(std::size_t n_actors, std::size_t cluster_size);

/// Generator seed for one (cell, seed) pair.
std::uint64_t derive_seed(std::string_view scenario_id, std::uint64_t seed);

ScenarioConfig cell_config(SweepSpec const& s, SweepCell const& cell, std::uint64_t seed);

struct SweepOutcome {
  /// Per-seed rows of each cell followed by the cell's mean row.
  std::vector<SweepRow> rows;
  /// "scenario_id seed: reason" for every failed run.
  std::vector<std::string> failures;
};

/// Runs every cell and seed on up to `jobs` threads. Row order depends only
/// on the spec.
SweepOutcome run_sweep(SweepSpec const& s, unsigned jobs = 1);

// -- command entry points ---------------------------------------------------------

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

int cmd_run(
  std::string const& config_path, std::string const& out_path,
  std::optional<std::string> const& trace_path, std::ostream& err
);

/// Writes JSON rows when out_path ends in ".json", CSV otherwise.
int cmd_sweep(
  std::string const& spec_path, std::string const& out_path, unsigned jobs, std::ostream& err
);

} // namespace hlb
