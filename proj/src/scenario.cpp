#include "hlb/scenario.hpp"

#include <json.hpp>

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

namespace hlb {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(Profile p) {
  switch (p) {
  case Profile::Low: return "low";
  case Profile::Medium: return "medium";
  case Profile::High: return "high";
  }
  return "?";
}

Profile parse_profile(std::string_view s) {
  if (s == "low") return Profile::Low;
  if (s == "medium") return Profile::Medium;
  if (s == "high") return Profile::High;
  throw ConfigError("unknown profile '" + std::string(s) + "' (expected low, medium or high)");
}

ClassWeights default_weights(Profile p) {
  switch (p) {
  case Profile::Low: return {0.6, 0.3, 0.1};
  case Profile::Medium: return {0.2, 0.6, 0.2};
  case Profile::High: return {0.1, 0.3, 0.6};
  }
  return {1.0, 0.0, 0.0};
}

void validate(GeneratorSpec const& g) {
  auto const& iv = g.intervals;
  if (iv[0] < 0) {
    throw ConfigError("generator.intervals: bounds must be non-negative");
  }
  for (std::size_t c = 0; c < 3; ++c) {
    if (iv[2 * c] > iv[2 * c + 1]) {
      throw ConfigError("generator.intervals: interval " + std::to_string(c) + " has lo > hi");
    }
    if (c > 0 && iv[2 * c] <= iv[2 * c - 1]) {
      throw ConfigError("generator.intervals: intervals overlap or are out of order");
    }
  }
  if (g.weights) {
    double sum = 0.0;
    for (auto const w : *g.weights) {
      if (!(w >= 0.0)) {
        throw ConfigError("generator.weights: weights must be non-negative");
      }
      sum += w;
    }
    if (!(sum > 0.0)) {
      throw ConfigError("generator.weights: weights must not all be zero");
    }
  }
}

namespace {

// Portable draws: the engine's output sequence is fixed by the standard, the
// library's distributions are not.

std::uint64_t bounded(std::mt19937_64& g, std::uint64_t n) {
  std::uint64_t const threshold = (0 - n) % n;
  for (;;) {
    auto const x = g();
    if (x >= threshold) {
      return x % n;
    }
  }
}

double unit(std::mt19937_64& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

std::size_t weighted(std::mt19937_64& g, ClassWeights const& w) {
  double const total = w[0] + w[1] + w[2];
  double const u = unit(g) * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc) {
      return i;
    }
  }
  // rounding at the top end; fall back to the last class with weight
  for (std::size_t i = w.size(); i-- > 0;) {
    if (w[i] > 0.0) {
      return i;
    }
  }
  return 0;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

} // namespace

std::vector<LoadValue> generate_loads(GeneratorSpec const& g, std::size_t n_actors) {
  validate(g);
  auto const w = g.weights.value_or(default_weights(g.profile));
  std::mt19937_64 rng(g.seed);
  std::vector<LoadValue> loads;
  loads.reserve(n_actors);
  for (std::size_t i = 0; i < n_actors; ++i) {
    auto const c = weighted(rng, w);
    auto const lo = g.intervals[2 * c];
    auto const hi = g.intervals[2 * c + 1];
    auto const span = static_cast<std::uint64_t>(hi - lo) + 1;
    loads.push_back(lo + static_cast<LoadValue>(bounded(rng, span)));
  }
  return loads;
}

std::size_t ScenarioConfig::n_actors() const {
  std::size_t n = 0;
  for (auto const s : cluster_sizes) {
    n += s;
  }
  return n;
}

// -- JSON reading ---------------------------------------------------------------

namespace {

std::string join(std::string const& path, std::string const& key) {
  return path.empty() ? key : path + "." + key;
}

template <typename T>
T field_as(json const& j, std::string const& path) {
  try {
    return j.get<T>();
  } catch (json::exception const&) {
    throw ConfigError("field '" + path + "': unexpected type " + std::string(j.type_name()));
  }
}

void expect_object(json const& j, std::string const& path) {
  if (!j.is_object()) {
    throw ConfigError(
      "field '" + (path.empty() ? std::string("<root>") : path) + "': expected an object"
    );
  }
}

void reject_unknown(
  json const& j, std::string const& path, std::initializer_list<std::string_view> known
) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
      throw ConfigError("field '" + join(path, it.key()) + "': unknown field");
    }
  }
}

std::int64_t integer(json const& j, std::string const& path) {
  if (!j.is_number_integer()) {
    throw ConfigError("field '" + path + "': expected an integer");
  }
  return j.get<std::int64_t>();
}

std::uint64_t non_negative(json const& j, std::string const& path) {
  if (j.is_number_unsigned()) {
    return j.get<std::uint64_t>();
  }
  auto const v = integer(j, path);
  if (v < 0) {
    throw ConfigError("field '" + path + "': must be non-negative");
  }
  return static_cast<std::uint64_t>(v);
}

std::int64_t positive(json const& j, std::string const& path) {
  auto const v = integer(j, path);
  if (v <= 0) {
    throw ConfigError("field '" + path + "': must be positive");
  }
  return v;
}

template <typename F>
auto array_of(json const& j, std::string const& path, F&& each) {
  if (!j.is_array()) {
    throw ConfigError("field '" + path + "': expected an array");
  }
  std::vector<decltype(each(j, path))> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(each(j[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (json::parse_error const& e) {
    std::size_t line = 1;
    std::size_t col = 1;
    auto const upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < upto; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string what = e.what();
    if (auto p = what.find("parse error"); p != std::string::npos) {
      what = what.substr(p);
    }
    throw ConfigError(
      "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what
    );
  }
}

Thresholds read_thresholds(json const& j, std::string const& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"low_max", "medium_max"});
  Thresholds t;
  if (!j.contains("low_max") || !j.contains("medium_max")) {
    throw ConfigError("field '" + path + "': needs low_max and medium_max");
  }
  t.low_max = integer(j["low_max"], join(path, "low_max"));
  t.medium_max = integer(j["medium_max"], join(path, "medium_max"));
  try {
    t.validate();
  } catch (std::invalid_argument const& e) {
    throw ConfigError("field '" + path + "': " + e.what());
  }
  return t;
}

LoadTransferModel read_load_transfer(json const& j, std::string const& path) {
  expect_object(j, path);
  if (!j.contains("model")) {
    throw ConfigError("field '" + join(path, "model") + "': missing");
  }
  auto const model = field_as<std::string>(j["model"], join(path, "model"));
  if (model == "constant") {
    reject_unknown(j, path, {"model", "value"});
    auto const v = j.contains("value") ? non_negative(j["value"], join(path, "value")) : 0;
    return LoadTransferModel::constant(static_cast<SimTime>(v));
  }
  if (model == "linear") {
    reject_unknown(j, path, {"model", "per_unit"});
    if (!j.contains("per_unit")) {
      throw ConfigError("field '" + join(path, "per_unit") + "': missing");
    }
    return LoadTransferModel::linear(
      static_cast<SimTime>(non_negative(j["per_unit"], join(path, "per_unit")))
    );
  }
  throw ConfigError(
    "field '" + join(path, "model") + "': expected \"constant\" or \"linear\", got \"" + model +
    "\""
  );
}

Intervals read_intervals(json const& j, std::string const& path) {
  auto const v = array_of(j, path, integer);
  if (v.size() != 6) {
    throw ConfigError("field '" + path + "': expected 6 bounds");
  }
  Intervals iv{};
  std::copy(v.begin(), v.end(), iv.begin());
  return iv;
}

GeneratorSpec read_generator(json const& j, std::string const& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"profile", "intervals", "seed", "weights"});
  GeneratorSpec g;
  if (!j.contains("profile")) {
    throw ConfigError("field '" + join(path, "profile") + "': missing");
  }
  try {
    g.profile = parse_profile(field_as<std::string>(j["profile"], join(path, "profile")));
  } catch (ConfigError const& e) {
    throw ConfigError("field '" + join(path, "profile") + "': " + e.what());
  }
  if (j.contains("intervals")) {
    g.intervals = read_intervals(j["intervals"], join(path, "intervals"));
  }
  if (j.contains("seed")) {
    g.seed = non_negative(j["seed"], join(path, "seed"));
  }
  if (j.contains("weights")) {
    auto const w = array_of(j["weights"], join(path, "weights"), [](json const& e, std::string const& p) {
      if (!e.is_number()) {
        throw ConfigError("field '" + p + "': expected a number");
      }
      return e.get<double>();
    });
    if (w.size() != 3) {
      throw ConfigError("field '" + join(path, "weights") + "': expected 3 weights");
    }
    g.weights = ClassWeights{w[0], w[1], w[2]};
  }
  validate(g);
  return g;
}

std::vector<std::size_t> read_sizes(json const& j, std::string const& path) {
  auto const v = array_of(j, path, positive);
  if (v.empty()) {
    throw ConfigError("field '" + path + "': must not be empty");
  }
  return {v.begin(), v.end()};
}

} // namespace

ScenarioConfig parse_config(std::string_view text) {
  auto const j = parse_json(text);
  expect_object(j, "");
  reject_unknown(
    j, "",
    {"cluster_sizes", "thresholds", "d", "T", "load_transfer", "loads", "generator", "timers",
     "event_ceiling"}
  );
  ScenarioConfig c;
  if (!j.contains("cluster_sizes")) {
    throw ConfigError("field 'cluster_sizes': missing");
  }
  c.cluster_sizes = read_sizes(j["cluster_sizes"], "cluster_sizes");
  if (j.contains("thresholds")) {
    c.thresholds = read_thresholds(j["thresholds"], "thresholds");
  }
  if (j.contains("d")) {
    c.d = positive(j["d"], "d");
  }
  if (j.contains("T")) {
    c.T = positive(j["T"], "T");
  }
  if (j.contains("load_transfer")) {
    c.load_time = read_load_transfer(j["load_transfer"], "load_transfer");
  }

  if (j.contains("loads") == j.contains("generator")) {
    throw ConfigError("field 'loads': give exactly one of 'loads' and 'generator'");
  }
  if (j.contains("loads")) {
    auto const loads = array_of(j["loads"], "loads", [](json const& e, std::string const& p) {
      return static_cast<LoadValue>(non_negative(e, p));
    });
    if (loads.size() != c.n_actors()) {
      throw ConfigError(
        "field 'loads': " + std::to_string(loads.size()) + " loads for " +
        std::to_string(c.n_actors()) + " actors"
      );
    }
    c.loads = loads;
  } else {
    c.generator = read_generator(j["generator"], "generator");
  }

  if (j.contains("timers")) {
    auto const& t = j["timers"];
    if (t.is_string()) {
      if (t.get<std::string>() != "simultaneous") {
        throw ConfigError("field 'timers': expected \"simultaneous\" or an array of offsets");
      }
    } else {
      auto const offsets = array_of(t, "timers", non_negative);
      if (offsets.size() != c.cluster_sizes.size()) {
        throw ConfigError("field 'timers': expected one offset per cluster");
      }
      for (auto const o : offsets) {
        c.timer_offsets.push_back(static_cast<SimTime>(o));
      }
    }
  }
  if (j.contains("event_ceiling")) {
    c.event_ceiling = static_cast<std::uint64_t>(positive(j["event_ceiling"], "event_ceiling"));
  }
  return c;
}

namespace {

std::string read_file(std::string const& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(path + ": cannot open");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

template <typename F>
auto with_path(std::string const& path, F&& f) {
  try {
    return f(read_file(path));
  } catch (ConfigError const& e) {
    std::string const what = e.what();
    if (what.rfind(path, 0) == 0) {
      throw;
    }
    throw ConfigError(path + ": " + what);
  }
}

ojson thresholds_json(Thresholds const& t) {
  return ojson{{"low_max", t.low_max}, {"medium_max", t.medium_max}};
}

ojson load_transfer_json(LoadTransferModel const& m) {
  if (m.kind == LoadTransferModel::Kind::Linear) {
    return ojson{{"model", "linear"}, {"per_unit", m.value}};
  }
  return ojson{{"model", "constant"}, {"value", m.value}};
}

} // namespace

ScenarioConfig load_config(std::string const& path) {
  return with_path(path, [](std::string const& text) { return parse_config(text); });
}

std::string emit_config(ScenarioConfig const& c) {
  ojson j;
  j["cluster_sizes"] = c.cluster_sizes;
  j["thresholds"] = thresholds_json(c.thresholds);
  j["d"] = c.d;
  j["T"] = c.T;
  j["load_transfer"] = load_transfer_json(c.load_time);
  if (c.loads) {
    j["loads"] = *c.loads;
  }
  if (c.generator) {
    auto const& g = *c.generator;
    ojson gj;
    gj["profile"] = std::string(to_string(g.profile));
    gj["intervals"] = g.intervals;
    gj["seed"] = g.seed;
    if (g.weights) {
      gj["weights"] = *g.weights;
    }
    j["generator"] = gj;
  }
  if (c.timer_offsets.empty()) {
    j["timers"] = "simultaneous";
  } else {
    j["timers"] = c.timer_offsets;
  }
  j["event_ceiling"] = c.event_ceiling;
  return j.dump(2) + "\n";
}

std::vector<LoadValue> initial_loads(ScenarioConfig const& c) {
  if (c.loads) {
    return *c.loads;
  }
  if (c.generator) {
    return generate_loads(*c.generator, c.n_actors());
  }
  throw ConfigError("scenario has neither loads nor a generator");
}

RoundResult run_scenario(ScenarioConfig const& c, bool record_trace) {
  auto const loads = initial_loads(c);
  auto const topo = build_topology(c.cluster_sizes, c.d, c.T, c.load_time);
  RoundOptions opts;
  opts.timer_offsets = c.timer_offsets;
  opts.event_ceiling = c.event_ceiling;
  opts.record_trace = record_trace;
  return run_round(topo, loads, c.thresholds, opts);
}

// -- sweeps ---------------------------------------------------------------------

namespace {

std::vector<std::size_t> read_actors(json const& j, std::string const& path) {
  if (j.is_object()) {
    reject_unknown(j, path, {"from", "to", "step"});
    for (auto const* k : {"from", "to", "step"}) {
      if (!j.contains(k)) {
        throw ConfigError("field '" + join(path, k) + "': missing");
      }
    }
    auto const from = positive(j["from"], join(path, "from"));
    auto const to = positive(j["to"], join(path, "to"));
    auto const step = positive(j["step"], join(path, "step"));
    std::vector<std::size_t> out;
    for (auto a = from; a <= to; a += step) {
      out.push_back(static_cast<std::size_t>(a));
    }
    return out;
  }
  auto const v = array_of(j, path, positive);
  return {v.begin(), v.end()};
}

SweepGrid read_grid(json const& j, std::string const& path) {
  SweepGrid g;
  for (auto const* k : {"actors", "cluster_sizes", "profiles"}) {
    if (!j.contains(k)) {
      throw ConfigError("field '" + join(path, k) + "': missing");
    }
  }
  g.actors = read_actors(j["actors"], join(path, "actors"));
  g.cluster_sizes = read_sizes(j["cluster_sizes"], join(path, "cluster_sizes"));
  g.profiles = array_of(j["profiles"], join(path, "profiles"), [](json const& e, std::string const& p) {
    try {
      return parse_profile(field_as<std::string>(e, p));
    } catch (ConfigError const& err) {
      throw ConfigError("field '" + p + "': " + err.what());
    }
  });
  return g;
}

} // namespace

SweepSpec parse_sweep(std::string_view text) {
  auto const j = parse_json(text);
  expect_object(j, "");
  reject_unknown(
    j, "",
    {"grids", "actors", "cluster_sizes", "profiles", "seeds", "thresholds", "intervals", "d",
     "T", "load_transfer", "event_ceiling"}
  );
  SweepSpec s;
  bool const inline_grid =
    j.contains("actors") || j.contains("cluster_sizes") || j.contains("profiles");
  if (j.contains("grids") && inline_grid) {
    throw ConfigError("field 'grids': give either 'grids' or top-level grid keys, not both");
  }
  if (j.contains("grids")) {
    s.grids = array_of(j["grids"], "grids", [](json const& g, std::string const& p) {
      expect_object(g, p);
      reject_unknown(g, p, {"actors", "cluster_sizes", "profiles"});
      return read_grid(g, p);
    });
  } else if (inline_grid) {
    s.grids.push_back(read_grid(j, ""));
  }
  if (j.contains("seeds")) {
    s.seeds = array_of(j["seeds"], "seeds", non_negative);
    if (s.seeds.empty()) {
      throw ConfigError("field 'seeds': must not be empty");
    }
  }
  if (j.contains("thresholds")) {
    s.thresholds = read_thresholds(j["thresholds"], "thresholds");
  }
  if (j.contains("intervals")) {
    s.intervals = read_intervals(j["intervals"], "intervals");
    GeneratorSpec probe;
    probe.intervals = s.intervals;
    try {
      validate(probe);
    } catch (ConfigError const& e) {
      throw ConfigError(std::string("field 'intervals': ") + e.what());
    }
  }
  if (j.contains("d")) {
    s.d = positive(j["d"], "d");
  }
  if (j.contains("T")) {
    s.T = positive(j["T"], "T");
  }
  if (j.contains("load_transfer")) {
    s.load_time = read_load_transfer(j["load_transfer"], "load_transfer");
  }
  if (j.contains("event_ceiling")) {
    s.event_ceiling = static_cast<std::uint64_t>(positive(j["event_ceiling"], "event_ceiling"));
  }
  return s;
}

SweepSpec load_sweep(std::string const& path) {
  return with_path(path, [](std::string const& text) { return parse_sweep(text); });
}

std::string emit_sweep(SweepSpec const& s) {
  ojson j;
  auto grids = ojson::array();
  for (auto const& g : s.grids) {
    ojson gj;
    gj["actors"] = g.actors;
    gj["cluster_sizes"] = g.cluster_sizes;
    auto profiles = ojson::array();
    for (auto const p : g.profiles) {
      profiles.push_back(std::string(to_string(p)));
    }
    gj["profiles"] = profiles;
    grids.push_back(gj);
  }
  j["grids"] = grids;
  j["seeds"] = s.seeds;
  j["thresholds"] = thresholds_json(s.thresholds);
  j["intervals"] = s.intervals;
  j["d"] = s.d;
  j["T"] = s.T;
  j["load_transfer"] = load_transfer_json(s.load_time);
  j["event_ceiling"] = s.event_ceiling;
  return j.dump(2) + "\n";
}

SweepSpec default_sweep() {
  SweepSpec s;
  std::vector<std::size_t> actors;
  for (std::size_t a = 12; a <= 120; a += 12) {
    actors.push_back(a);
  }
  s.grids.push_back(SweepGrid{actors, {4}, {Profile::Low, Profile::Medium, Profile::High}});
  s.grids.push_back(SweepGrid{actors, {3, 4, 6}, {Profile::Medium}});
  return s;
}

std::vector<SweepCell> sweep_cells(SweepSpec const& s) {
  std::vector<SweepCell> cells;
  for (std::size_t gi = 0; gi < s.grids.size(); ++gi) {
    auto const& g = s.grids[gi];
    for (auto const p : g.profiles) {
      for (auto const size : g.cluster_sizes) {
        for (auto const a : g.actors) {
          SweepCell c;
          c.actors = a;
          c.cluster_size = size;
          c.profile = p;
          c.scenario_id = "g" + std::to_string(gi) + "-" + std::string(to_string(p)) + "-c" +
                          std::to_string(size) + "-n" + std::to_string(a);
          cells.push_back(std::move(c));
        }
      }
    }
  }
  return cells;
}

std::vector<std::size_t> split_clusters(std::size_t n_actors, std::size_t cluster_size) {
  if (n_actors == 0 || cluster_size == 0) {
    throw std::invalid_argument("split_clusters needs positive actor count and cluster size");
  }
  std::vector<std::size_t> sizes(n_actors / cluster_size, cluster_size);
  if (n_actors % cluster_size != 0) {
    sizes.push_back(n_actors % cluster_size);
  }
  return sizes;
}

std::uint64_t derive_seed(std::string_view scenario_id, std::uint64_t seed) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto const ch : scenario_id) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h ^ splitmix64(seed));
}

ScenarioConfig cell_config(SweepSpec const& s, SweepCell const& cell, std::uint64_t seed) {
  ScenarioConfig c;
  c.cluster_sizes = split_clusters(cell.actors, cell.cluster_size);
  c.thresholds = s.thresholds;
  c.d = s.d;
  c.T = s.T;
  c.load_time = s.load_time;
  c.event_ceiling = s.event_ceiling;
  GeneratorSpec g;
  g.profile = cell.profile;
  g.intervals = s.intervals;
  g.seed = derive_seed(cell.scenario_id, seed);
  c.generator = g;
  return c;
}

SweepOutcome run_sweep(SweepSpec const& s, unsigned jobs) {
  auto const cells = sweep_cells(s);
  auto const n_seeds = s.seeds.size();
  auto const n_runs = cells.size() * n_seeds;

  std::vector<std::optional<SweepRow>> rows(n_runs);
  std::vector<std::string> errors(n_runs);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < n_runs; i = next++) {
      auto const& cell = cells[i / n_seeds];
      auto const seed = s.seeds[i % n_seeds];
      try {
        auto const cfg = cell_config(s, cell, seed);
        auto const round = run_scenario(cfg, false);
        auto const m = summarize(round, cfg.thresholds);
        if (cluster_total(round.final_loads) != cluster_total(round.initial_loads) ||
            m.high_count_after > m.high_count_before) {
          throw SimulationError(
            SimulationError::Kind::Invariant, "row violates conservation or high count", ""
          );
        }
        rows[i] = to_row(
          cell.scenario_id, std::to_string(seed), cfg.cluster_sizes.size(),
          std::string(to_string(cell.profile)), m
        );
      } catch (std::exception const& e) {
        errors[i] = e.what();
      }
    }
  };

  unsigned const threads = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n_runs)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
    for (auto& t : pool) {
      t.join();
    }
  }

  SweepOutcome out;
  for (std::size_t ci = 0; ci < cells.size(); ++ci) {
    std::vector<SweepRow> ok;
    for (std::size_t si = 0; si < n_seeds; ++si) {
      auto const i = ci * n_seeds + si;
      if (rows[i]) {
        ok.push_back(*rows[i]);
        out.rows.push_back(*rows[i]);
      } else {
        out.failures.push_back(
          cells[ci].scenario_id + " " + std::to_string(s.seeds[si]) + ": " + errors[i]
        );
      }
    }
    if (!ok.empty()) {
      out.rows.push_back(mean_row(ok));
    }
  }
  return out;
}

// -- commands -------------------------------------------------------------------

namespace {

bool write_file(std::string const& path, std::string const& content, std::ostream& err) {
  std::ofstream os(path, std::ios::binary);
  os << content;
  os.close();
  if (!os) {
    err << "error: cannot write " << path << "\n";
    return false;
  }
  return true;
}

bool ends_with(std::string const& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

int cmd_run(
  std::string const& config_path, std::string const& out_path,
  std::optional<std::string> const& trace_path, std::ostream& err
) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
    (void)initial_loads(cfg);
  } catch (ConfigError const& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  RoundResult round;
  try {
    round = run_scenario(cfg, trace_path.has_value());
  } catch (SimulationError const& e) {
    err << "simulation failed: " << e.what() << "\n";
    if (!e.live_states.empty()) {
      err << "live actors:\n" << e.live_states;
    }
    return kExitFailure;
  } catch (std::exception const& e) {
    err << "simulation failed: " << e.what() << "\n";
    return kExitFailure;
  }

  if (trace_path) {
    std::ostringstream trace;
    write_trace(trace, round.trace);
    if (!write_file(*trace_path, trace.str(), err)) {
      return kExitFailure;
    }
  }
  auto const m = summarize(round, cfg.thresholds);
  return write_file(out_path, metrics_to_json(m) + "\n", err) ? kExitOk : kExitFailure;
}

int cmd_sweep(
  std::string const& spec_path, std::string const& out_path, unsigned jobs, std::ostream& err
) {
  SweepSpec spec;
  try {
    spec = load_sweep(spec_path);
  } catch (ConfigError const& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto const outcome = run_sweep(spec, jobs);
  std::ostringstream os;
  if (ends_with(out_path, ".json")) {
    os << rows_to_json(outcome.rows) << "\n";
  } else {
    write_csv_header(os);
    for (auto const& r : outcome.rows) {
      write_csv_row(os, r);
    }
  }
  if (!write_file(out_path, os.str(), err)) {
    return kExitFailure;
  }
  for (auto const& f : outcome.failures) {
    err << "failed: " << f << "\n";
  }
  return outcome.failures.empty() ? kExitOk : kExitFailure;
}

} // namespace hlb
