#pragma once

// Run configuration: JSON <-> RunConfig with strict key checking.
//
// A user document is merge-patched onto the preset named by its "scenario"
// key (default "custom"), then parsed. Every object key must be known; the
// result of to_json() is the fully resolved config and parses back to the
// same RunConfig.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "rdspot/analysis.hpp"
#include "rdspot/errors.hpp"
#include "rdspot/integrator.hpp"
#include "rdspot/perturb.hpp"

namespace rdspot {

using json = nlohmann::json;

struct OutputSpec {
  std::string dir;               // empty: keep results in memory only
  double analysis_period = 100;  // time between analysis frames
  double snapshot_period = 0;    // 0: only the initial and final snapshots
  bool series = true;
  bool events = true;
  bool tracks = true;
  bool snapshots = true;
  bool render = true;

  friend bool operator==(const OutputSpec&, const OutputSpec&) = default;
};

/// Upper ends of the linear gray maps used by render and live frames.
struct Palette {
  double b_max = 0.5;
  double c_max = 0.5;
  double p_max = 20.0;

  double max_for(Species s) const {
    switch (s) {
      case Species::A: return 1.0;
      case Species::B: return b_max;
      case Species::C: return c_max;
      case Species::P: return p_max;
    }
    return 1.0;
  }
  friend bool operator==(const Palette&, const Palette&) = default;
};

struct AnalysisSpec {
  SpotConfig spots;
  TrackerConfig tracker;
  double velocity_window = 500.0;
  // Tracks tailed in at least this fraction of their frames count as tailed.
  double tailed_track_fraction = 0.5;
};

struct CataclysmSchedule {
  CataclysmSpec spec;
  double t_start = 0.0;  // first event at the first multiple of period after this
};

struct SweepAxis {
  std::string param;
  double min = 0.0;
  double max = 0.0;
  int n = 2;

  double value(int i) const {
    return min + (max - min) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
};

struct SweepSpec {
  std::vector<SweepAxis> axes;
  double extinction_b_max = 1e-6;
  // b-mass variance is taken over frames with t >= fraction * t_end.
  double variance_from = 0.5;
};

struct SessionSpec {
  int steps_per_frame = 20;
  double fps = 30.0;  // 0: as fast as possible
  int frame_side = 256;
  std::size_t max_pending_commands = 1024;
};

struct RunConfig {
  std::string scenario = "custom";
  GridSpec grid;
  ModelParams params = GrayScottParams{};
  double dt = 1.0;
  InitSpec init;
  std::vector<ScheduledEvent> strokes;  // pipette strokes only
  std::optional<CataclysmSchedule> cataclysm;
  double t_end = 10000.0;
  std::vector<std::uint64_t> seeds{1};
  std::vector<Zone> zones;
  AnalysisSpec analysis;
  OutputSpec output;
  Palette palette;
  std::optional<SweepSpec> sweep;
  SessionSpec session;
  int threads = 0;  // 0: hardware concurrency

  Variant variant() const { return variant_of(params); }

  /// Strokes plus expanded cataclysms, ordered by time.
  EventSchedule schedule() const {
    EventSchedule s;
    s.events = strokes;
    std::stable_sort(s.events.begin(), s.events.end(),
                     [](const ScheduledEvent& a, const ScheduledEvent& b) { return a.t < b.t; });
    if (cataclysm) s.add_cataclysms(cataclysm->spec, cataclysm->t_start, t_end);
    return s;
  }

  std::int64_t period_steps(double period, const char* what) const {
    const double m = period / dt;
    const auto n = static_cast<std::int64_t>(std::llround(m));
    if (!(period > 0.0) || n < 1 || std::fabs(m - static_cast<double>(n)) > 1e-9 * m)
      throw ConfigError(std::string(what) + " must be a positive multiple of dt");
    return n;
  }

  void validate() const {
    grid.validate();
    validate_params(params);
    check_cfl(grid, params, dt);
    if (!(t_end >= 0.0)) throw ConfigError("t_end must be >= 0");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    period_steps(output.analysis_period, "output.analysis_period");
    if (output.snapshot_period != 0.0) period_steps(output.snapshot_period, "output.snapshot_period");
    schedule().validate(grid, dt);
    for (const auto& e : strokes) {
      const auto& st = std::get<PipetteStroke>(e.action);
      const auto n = std::llround(st.duration / dt);
      if (std::fabs(static_cast<double>(n) * dt - st.duration) > 1e-9 * std::max(1.0, st.duration))
        throw ConfigError("schedule: stroke duration must be a multiple of dt");
    }
    for (const auto& z : zones)
      if (!(z.x1 > z.x0) || !(z.y1 > z.y0)) throw ConfigError("zone " + z.name + " is empty");
    if (!(analysis.velocity_window > 0.0)) throw ConfigError("analysis.velocity_window must be > 0");
    if (!(analysis.tracker.max_step > 0.0)) throw ConfigError("analysis.max_step must be > 0");
    if (analysis.spots.min_area_cells < 1) throw ConfigError("analysis.min_area_cells must be >= 1");
    if (!(palette.b_max > 0 && palette.c_max > 0 && palette.p_max > 0))
      throw ConfigError("palette maxima must be > 0");
    if (session.steps_per_frame < 1) throw ConfigError("session.steps_per_frame must be >= 1");
    if (session.frame_side < 1 || session.frame_side > 512)
      throw ConfigError("session.frame_side must lie in [1, 512]");
    if (sweep) {
      if (sweep->axes.empty() || sweep->axes.size() > 2)
        throw ConfigError("sweep: one or two axes required");
      for (const auto& ax : sweep->axes)
        if (ax.n < 2) throw ConfigError("sweep: axis " + ax.param + " needs n >= 2");
    }
  }
};

// ---------------------------------------------------------------------------
// Error position helpers

/// Line and column (1-based) of a byte offset in text.
inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports the byte just past the offending token.
    const auto [line, col] = line_col(text, e.byte == 0 ? 0 : e.byte - 1);
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

namespace detail {

// Strict object reader: every key must be consumed before finish().
class ObjReader {
 public:
  ObjReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  std::string where(const std::string& key = "") const {
    std::string p = path_.empty() ? "" : path_;
    if (!key.empty()) p += "/" + key;
    return p.empty() ? "/" : p;
  }

  const json& at(const std::string& key) {
    used_.push_back(key);
    if (!j_.contains(key)) throw ConfigError(where(key) + ": missing key");
    return j_.at(key);
  }
  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }
  void skip(const std::string& key) { used_.push_back(key); }

  double num(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + ": expected a number");
    return v.get<double>();
  }
  std::optional<double> opt_num(const std::string& key) {
    used_.push_back(key);
    if (!has(key)) return std::nullopt;
    return num(key);
  }
  std::int64_t integer(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
    return v.get<std::int64_t>();
  }
  bool boolean(const std::string& key) {
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + ": expected true or false");
    return v.get<bool>();
  }
  std::string str(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + ": expected a string");
    return v.get<std::string>();
  }
  std::vector<double> nums(const std::string& key, std::size_t n) {
    const json& v = at(key);
    if (!v.is_array() || v.size() != n)
      throw ConfigError(where(key) + ": expected an array of " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + ": expected numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  Vec2 vec2(const std::string& key) {
    const auto v = nums(key, 2);
    return {v[0], v[1]};
  }
  const json& array(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array");
    return v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (std::find(used_.begin(), used_.end(), k) == used_.end())
        throw ConfigError(where(k) + ": unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string> used_;
};

inline json params_json(const ModelParams& mp) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GrayScottParams>) {
          return {{"d_a", p.d_a}, {"d_b", p.d_b}, {"r", p.r}, {"k", p.k}};
        } else if constexpr (std::is_same_v<T, WasteParams>) {
          return {{"d_a", p.base.d_a}, {"d_b", p.base.d_b}, {"r", p.base.r},
                  {"k", p.base.k},     {"w", p.w},          {"k_p", p.k_p}};
        } else {
          return {{"d_a", p.d_a}, {"d_b", p.d_b}, {"d_c", p.d_c}, {"r", p.r},
                  {"k1", p.k1},   {"k2", p.k2},   {"k3", p.k3}};
        }
      },
      mp);
}

inline ModelParams parse_params(Variant v, const json& j) {
  ObjReader o(j, "/params");
  ModelParams out;
  switch (v) {
    case Variant::gs: {
      GrayScottParams p;
      p.d_a = o.num("d_a");
      p.d_b = o.num("d_b");
      p.r = o.num("r");
      p.k = o.num("k");
      out = p;
      break;
    }
    case Variant::waste: {
      WasteParams p;
      p.base.d_a = o.num("d_a");
      p.base.d_b = o.num("d_b");
      p.base.r = o.num("r");
      p.base.k = o.num("k");
      p.w = o.num("w");
      p.k_p = o.num("k_p");
      out = p;
      break;
    }
    case Variant::tail: {
      TailParams p;
      p.d_a = o.num("d_a");
      p.d_b = o.num("d_b");
      p.d_c = o.num("d_c");
      p.r = o.num("r");
      p.k1 = o.num("k1");
      p.k2 = o.num("k2");
      p.k3 = o.num("k3");
      out = p;
      break;
    }
  }
  o.finish();
  return out;
}

inline ModelParams default_params(Variant v) {
  switch (v) {
    case Variant::gs: return GrayScottParams{};
    case Variant::waste: return WasteParams{};
    case Variant::tail: return TailParams{};
  }
  return GrayScottParams{};
}

inline std::string_view kind_name(InitSpec::Kind k) {
  switch (k) {
    case InitSpec::Kind::square_seed: return "square_seed";
    case InitSpec::Kind::uniform_noise: return "uniform_noise";
    case InitSpec::Kind::from_snapshot: return "from_snapshot";
  }
  return "?";
}

inline json rect_json(double x0, double y0, double x1, double y1) {
  return json::array({x0, y0, x1, y1});
}

}  // namespace detail

inline json to_json(const RunConfig& c) {
  json j;
  j["scenario"] = c.scenario;
  j["variant"] = std::string(to_string(c.variant()));
  j["params"] = detail::params_json(c.params);
  j["grid"] = {{"nx", c.grid.nx}, {"ny", c.grid.ny}, {"lx", c.grid.lx}, {"ly", c.grid.ly}};
  j["dt"] = c.dt;
  json patches = json::array();
  for (const auto& p : c.init.patches)
    patches.push_back({{"center", {p.center.x, p.center.y}},
                       {"half_width", p.half_width},
                       {"a", p.a},
                       {"b", p.b},
                       {"c", p.c}});
  j["init"] = {{"kind", std::string(detail::kind_name(c.init.kind))},
               {"patches", patches},
               {"noise_amplitude", c.init.noise_amplitude},
               {"snapshot", c.init.snapshot_path}};
  json strokes = json::array();
  for (const auto& e : c.strokes) {
    const auto& s = std::get<PipetteStroke>(e.action);
    strokes.push_back({{"t", e.t},
                       {"x", s.action.position.x},
                       {"y", s.action.position.y},
                       {"to", s.to ? json{s.to->x, s.to->y} : json(nullptr)},
                       {"species", std::string(species_name(s.action.species))},
                       {"rate", s.action.rate},
                       {"radius", s.action.radius},
                       {"duration", s.duration}});
  }
  json cat = nullptr;
  if (c.cataclysm) {
    const auto& s = c.cataclysm->spec;
    cat = {{"region_side", s.region_side},
           {"period", s.period},
           {"zone", detail::rect_json(s.x0, s.y0, s.x1, s.y1)},
           {"stream", s.stream},
           {"t_start", c.cataclysm->t_start}};
  }
  j["schedule"] = {{"strokes", strokes}, {"cataclysm", cat}};
  j["t_end"] = c.t_end;
  j["seeds"] = c.seeds;
  json zones = json::array();
  for (const auto& z : c.zones)
    zones.push_back({{"name", z.name}, {"rect", detail::rect_json(z.x0, z.y0, z.x1, z.y1)}});
  j["zones"] = zones;
  const auto& a = c.analysis;
  j["analysis"] = {{"b_threshold", a.spots.b_threshold},
                   {"min_area_cells", a.spots.min_area_cells},
                   {"tail_radius", a.spots.tail_radius},
                   {"tail_mass_fraction", a.spots.tail_mass_fraction},
                   {"tail_mass_threshold", a.spots.tail_mass_threshold
                                               ? json(*a.spots.tail_mass_threshold)
                                               : json(nullptr)},
                   {"max_step", a.tracker.max_step},
                   {"near_factor", a.tracker.near_factor},
                   {"velocity_window", a.velocity_window},
                   {"tailed_track_fraction", a.tailed_track_fraction}};
  const auto& o = c.output;
  j["output"] = {{"dir", o.dir},
                 {"analysis_period", o.analysis_period},
                 {"snapshot_period", o.snapshot_period},
                 {"series", o.series},
                 {"events", o.events},
                 {"tracks", o.tracks},
                 {"snapshots", o.snapshots},
                 {"render", o.render}};
  j["palette"] = {{"b_max", c.palette.b_max}, {"c_max", c.palette.c_max}, {"p_max", c.palette.p_max}};
  if (c.sweep) {
    json axes = json::array();
    for (const auto& ax : c.sweep->axes)
      axes.push_back({{"param", ax.param}, {"min", ax.min}, {"max", ax.max}, {"n", ax.n}});
    j["sweep"] = {{"axes", axes},
                  {"extinction_b_max", c.sweep->extinction_b_max},
                  {"variance_from", c.sweep->variance_from}};
  } else {
    j["sweep"] = nullptr;
  }
  j["session"] = {{"steps_per_frame", c.session.steps_per_frame},
                  {"fps", c.session.fps},
                  {"frame_side", c.session.frame_side},
                  {"max_pending_commands", c.session.max_pending_commands}};
  j["threads"] = c.threads;
  return j;
}

/// Parses a fully resolved document (no preset merging).
inline RunConfig parse_resolved(const json& j) {
  using detail::ObjReader;
  ObjReader root(j, "");
  RunConfig c;
  c.scenario = root.str("scenario");
  Variant v;
  try {
    v = parse_variant(root.str("variant"));
  } catch (const ConfigError& e) {
    throw ConfigError("/variant: " + std::string(e.what()));
  }
  c.params = detail::parse_params(v, root.at("params"));

  {
    ObjReader g(root.at("grid"), "/grid");
    c.grid.nx = static_cast<int>(g.integer("nx"));
    c.grid.ny = static_cast<int>(g.integer("ny"));
    c.grid.lx = g.num("lx");
    c.grid.ly = g.num("ly");
    g.finish();
  }
  c.dt = root.num("dt");

  {
    ObjReader in(root.at("init"), "/init");
    const std::string kind = in.str("kind");
    if (kind == "square_seed") c.init.kind = InitSpec::Kind::square_seed;
    else if (kind == "uniform_noise") c.init.kind = InitSpec::Kind::uniform_noise;
    else if (kind == "from_snapshot") c.init.kind = InitSpec::Kind::from_snapshot;
    else throw ConfigError("/init/kind: unknown kind '" + kind + "'");
    c.init.patches.clear();
    const json& ps = in.array("patches");
    for (std::size_t n = 0; n < ps.size(); ++n) {
      ObjReader p(ps[n], "/init/patches/" + std::to_string(n));
      SeedPatch sp;
      sp.center = p.vec2("center");
      sp.half_width = p.num("half_width");
      sp.a = p.num("a");
      sp.b = p.num("b");
      sp.c = p.num("c");
      p.finish();
      c.init.patches.push_back(sp);
    }
    c.init.noise_amplitude = in.num("noise_amplitude");
    c.init.snapshot_path = in.str("snapshot");
    in.finish();
  }

  {
    ObjReader sch(root.at("schedule"), "/schedule");
    const json& st = sch.array("strokes");
    for (std::size_t n = 0; n < st.size(); ++n) {
      ObjReader s(st[n], "/schedule/strokes/" + std::to_string(n));
      ScheduledEvent e;
      PipetteStroke p;
      e.t = s.num("t");
      p.action.position = {s.num("x"), s.num("y")};
      if (s.has("to")) p.to = s.vec2("to");
      else s.skip("to");
      try {
        p.action.species = parse_species(s.str("species"));
      } catch (const ConfigError& err) {
        throw ConfigError(s.where("species") + ": " + err.what());
      }
      p.action.rate = s.num("rate");
      p.action.radius = s.num("radius");
      p.duration = s.num("duration");
      s.finish();
      e.action = p;
      c.strokes.push_back(e);
    }
    if (sch.has("cataclysm")) {
      ObjReader k(sch.at("cataclysm"), "/schedule/cataclysm");
      CataclysmSchedule cs;
      cs.spec.region_side = k.num("region_side");
      cs.spec.period = k.num("period");
      const auto z = k.nums("zone", 4);
      cs.spec.x0 = z[0];
      cs.spec.y0 = z[1];
      cs.spec.x1 = z[2];
      cs.spec.y1 = z[3];
      cs.spec.stream = static_cast<std::uint64_t>(k.integer("stream"));
      cs.t_start = k.num("t_start");
      k.finish();
      c.cataclysm = cs;
    } else {
      sch.skip("cataclysm");
    }
    sch.finish();
  }

  c.t_end = root.num("t_end");
  c.seeds.clear();
  for (const auto& s : root.array("seeds")) {
    if (!s.is_number_unsigned()) throw ConfigError("/seeds: expected non-negative integers");
    c.seeds.push_back(s.get<std::uint64_t>());
  }
  {
    const json& zs = root.array("zones");
    for (std::size_t n = 0; n < zs.size(); ++n) {
      ObjReader z(zs[n], "/zones/" + std::to_string(n));
      Zone zone;
      zone.name = z.str("name");
      const auto r = z.nums("rect", 4);
      zone.x0 = r[0];
      zone.y0 = r[1];
      zone.x1 = r[2];
      zone.y1 = r[3];
      z.finish();
      c.zones.push_back(zone);
    }
  }
  {
    ObjReader a(root.at("analysis"), "/analysis");
    auto& an = c.analysis;
    an.spots.b_threshold = a.num("b_threshold");
    an.spots.min_area_cells = static_cast<int>(a.integer("min_area_cells"));
    an.spots.tail_radius = a.num("tail_radius");
    an.spots.tail_mass_fraction = a.num("tail_mass_fraction");
    an.spots.tail_mass_threshold = a.opt_num("tail_mass_threshold");
    an.tracker.max_step = a.num("max_step");
    an.tracker.near_factor = a.num("near_factor");
    an.velocity_window = a.num("velocity_window");
    an.tailed_track_fraction = a.num("tailed_track_fraction");
    a.finish();
  }
  {
    ObjReader o(root.at("output"), "/output");
    auto& out = c.output;
    out.dir = o.str("dir");
    out.analysis_period = o.num("analysis_period");
    out.snapshot_period = o.num("snapshot_period");
    out.series = o.boolean("series");
    out.events = o.boolean("events");
    out.tracks = o.boolean("tracks");
    out.snapshots = o.boolean("snapshots");
    out.render = o.boolean("render");
    o.finish();
  }
  {
    ObjReader p(root.at("palette"), "/palette");
    c.palette.b_max = p.num("b_max");
    c.palette.c_max = p.num("c_max");
    c.palette.p_max = p.num("p_max");
    p.finish();
  }
  if (root.has("sweep")) {
    ObjReader s(root.at("sweep"), "/sweep");
    SweepSpec sw;
    const json& axes = s.array("axes");
    for (std::size_t n = 0; n < axes.size(); ++n) {
      ObjReader ax(axes[n], "/sweep/axes/" + std::to_string(n));
      SweepAxis a;
      a.param = ax.str("param");
      a.min = ax.num("min");
      a.max = ax.num("max");
      a.n = static_cast<int>(ax.integer("n"));
      ax.finish();
      if (!detail::params_json(c.params).contains(a.param))
        throw ConfigError("/sweep/axes/" + std::to_string(n) + "/param: '" + a.param +
                          "' is not a parameter of the " + std::string(to_string(v)) +
                          " variant");
      sw.axes.push_back(a);
    }
    sw.extinction_b_max = s.num("extinction_b_max");
    sw.variance_from = s.num("variance_from");
    s.finish();
    c.sweep = sw;
  } else {
    root.skip("sweep");
  }
  {
    ObjReader s(root.at("session"), "/session");
    c.session.steps_per_frame = static_cast<int>(s.integer("steps_per_frame"));
    c.session.fps = s.num("fps");
    c.session.frame_side = static_cast<int>(s.integer("frame_side"));
    c.session.max_pending_commands = static_cast<std::size_t>(s.integer("max_pending_commands"));
    s.finish();
  }
  c.threads = static_cast<int>(root.integer("threads"));
  root.finish();
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Presets

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"fig1_atlas", "fig3_waste", "fig4_tail",
                                              "fig5_cataclysm", "custom"};
  return names;
}

/// Tail seed: a plain spot seed with a small patch of C on its +x side.
inline std::vector<SeedPatch> tailed_seed(Vec2 center) {
  return {SeedPatch{center, 0.1, 0.5, 0.25, 0.0},
          SeedPatch{{center.x + 0.06, center.y}, 0.04, 0.5, 0.25, 0.25}};
}

inline RunConfig preset(const std::string& name) {
  RunConfig c;
  c.scenario = name;
  if (name == "custom") {
    c.params = GrayScottParams{};
    c.grid = {256, 256, 2.5, 2.5};
    c.dt = 1.0;
    c.t_end = 10000;
    c.init.patches = {SeedPatch{{1.25, 1.25}, 0.1, 0.5, 0.25, 0.0}};
  } else if (name == "fig1_atlas") {
    c.params = GrayScottParams{};
    c.grid = {128, 128, 2.5, 2.5};
    c.dt = 1.0;
    c.t_end = 20000;
    c.init.patches = {SeedPatch{{1.25, 1.25}, 0.1, 0.5, 0.25, 0.0}};
    c.output.analysis_period = 500;
    c.output.series = false;
    c.output.events = false;
    c.output.tracks = false;
    c.output.snapshots = false;
    SweepSpec sw;
    sw.axes = {SweepAxis{"r", 0.01, 0.06, 16}, SweepAxis{"k", 0.04, 0.07, 16}};
    c.sweep = sw;
  } else if (name == "fig3_waste") {
    c.params = WasteParams{};
    c.grid = {256, 256, 3.5, 3.5};
    c.dt = 0.5;
    c.t_end = 50000;
    c.init.patches = {SeedPatch{{1.75, 1.75}, 0.1, 0.5, 0.25, 0.0}};
    c.output.snapshot_period = 5000;
  } else if (name == "fig4_tail") {
    c.params = TailParams{};
    c.grid = {256, 256, 2.0, 2.0};
    c.dt = 0.5;
    c.t_end = 50000;
    c.init.patches = tailed_seed({1.0, 1.0});
    c.analysis.tracker.max_step = 0.06;
    c.output.snapshot_period = 5000;
  } else if (name == "fig5_cataclysm") {
    c.params = TailParams{};
    c.grid = {256, 256, 2.0, 2.0};
    c.dt = 0.5;
    c.t_end = 100000;
    c.seeds = {1, 2, 3};
    // Tailed and plain seeds in each half.
    auto left_tailed = tailed_seed({0.5, 1.5});
    auto right_tailed = tailed_seed({1.4, 0.5});
    c.init.patches = {SeedPatch{{0.5, 0.5}, 0.1, 0.5, 0.25, 0.0},
                      SeedPatch{{1.5, 1.5}, 0.1, 0.5, 0.25, 0.0}};
    c.init.patches.insert(c.init.patches.end(), left_tailed.begin(), left_tailed.end());
    c.init.patches.insert(c.init.patches.end(), right_tailed.begin(), right_tailed.end());
    CataclysmSchedule cs;
    cs.spec.region_side = 0.5;
    cs.spec.period = 1000;
    cs.spec.x0 = 1.0;
    cs.spec.y0 = 0.0;
    cs.spec.x1 = 2.0;
    cs.spec.y1 = 2.0;
    c.cataclysm = cs;
    c.zones = {Zone{"left", 0.0, 0.0, 1.0, 2.0}, Zone{"right", 1.0, 0.0, 2.0, 2.0}};
    c.analysis.tracker.max_step = 0.06;
    c.output.snapshot_period = 10000;
  } else {
    throw ConfigError("/scenario: unknown scenario '" + name + "'");
  }
  return c;
}

/// Merges a user document over its preset and parses the result.
inline RunConfig resolve_config(const json& user) {
  if (!user.is_object()) throw ConfigError("/: expected an object");
  std::string name = "custom";
  if (user.contains("scenario")) {
    if (!user["scenario"].is_string()) throw ConfigError("/scenario: expected a string");
    name = user["scenario"].get<std::string>();
  }
  json base = to_json(preset(name));
  // Switching variant starts from that variant's default parameters.
  if (user.contains("variant") && user["variant"].is_string() &&
      user["variant"] != base["variant"]) {
    try {
      base["params"] = detail::params_json(detail::default_params(parse_variant(user["variant"].get<std::string>())));
    } catch (const ConfigError& e) {
      throw ConfigError("/variant: " + std::string(e.what()));
    }
  }
  base.merge_patch(user);
  return parse_resolved(base);
}

inline RunConfig load_config_text(const std::string& text, const std::string& origin = "config") {
  const json j = parse_json_text(text, origin);
  try {
    return resolve_config(j);
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_config_text(ss.str(), path);
}

/// Canonical text of the resolved config.
inline std::string resolved_text(const RunConfig& c) { return to_json(c).dump(2) + "\n"; }

}  // namespace rdspot
