#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rdspot/analysis.hpp"
#include "rdspot/config.hpp"
#include "rdspot/integrator.hpp"
#include "rdspot/io.hpp"
#include "rdspot/perturb.hpp"
#include "rdspot/snapshot.hpp"

namespace rdspot {

namespace fs = std::filesystem;

/// Runs job(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Jobs must write only to their own slot.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& job) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) job(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Analysis frames

inline AnalysisFrame analysis_frame(double t, const std::vector<std::string>& names,
                                    const std::vector<const Field*>& fields, const SpotConfig& cfg) {
  const Field* b = nullptr;
  const Field* c = nullptr;
  AnalysisFrame f;
  f.t = t;
  for (std::size_t n = 0; n < names.size(); ++n) {
    if (names[n] == "b") b = fields[n];
    if (names[n] == "c") c = fields[n];
    f.masses.push_back(total_mass(*fields[n]));
  }
  if (!b) throw AnalysisError("analysis: no b field");
  f.spots = detect_spots(*b, c, cfg);
  return f;
}

inline AnalysisFrame analysis_frame(const SimState& s, const SpotConfig& cfg) {
  std::vector<std::string> names;
  std::vector<const Field*> fields;
  for (Species sp : s.species()) {
    names.emplace_back(species_name(sp));
    fields.push_back(&s.field(sp));
  }
  return analysis_frame(s.t(), names, fields, cfg);
}

inline AnalysisFrame analysis_frame(const Snapshot& snap, const GridSpec& grid, const SpotConfig& cfg) {
  if (snap.nx != grid.nx || snap.ny != grid.ny)
    throw ConfigError("snapshot grid does not match the configured grid");
  std::vector<Field> owned;
  owned.reserve(snap.fields.size());
  for (const auto& v : snap.fields) owned.emplace_back(grid, v);
  std::vector<const Field*> fields;
  for (const auto& f : owned) fields.push_back(&f);
  return analysis_frame(snap.t, snap.names, fields, cfg);
}

// ---------------------------------------------------------------------------
// Scenario runs

struct TrackSummary {
  int id = 0;
  bool tailed = false;
  std::optional<double> speed;
  double max_displacement = 0.0;
  double mean_radius = 0.0;
  Track::End end = Track::End::alive;
};

struct SeedResult {
  std::uint64_t seed = 0;
  bool ok = true;
  bool diverged = false;
  std::string error;
  double t_reached = 0.0;
  std::vector<AnalysisFrame> frames;
  std::vector<LineageEvent> events;
  std::vector<Track> tracks;
  std::vector<TrackSummary> summaries;
  HeredityStats heredity;
  std::vector<Vec2> cataclysms;
  std::optional<Snapshot> final_snapshot;

  int count(LineageEvent::Kind k) const {
    return static_cast<int>(std::count_if(events.begin(), events.end(),
                                          [&](const LineageEvent& e) { return e.kind == k; }));
  }
};

struct ScenarioAggregate {
  std::optional<double> mean_speed_tailed;
  std::optional<double> mean_speed_untailed;
  int tailed_tracks_measured = 0;
  int untailed_tracks_measured = 0;
  int births = 0, deaths = 0, divisions = 0, merges = 0;
  HeredityStats heredity;
  double max_displacement_ratio = 0.0;  // max over tracks of displacement / mean radius
  int seeds_ok = 0;
  int seeds_failed = 0;
};

struct ScenarioReport {
  RunConfig config;
  std::vector<SeedResult> seeds;
  ScenarioAggregate aggregate;

  bool any_diverged() const {
    return std::any_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.diverged; });
  }
};

struct SeedOptions {
  bool track = true;
  bool keep_final = true;
  std::string dir;  // per-seed output directory, empty for none
};

inline std::string snapshot_name(std::int64_t step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%012lld.rds", static_cast<long long>(step));
  return buf;
}

inline std::vector<std::string> state_species_names(const SimState& s) {
  std::vector<std::string> out;
  for (Species sp : s.species()) out.emplace_back(species_name(sp));
  return out;
}

inline std::vector<TrackSummary> summarize_tracks(const GridSpec& g, const std::vector<Track>& tracks,
                                                  const AnalysisSpec& a) {
  std::vector<TrackSummary> out;
  for (const auto& t : tracks) {
    TrackSummary s;
    s.id = t.id;
    s.tailed = t.tailed_fraction() >= a.tailed_track_fraction;
    s.speed = track_speed(t, a.velocity_window);
    s.max_displacement = max_displacement(t);
    s.mean_radius = mean_radius(g, t);
    s.end = t.end;
    out.push_back(s);
  }
  return out;
}

inline void write_seed_outputs(const RunConfig& cfg, const SeedResult& r,
                               const std::vector<std::string>& names, const std::string& dir) {
  const auto& o = cfg.output;
  if (o.series) write_text_file(dir + "/series.csv", series_csv(r.frames, names, cfg.zones));
  if (o.events) write_text_file(dir + "/events.csv", events_csv(r.events));
  if (o.tracks)
    write_text_file(dir + "/tracks.csv", tracks_csv(cfg.grid, r.tracks, cfg.analysis.velocity_window));
  if (!r.cataclysms.empty()) {
    std::string text = "index,x,y\n";
    for (std::size_t n = 0; n < r.cataclysms.size(); ++n)
      text += std::to_string(n) + ',' + fmt_real(r.cataclysms[n].x) + ',' + fmt_real(r.cataclysms[n].y) + '\n';
    write_text_file(dir + "/cataclysms.csv", text);
  }
  if (r.final_snapshot) {
    if (o.snapshots) write_snapshot_file(dir + "/final.rds", *r.final_snapshot);
    if (o.render)
      write_png(dir + "/final.png", render_snapshot(*r.final_snapshot, cfg.palette.b_max,
                                                    cfg.palette.c_max, cfg.palette.p_max));
  }
}

/// One seed: init, integrate with analysis / snapshot / schedule observers,
/// then fold results. Integration errors are recorded, not thrown.
inline SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed, const SeedOptions& opt = {}) {
  SeedResult r;
  r.seed = seed;
  InitSpec is = cfg.init;
  is.rng_seed = seed;
  SimState s = init(cfg.grid, is, cfg.params, cfg.dt);
  const auto names = state_species_names(s);

  const bool write = !opt.dir.empty();
  const bool snaps = write && cfg.output.snapshots;
  if (write) fs::create_directories(opt.dir);
  if (snaps && cfg.output.snapshot_period > 0) fs::create_directories(opt.dir + "/snapshots");

  Tracker tracker(cfg.grid, cfg.analysis.tracker);
  auto analyse = [&](SimState& st) {
    AnalysisFrame f = analysis_frame(st, cfg.analysis.spots);
    if (opt.track) tracker.update(f.t, f.spots);
    r.frames.push_back(std::move(f));
  };
  auto snapshot = [&](SimState& st) {
    write_snapshot_file(opt.dir + "/snapshots/" + snapshot_name(st.step_count), to_snapshot(st));
  };

  analyse(s);
  if (snaps && cfg.output.snapshot_period > 0) snapshot(s);

  auto applier = std::make_shared<ScheduleApplier>(cfg.schedule());
  std::vector<Observer> obs;
  if (!applier->schedule().events.empty())
    obs.push_back({Observer::Phase::events, 1, [applier](SimState& st) { (*applier)(st); }, {}});
  obs.push_back({Observer::Phase::analysis, cfg.period_steps(cfg.output.analysis_period, "analysis_period"),
                 analyse, {}});
  if (snaps && cfg.output.snapshot_period > 0)
    obs.push_back({Observer::Phase::output, cfg.period_steps(cfg.output.snapshot_period, "snapshot_period"),
                   snapshot, {}});

  try {
    run(s, cfg.t_end, obs);
  } catch (const DivergenceError& e) {
    r.ok = false;
    r.diverged = true;
    r.error = e.what();
  } catch (const std::exception& e) {
    r.ok = false;
    r.error = e.what();
  }
  r.t_reached = s.t();
  r.cataclysms = applier->cataclysm_centers();
  if (opt.track) {
    r.events = tracker.events();
    r.tracks = tracker.tracks();
    r.summaries = summarize_tracks(cfg.grid, r.tracks, cfg.analysis);
    r.heredity = heredity_stats(r.events, r.tracks);
  }
  if (opt.keep_final || write) r.final_snapshot = to_snapshot(s);
  if (write) write_seed_outputs(cfg, r, names, opt.dir);
  if (!opt.keep_final) r.final_snapshot.reset();
  return r;
}

inline ScenarioAggregate aggregate(const std::vector<SeedResult>& seeds) {
  ScenarioAggregate a;
  double st = 0.0, su = 0.0;
  for (const auto& r : seeds) {
    (r.ok ? a.seeds_ok : a.seeds_failed)++;
    a.births += r.count(LineageEvent::Kind::birth);
    a.deaths += r.count(LineageEvent::Kind::death);
    a.divisions += r.count(LineageEvent::Kind::division);
    a.merges += r.count(LineageEvent::Kind::merge);
    a.heredity.divisions += r.heredity.divisions;
    a.heredity.tailed_parent_divisions += r.heredity.tailed_parent_divisions;
    a.heredity.children_of_tailed += r.heredity.children_of_tailed;
    a.heredity.tailed_children_of_tailed += r.heredity.tailed_children_of_tailed;
    for (const auto& s : r.summaries) {
      if (s.mean_radius > 0.0)
        a.max_displacement_ratio = std::max(a.max_displacement_ratio, s.max_displacement / s.mean_radius);
      if (!s.speed) continue;
      if (s.tailed) {
        st += *s.speed;
        ++a.tailed_tracks_measured;
      } else {
        su += *s.speed;
        ++a.untailed_tracks_measured;
      }
    }
  }
  if (a.tailed_tracks_measured) a.mean_speed_tailed = st / a.tailed_tracks_measured;
  if (a.untailed_tracks_measured) a.mean_speed_untailed = su / a.untailed_tracks_measured;
  if (a.heredity.children_of_tailed)
    a.heredity.p_tail_inherit =
        static_cast<double>(a.heredity.tailed_children_of_tailed) / a.heredity.children_of_tailed;
  return a;
}

inline json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json heredity_json(const HeredityStats& h) {
  return {{"p_tail_inherit", opt_json(h.p_tail_inherit)},
          {"divisions", h.divisions},
          {"tailed_parent_divisions", h.tailed_parent_divisions},
          {"children_of_tailed", h.children_of_tailed},
          {"tailed_children_of_tailed", h.tailed_children_of_tailed}};
}

inline json report_json(const ScenarioReport& rep) {
  const auto& a = rep.aggregate;
  json seeds = json::array();
  for (const auto& r : rep.seeds) {
    const int last_spots = r.frames.empty() ? 0 : static_cast<int>(r.frames.back().spots.size());
    int last_tailed = 0;
    if (!r.frames.empty())
      for (const auto& s : r.frames.back().spots) last_tailed += s.tailed;
    int tailed_tracks = 0;
    for (const auto& s : r.summaries) tailed_tracks += s.tailed;
    seeds.push_back({{"seed", r.seed},
                     {"ok", r.ok},
                     {"diverged", r.diverged},
                     {"error", r.error},
                     {"t_reached", r.t_reached},
                     {"frames", r.frames.size()},
                     {"final_spots", last_spots},
                     {"final_tailed", last_tailed},
                     {"tracks", r.tracks.size()},
                     {"tailed_tracks", tailed_tracks},
                     {"births", r.count(LineageEvent::Kind::birth)},
                     {"deaths", r.count(LineageEvent::Kind::death)},
                     {"divisions", r.count(LineageEvent::Kind::division)},
                     {"merges", r.count(LineageEvent::Kind::merge)},
                     {"cataclysms", r.cataclysms.size()},
                     {"heredity", heredity_json(r.heredity)}});
  }
  return {{"scenario", rep.config.scenario},
          {"seeds", seeds},
          {"aggregate",
           {{"seeds_ok", a.seeds_ok},
            {"seeds_failed", a.seeds_failed},
            {"mean_speed_tailed", opt_json(a.mean_speed_tailed)},
            {"mean_speed_untailed", opt_json(a.mean_speed_untailed)},
            {"tailed_tracks_measured", a.tailed_tracks_measured},
            {"untailed_tracks_measured", a.untailed_tracks_measured},
            {"births", a.births},
            {"deaths", a.deaths},
            {"divisions", a.divisions},
            {"merges", a.merges},
            {"max_displacement_ratio", a.max_displacement_ratio},
            {"heredity", heredity_json(a.heredity)}}}};
}

inline std::string seed_dir(const std::string& dir, std::uint64_t seed) {
  return dir + "/seed_" + std::to_string(seed);
}

/// Runs every seed of the scenario; writes outputs when cfg.output.dir is set.
inline ScenarioReport run_scenario(const RunConfig& cfg) {
  cfg.validate();
  ScenarioReport rep;
  rep.config = cfg;
  const std::string& dir = cfg.output.dir;
  if (!dir.empty()) {
    fs::create_directories(dir);
    write_text_file(dir + "/resolved_config.json", resolved_text(cfg));
  }
  rep.seeds.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), cfg.threads, [&](std::size_t i) {
    SeedOptions opt;
    if (!dir.empty()) opt.dir = seed_dir(dir, cfg.seeds[i]);
    try {
      rep.seeds[i] = run_seed(cfg, cfg.seeds[i], opt);
    } catch (const std::exception& e) {
      rep.seeds[i].seed = cfg.seeds[i];
      rep.seeds[i].ok = false;
      rep.seeds[i].error = e.what();
    }
  });
  rep.aggregate = aggregate(rep.seeds);
  if (!dir.empty()) write_text_file(dir + "/report.json", report_json(rep).dump(2) + "\n");
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  std::vector<double> values;  // one per axis
  std::string status = "ok";   // ok | diverged | error: <message>
  int n_spots = 0;
  double b_mass = 0.0;
  double b_mass_variance = 0.0;
  double b_max = 0.0;
  bool extinct = false;
  std::string image;
};

struct SweepResult {
  RunConfig config;
  std::vector<SweepRow> rows;
};

/// Copy of cfg with one parameter replaced (by name, as in the config file).
inline RunConfig with_param(const RunConfig& cfg, const std::string& name, double value) {
  json j = to_json(cfg);
  if (!j["params"].contains(name)) throw ConfigError("unknown parameter '" + name + "'");
  j["params"][name] = value;
  return parse_resolved(j);
}

inline std::string sweep_csv(const SweepResult& res) {
  std::string out;
  for (const auto& ax : res.config.sweep->axes) out += ax.param + ',';
  out += "status,n_spots,b_mass,b_mass_variance,b_max,extinct,image\n";
  for (const auto& r : res.rows) {
    for (double v : r.values) out += fmt_real(v) + ',';
    out += r.status + ',' + std::to_string(r.n_spots) + ',' + fmt_real(r.b_mass) + ',' +
           fmt_real(r.b_mass_variance) + ',' + fmt_real(r.b_max) + ',' + (r.extinct ? "1" : "0") +
           ',' + r.image + '\n';
  }
  return out;
}

/// Evaluates every cell of the sweep grid with the first seed. Axis 0 varies
/// slowest. Writes atlas.csv and per-cell images when cfg.output.dir is set.
inline SweepResult run_sweep(const RunConfig& cfg) {
  cfg.validate();
  if (!cfg.sweep) throw ConfigError("sweep: config has no sweep section");
  const auto& axes = cfg.sweep->axes;
  const int n0 = axes[0].n;
  const int n1 = axes.size() > 1 ? axes[1].n : 1;
  SweepResult res;
  res.config = cfg;
  res.rows.resize(static_cast<std::size_t>(n0) * n1);
  const std::string& dir = cfg.output.dir;
  if (!dir.empty()) {
    fs::create_directories(dir + "/cells");
    write_text_file(dir + "/resolved_config.json", resolved_text(cfg));
  }
  parallel_for(res.rows.size(), cfg.threads, [&](std::size_t idx) {
    const int i = static_cast<int>(idx) / n1;
    const int j = static_cast<int>(idx) % n1;
    SweepRow& row = res.rows[idx];
    row.values.push_back(axes[0].value(i));
    if (axes.size() > 1) row.values.push_back(axes[1].value(j));
    try {
      RunConfig cell = with_param(cfg, axes[0].param, row.values[0]);
      if (axes.size() > 1) cell = with_param(cell, axes[1].param, row.values[1]);
      cell.sweep.reset();
      SeedOptions opt;
      opt.track = false;
      SeedResult r = run_seed(cell, cfg.seeds.front(), opt);
      if (!r.ok) row.status = r.diverged ? "diverged" : "error: " + r.error;
      const auto& last = r.frames.back();
      row.n_spots = static_cast<int>(last.spots.size());
      const auto names = r.final_snapshot->names;
      const std::size_t bi = static_cast<std::size_t>(
          std::find(names.begin(), names.end(), "b") - names.begin());
      row.b_mass = last.masses[bi];
      std::vector<double> tail;
      for (const auto& f : r.frames)
        if (f.t >= cfg.sweep->variance_from * cfg.t_end) tail.push_back(f.masses[bi]);
      if (!tail.empty()) {
        double mean = 0.0;
        for (double x : tail) mean += x;
        mean /= static_cast<double>(tail.size());
        double var = 0.0;
        for (double x : tail) var += (x - mean) * (x - mean);
        row.b_mass_variance = var / static_cast<double>(tail.size());
      }
      const auto& bf = r.final_snapshot->fields[bi];
      row.b_max = bf.empty() ? 0.0 : *std::max_element(bf.begin(), bf.end());
      row.extinct = r.ok && row.b_max <= cfg.sweep->extinction_b_max;
      if (!dir.empty() && cfg.output.render) {
        char name[64];
        std::snprintf(name, sizeof name, "cells/cell_%03d_%03d.png", i, j);
        write_png(dir + "/" + name, render_snapshot(*r.final_snapshot, cfg.palette.b_max,
                                                    cfg.palette.c_max, cfg.palette.p_max));
        row.image = name;
      }
    } catch (const std::exception& e) {
      row.status = std::string("error: ") + e.what();
    }
    // Commas would break the CSV row.
    std::replace(row.status.begin(), row.status.end(), ',', ';');
  });
  if (!dir.empty()) write_text_file(dir + "/atlas.csv", sweep_csv(res));
  return res;
}

// ---------------------------------------------------------------------------
// Offline analysis of stored snapshots

struct OfflineResult {
  std::uint64_t seed = 0;
  std::vector<AnalysisFrame> frames;
  std::vector<LineageEvent> events;
  std::vector<std::string> names;
};

/// Recomputes analysis frames and lineage events from a seed directory's
/// snapshots/ folder, in file-name (= time) order.
inline OfflineResult analyze_snapshots(const RunConfig& cfg, const std::string& seed_directory) {
  OfflineResult out;
  std::vector<std::string> files;
  const fs::path snaps = fs::path(seed_directory) / "snapshots";
  if (!fs::is_directory(snaps)) throw ConfigError(snaps.string() + ": no snapshots directory");
  for (const auto& e : fs::directory_iterator(snaps))
    if (e.path().extension() == ".rds") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError(snaps.string() + ": no snapshots");
  Tracker tracker(cfg.grid, cfg.analysis.tracker);
  for (const auto& f : files) {
    const Snapshot snap = read_snapshot_file(f);
    if (out.names.empty()) out.names = snap.names;
    AnalysisFrame frame = analysis_frame(snap, cfg.grid, cfg.analysis.spots);
    tracker.update(frame.t, frame.spots);
    out.frames.push_back(std::move(frame));
  }
  out.events = tracker.events();
  return out;
}

}  // namespace rdspot
