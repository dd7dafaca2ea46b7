#pragma once

// Live-steering session logic, independent of the transport.
//
// Client -> server messages are JSON text:
//   {"type":"pipette_start"|"pipette_move", "x", "y", "species", "rate", "radius"}
//   {"type":"pipette_end"}
//   {"type":"pause"} / {"type":"resume"}
//   {"type":"set_speed", "steps_per_frame"}
//   {"type":"cataclysm", "x", "y", "side"}
//   {"type":"reset", "scenario"}          ("current" or a preset name)
//   {"type":"snapshot_request"}
//
// Server -> client:
//   JSON  hello, palette, ack, error, stats, snapshot (header of a binary RDS1 message)
//   binary RDF1 frames:
//     offset 0  "RDF1"
//            4  seq u64        (per client, stamped by the transport)
//           12  t f64
//           20  w u16, 22 h u16
//           24  species count u8
//           25  per species w*h u8, row-major, x fastest, row 0 at y = 0
//   A byte q stands for min + q/255 * (max - min) with bounds from the last
//   palette message.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rdspot/analysis.hpp"
#include "rdspot/config.hpp"
#include "rdspot/experiments.hpp"
#include "rdspot/integrator.hpp"
#include "rdspot/perturb.hpp"
#include "rdspot/snapshot.hpp"

namespace rdspot {

inline constexpr int kProtocolVersion = 1;
inline constexpr int kMaxFrameSide = 512;
inline constexpr int kMaxStepsPerFrame = 10000;

struct LoggedCommand {
  std::int64_t epoch = 0;  // number of resets before this command
  std::int64_t step = 0;   // state step count when applied
  std::string command;     // canonical JSON

  friend bool operator==(const LoggedCommand&, const LoggedCommand&) = default;
};

inline std::string log_line(const LoggedCommand& c) {
  return json{{"epoch", c.epoch}, {"step", c.step}, {"cmd", json::parse(c.command)}}.dump();
}

inline LoggedCommand parse_log_line(const std::string& line) {
  const json j = json::parse(line);
  return {j.at("epoch").get<std::int64_t>(), j.at("step").get<std::int64_t>(), j.at("cmd").dump()};
}

struct Outbound {
  enum class Kind { control, frame };
  Kind kind = Kind::control;
  int client = -1;  // -1: every client
  bool binary = false;
  std::string data;
};

// ---------------------------------------------------------------------------
// Frames

struct FrameHeader {
  std::uint64_t seq = 0;
  double t = 0.0;
  int w = 0;
  int h = 0;
  int species = 0;
};

inline void stamp_frame_seq(std::string& frame, std::uint64_t seq) {
  std::memcpy(frame.data() + 4, &seq, 8);
}

inline FrameHeader decode_frame_header(std::string_view frame) {
  if (frame.size() < 25 || frame.substr(0, 4) != "RDF1") throw std::runtime_error("not an RDF1 frame");
  FrameHeader h;
  std::uint16_t w, hh;
  std::uint8_t n;
  std::memcpy(&h.seq, frame.data() + 4, 8);
  std::memcpy(&h.t, frame.data() + 12, 8);
  std::memcpy(&w, frame.data() + 20, 2);
  std::memcpy(&hh, frame.data() + 22, 2);
  std::memcpy(&n, frame.data() + 24, 1);
  h.w = w;
  h.h = hh;
  h.species = n;
  if (frame.size() != 25 + static_cast<std::size_t>(w) * hh * n)
    throw std::runtime_error("RDF1 frame size mismatch");
  return h;
}

/// Box-downsampling factor so that both sides fit in `side` pixels.
inline int frame_factor(const GridSpec& g, int side) {
  const int m = std::max(g.nx, g.ny);
  return (m + side - 1) / side;
}

inline std::uint8_t quantize(double v, double lo, double hi) {
  const double f = (v - lo) / (hi - lo);
  if (!(f > 0.0)) return 0;
  if (f >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::lround(f * 255.0));
}

/// Encodes an RDF1 frame with seq 0.
inline std::string encode_frame(const SimState& s, int side, const std::vector<double>& lo,
                                const std::vector<double>& hi) {
  const GridSpec& g = s.grid;
  const int f = frame_factor(g, side);
  const int w = (g.nx + f - 1) / f;
  const int h = (g.ny + f - 1) / f;
  const auto species = s.species();
  std::string out(25 + static_cast<std::size_t>(w) * h * species.size(), '\0');
  std::memcpy(out.data(), "RDF1", 4);
  const double t = s.t();
  const auto w16 = static_cast<std::uint16_t>(w);
  const auto h16 = static_cast<std::uint16_t>(h);
  const auto n8 = static_cast<std::uint8_t>(species.size());
  std::memcpy(out.data() + 12, &t, 8);
  std::memcpy(out.data() + 20, &w16, 2);
  std::memcpy(out.data() + 22, &h16, 2);
  std::memcpy(out.data() + 24, &n8, 1);
  std::size_t pos = 25;
  for (std::size_t q = 0; q < species.size(); ++q) {
    const Field& fld = s.field(species[q]);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sum = 0.0;
        int n = 0;
        for (int j = y * f; j < std::min(g.ny, (y + 1) * f); ++j)
          for (int i = x * f; i < std::min(g.nx, (x + 1) * f); ++i) {
            sum += fld(i, j);
            ++n;
          }
        out[pos++] = static_cast<char>(quantize(sum / n, lo[q], hi[q]));
      }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands

struct Command {
  std::string type;
  double x = 0.0, y = 0.0;
  Species species = Species::A;
  double rate = 0.5;
  double radius = 0.05;
  int steps_per_frame = 0;
  double side = 0.5;
  std::string scenario;

  std::string canonical() const {
    json j{{"type", type}};
    if (type == "pipette_start" || type == "pipette_move") {
      j["x"] = x;
      j["y"] = y;
      j["species"] = std::string(species_name(species));
      j["rate"] = rate;
      j["radius"] = radius;
    } else if (type == "set_speed") {
      j["steps_per_frame"] = steps_per_frame;
    } else if (type == "cataclysm") {
      j["x"] = x;
      j["y"] = y;
      j["side"] = side;
    } else if (type == "reset") {
      j["scenario"] = scenario;
    }
    return j.dump();
  }
};

/// Syntax-level validation; domain checks happen when the command is applied.
inline Command parse_command(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ConfigError("message must be an object with a string 'type'");
  Command c;
  c.type = j["type"].get<std::string>();
  std::vector<std::string> allowed{"type"};
  auto num = [&](const char* key, std::optional<double> def = std::nullopt) {
    allowed.emplace_back(key);
    if (!j.contains(key)) {
      if (def) return *def;
      throw ConfigError(c.type + ": missing '" + key + "'");
    }
    if (!j[key].is_number()) throw ConfigError(c.type + ": '" + key + "' must be a number");
    return j[key].get<double>();
  };
  if (c.type == "pipette_start" || c.type == "pipette_move") {
    c.x = num("x");
    c.y = num("y");
    allowed.emplace_back("species");
    if (j.contains("species")) {
      if (!j["species"].is_string()) throw ConfigError(c.type + ": 'species' must be a string");
      c.species = parse_species(j["species"].get<std::string>());
    }
    c.rate = num("rate", 0.5);
    c.radius = num("radius", 0.05);
    PipetteAction{{c.x, c.y}, c.species, c.rate, c.radius}.validate();
  } else if (c.type == "set_speed") {
    const double v = num("steps_per_frame");
    if (v != std::floor(v) || v < 1 || v > kMaxStepsPerFrame)
      throw ConfigError("set_speed: steps_per_frame must be an integer in [1, " +
                        std::to_string(kMaxStepsPerFrame) + "]");
    c.steps_per_frame = static_cast<int>(v);
  } else if (c.type == "cataclysm") {
    c.x = num("x");
    c.y = num("y");
    c.side = num("side", 0.5);
    if (!(c.side > 0.0)) throw ConfigError("cataclysm: side must be > 0");
  } else if (c.type == "reset") {
    allowed.emplace_back("scenario");
    c.scenario = "current";
    if (j.contains("scenario")) {
      if (!j["scenario"].is_string()) throw ConfigError("reset: 'scenario' must be a string");
      c.scenario = j["scenario"].get<std::string>();
    }
    const auto& names = scenario_names();
    if (c.scenario != "current" && std::find(names.begin(), names.end(), c.scenario) == names.end())
      throw ConfigError("reset: unknown scenario '" + c.scenario + "'");
  } else if (c.type != "pipette_end" && c.type != "pause" && c.type != "resume" &&
             c.type != "snapshot_request") {
    throw ConfigError("unknown message type '" + c.type + "'");
  }
  for (const auto& [k, v] : j.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError(c.type + ": unknown field '" + k + "'");
  return c;
}

inline std::string error_message(const std::string& what) {
  return json{{"type", "error"}, {"message", what}}.dump();
}

// ---------------------------------------------------------------------------

/// One simulation plus its command queue. submit() may be called from any
/// thread; everything else belongs to the simulation owner.
class SessionCore {
 public:
  SessionCore(RunConfig cfg, std::uint64_t seed) : base_(std::move(cfg)), seed_(seed) {
    base_.validate();
    start(base_);
  }

  /// Queues a message. Returns an error reply when it is rejected outright.
  std::optional<std::string> submit(int client, std::string_view text) {
    Command c;
    try {
      c = parse_command(text);
    } catch (const std::exception& e) {
      return error_message(e.what());
    }
    std::lock_guard lock(queue_mu_);
    if (queue_.size() >= base_.session.max_pending_commands)
      return error_message("command queue full");
    queue_.push_back({client, std::move(c)});
    return std::nullopt;
  }

  std::string hello() const {
    std::lock_guard lock(hello_mu_);
    return hello_;
  }
  std::string palette() const {
    std::lock_guard lock(hello_mu_);
    return palette_;
  }

  /// Applies queued commands, then advances one frame unless paused.
  std::vector<Outbound> tick() {
    std::vector<Outbound> out;
    std::deque<std::pair<int, Command>> batch;
    {
      std::lock_guard lock(queue_mu_);
      batch.swap(queue_);
    }
    for (auto& [client, cmd] : batch) apply(client, cmd, out);
    if (paused_) return out;
    for (int k = 0; k < steps_per_frame_; ++k) {
      pipette_step();
      step(*state_);
    }
    Outbound f;
    f.kind = Outbound::Kind::frame;
    f.binary = true;
    f.data = encode_frame(*state_, cfg_.session.frame_side, lo_, hi_);
    out.push_back(std::move(f));
    const auto slot = static_cast<std::int64_t>(std::floor(state_->t() / cfg_.output.analysis_period));
    if (slot != last_stats_slot_) {
      last_stats_slot_ = slot;
      out.push_back({Outbound::Kind::control, -1, false, stats()});
    }
    return out;
  }

  const SimState& state() const { return *state_; }
  const RunConfig& config() const { return cfg_; }
  bool paused() const { return paused_; }
  int steps_per_frame() const { return steps_per_frame_; }
  std::int64_t epoch() const { return epoch_; }
  const std::vector<LoggedCommand>& log() const { return log_; }
  const Tracker& tracker() const { return *tracker_; }

  /// Each applied command is also appended to this file, one JSON per line.
  void set_log_file(const std::string& path) {
    log_file_.open(path, std::ios::trunc);
    if (!log_file_) throw ConfigError("cannot open command log " + path);
  }

 private:
  struct Stroke {
    PipetteAction act;
    Vec2 from;
    Vec2 delta;
    int k = 0;
    int len = 0;
  };

  void start(const RunConfig& cfg) {
    cfg_ = cfg;
    InitSpec is = cfg_.init;
    is.rng_seed = seed_;
    state_ = init(cfg_.grid, is, cfg_.params, cfg_.dt);
    tracker_.emplace(cfg_.grid, cfg_.analysis.tracker);
    steps_per_frame_ = cfg_.session.steps_per_frame;
    stroke_.reset();
    last_stats_slot_ = -1;
    pending_events_.clear();
    lo_.clear();
    hi_.clear();
    json names = json::array();
    for (Species sp : state_->species()) {
      lo_.push_back(0.0);
      hi_.push_back(cfg_.palette.max_for(sp));
      names.push_back(std::string(species_name(sp)));
    }
    const int f = frame_factor(cfg_.grid, cfg_.session.frame_side);
    std::lock_guard lock(hello_mu_);
    palette_ = json{{"type", "palette"}, {"species", names}, {"min", lo_}, {"max", hi_}}.dump();
    hello_ = json{{"type", "hello"},
                  {"protocol", kProtocolVersion},
                  {"scenario", cfg_.scenario},
                  {"variant", std::string(to_string(cfg_.variant()))},
                  {"grid", {{"nx", cfg_.grid.nx}, {"ny", cfg_.grid.ny}, {"lx", cfg_.grid.lx}, {"ly", cfg_.grid.ly}}},
                  {"frame", {{"w", (cfg_.grid.nx + f - 1) / f}, {"h", (cfg_.grid.ny + f - 1) / f}}},
                  {"species", names},
                  {"palette", {{"min", lo_}, {"max", hi_}}},
                  {"dt", cfg_.dt},
                  {"steps_per_frame", steps_per_frame_}}
                 .dump();
  }

  void check_in_domain(const Command& c) const {
    const GridSpec& g = cfg_.grid;
    if (!(c.x >= 0.0 && c.x < g.lx && c.y >= 0.0 && c.y < g.ly))
      throw ConfigError(c.type + ": coordinates outside [0, lx) x [0, ly)");
  }

  void apply(int client, const Command& c, std::vector<Outbound>& out) {
    try {
      const std::int64_t step_at = state_->step_count;
      const std::int64_t epoch_at = epoch_;
      if (c.type == "pipette_start" || c.type == "pipette_move") {
        check_in_domain(c);
        if (!state_->has(c.species))
          throw ConfigError(c.type + ": species " + std::string(species_name(c.species)) +
                            " is not part of the " + std::string(to_string(cfg_.variant())) + " variant");
        PipetteAction act{{c.x, c.y}, c.species, c.rate, c.radius};
        if (c.type == "pipette_start" || !stroke_) {
          stroke_ = Stroke{act, act.position, {0.0, 0.0}, 0, 0};
        } else {
          // Straight segment from the current position, covered over the next frame.
          const Vec2 from = stroke_->act.position;
          stroke_ = Stroke{act, from, periodic_displacement(cfg_.grid, from, act.position), 0, steps_per_frame_};
          stroke_->act.position = from;
        }
      } else if (c.type == "pipette_end") {
        stroke_.reset();
      } else if (c.type == "pause") {
        paused_ = true;
      } else if (c.type == "resume") {
        paused_ = false;
      } else if (c.type == "set_speed") {
        steps_per_frame_ = c.steps_per_frame;
      } else if (c.type == "cataclysm") {
        check_in_domain(c);
        if (c.side > std::min(cfg_.grid.lx, cfg_.grid.ly))
          throw ConfigError("cataclysm: side exceeds the domain");
        clear_square(*state_, {c.x, c.y}, c.side);
      } else if (c.type == "reset") {
        start(c.scenario == "current" ? base_ : with_session(preset(c.scenario)));
        ++epoch_;
        out.push_back({Outbound::Kind::control, -1, false, hello()});
        out.push_back({Outbound::Kind::control, -1, false, palette()});
      } else if (c.type == "snapshot_request") {
        const auto bytes = encode_snapshot(to_snapshot(*state_));
        out.push_back({Outbound::Kind::control, client, false,
                       json{{"type", "snapshot"}, {"t", state_->t()}, {"step", state_->step_count},
                            {"bytes", bytes.size()}}.dump()});
        out.push_back({Outbound::Kind::control, client, true, std::string(bytes.begin(), bytes.end())});
      }
      LoggedCommand entry{epoch_at, step_at, c.canonical()};
      if (log_file_.is_open()) log_file_ << log_line(entry) << '\n' << std::flush;
      log_.push_back(std::move(entry));
      out.push_back({Outbound::Kind::control, client, false,
                     json{{"type", "ack"}, {"cmd", c.type}, {"step", step_at}}.dump()});
    } catch (const std::exception& e) {
      out.push_back({Outbound::Kind::control, client, false, error_message(e.what())});
    }
  }

  RunConfig with_session(RunConfig c) const {
    c.session = base_.session;
    c.palette = base_.palette;
    return c;
  }

  // One pipette application per simulation step along the current segment.
  void pipette_step() {
    if (!stroke_) return;
    Stroke& s = *stroke_;
    if (s.k < s.len) {
      ++s.k;
      const double f = static_cast<double>(s.k) / s.len;
      s.act.position = {s.from.x + s.delta.x * f, s.from.y + s.delta.y * f};
    }
    apply_pipette(*state_, s.act, state_->dt);
  }

  std::string stats() {
    AnalysisFrame f = analysis_frame(*state_, cfg_.analysis.spots);
    const auto ev = tracker_->update(f.t, f.spots);
    pending_events_.insert(pending_events_.end(), ev.begin(), ev.end());
    // Keep the most recent events only.
    constexpr std::size_t kRecent = 32;
    if (pending_events_.size() > kRecent)
      pending_events_.erase(pending_events_.begin(), pending_events_.end() - kRecent);
    json masses = json::object();
    const auto sp = state_->species();
    for (std::size_t q = 0; q < sp.size(); ++q) masses[std::string(species_name(sp[q]))] = f.masses[q];
    json spots = json::array();
    int tailed = 0;
    for (const auto& s : f.spots) {
      tailed += s.tailed;
      spots.push_back({{"x", s.centroid.x}, {"y", s.centroid.y}, {"area", s.area}, {"tailed", s.tailed}});
    }
    json events = json::array();
    for (const auto& e : pending_events_)
      events.push_back({{"t", e.t}, {"kind", std::string(to_string(e.kind))}, {"participants", e.participants}});
    pending_events_.clear();
    return json{{"type", "stats"},   {"t", f.t},        {"step", state_->step_count},
                {"n_spots", f.spots.size()}, {"n_tailed", tailed}, {"masses", masses},
                {"spots", spots},    {"events", events}}
        .dump();
  }

  RunConfig base_;
  RunConfig cfg_;
  std::uint64_t seed_;
  std::optional<SimState> state_;
  std::optional<Tracker> tracker_;
  std::optional<Stroke> stroke_;
  bool paused_ = false;
  int steps_per_frame_ = 1;
  std::int64_t epoch_ = 0;
  std::int64_t last_stats_slot_ = -1;
  std::vector<double> lo_, hi_;
  std::vector<LineageEvent> pending_events_;
  std::vector<LoggedCommand> log_;
  std::ofstream log_file_;

  std::mutex queue_mu_;
  std::deque<std::pair<int, Command>> queue_;
  mutable std::mutex hello_mu_;
  std::string hello_;
  std::string palette_;
};

/// Replays a command log headlessly up to (epoch, step). Commands are applied
/// at the same frame boundaries as in the live session.
inline SimState replay_session(const RunConfig& cfg, std::uint64_t seed,
                               const std::vector<LoggedCommand>& log, std::int64_t final_epoch,
                               std::int64_t final_step) {
  SessionCore core(cfg, seed);
  std::size_t i = 0;
  auto here = [&] { return std::pair{core.epoch(), core.state().step_count}; };
  for (;;) {
    // Entries logged in one live batch share a position, except that a reset
    // moves the rest of its batch to (epoch + 1, 0).
    auto pos = here();
    bool queued = false;
    while (i < log.size() && std::pair{log[i].epoch, log[i].step} == pos) {
      if (auto err = core.submit(-1, log[i].command)) throw ConfigError("replay: " + *err);
      if (json::parse(log[i].command)["type"] == "reset") pos = {pos.first + 1, 0};
      ++i;
      queued = true;
    }
    if (!queued && i == log.size() && here() == std::pair{final_epoch, final_step}) break;
    if (!queued && core.paused()) throw ConfigError("replay: log stalls while paused");
    if (i < log.size() && std::pair{log[i].epoch, log[i].step} < here())
      throw ConfigError("replay: log entry precedes the replay position");
    if (i == log.size() && here() > std::pair{final_epoch, final_step})
      throw ConfigError("replay: final position is not on a frame boundary");
    core.tick();
  }
  return core.state();
}

}  // namespace rdspot
