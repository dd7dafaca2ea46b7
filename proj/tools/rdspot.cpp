// rdspot command-line entry point.
//
// Exit codes: 0 success, 1 configuration or input error, 2 numerical divergence.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rdspot/config.hpp"
#include "rdspot/experiments.hpp"
#include "rdspot/io.hpp"
#include "rdspot/server.hpp"
#include "rdspot/session.hpp"
#include "rdspot/snapshot.hpp"

namespace fs = std::filesystem;
using namespace rdspot;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDiverged = 2;

RunConfig load(const std::string& path, const std::string& out, int threads) {
  RunConfig cfg = load_config_file(path);
  if (!out.empty()) cfg.output.dir = out;
  if (threads >= 0) cfg.threads = threads;
  cfg.validate();
  return cfg;
}

int cmd_run(const std::string& config, const std::string& out, int threads) {
  RunConfig cfg = load(config, out, threads);
  if (cfg.output.dir.empty()) cfg.output.dir = "out";
  const ScenarioReport rep = run_scenario(cfg);
  const auto& a = rep.aggregate;
  std::printf("scenario %s: %d seed(s) ok, %d failed; deaths %d, divisions %d\n",
              cfg.scenario.c_str(), a.seeds_ok, a.seeds_failed, a.deaths, a.divisions);
  for (const auto& s : rep.seeds)
    if (!s.ok) std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
  std::printf("outputs in %s\n", cfg.output.dir.c_str());
  return rep.any_diverged() ? kDiverged : (a.seeds_failed ? kConfigError : kOk);
}

int cmd_sweep(const std::string& config, const std::string& out, int threads) {
  RunConfig cfg = load(config, out, threads);
  if (!cfg.sweep) throw ConfigError(config + ": no sweep section");
  if (cfg.output.dir.empty()) cfg.output.dir = "out";
  const SweepResult res = run_sweep(cfg);
  int extinct = 0, diverged = 0, spotty = 0;
  for (const auto& r : res.rows) {
    extinct += r.extinct;
    diverged += r.status == "diverged";
    spotty += r.n_spots >= 5;
  }
  std::printf("sweep: %zu cells, %d extinct, %d with >= 5 spots, %d diverged; atlas in %s/atlas.csv\n",
              res.rows.size(), extinct, spotty, diverged, cfg.output.dir.c_str());
  // Diverged cells are part of the atlas (status column), not a failed sweep.
  return kOk;
}

int cmd_analyze(const std::string& run_dir, std::string out) {
  const RunConfig cfg = load_config_file((fs::path(run_dir) / "resolved_config.json").string());
  for (std::uint64_t seed : cfg.seeds) {
    const std::string dir = seed_dir(run_dir, seed);
    if (!fs::is_directory(dir)) throw ConfigError(dir + ": missing seed directory");
    const OfflineResult r = analyze_snapshots(cfg, dir);
    const std::string target = out.empty() ? dir + "/analysis" : seed_dir(out, seed);
    fs::create_directories(target);
    write_text_file(target + "/series.csv", series_csv(r.frames, r.names, cfg.zones));
    write_text_file(target + "/events.csv", events_csv(r.events));
    std::printf("seed %llu: %zu frames -> %s\n", static_cast<unsigned long long>(seed), r.frames.size(),
                target.c_str());
  }
  return kOk;
}

int cmd_render(const std::string& snapshot, const std::string& out, const std::string& config) {
  Palette pal;
  if (!config.empty()) pal = load_config_file(config).palette;
  Snapshot snap;
  try {
    snap = read_snapshot_file(snapshot);
  } catch (const SnapshotError& e) {
    throw ConfigError(snapshot + ": " + e.what());
  }
  write_png(out, render_snapshot(snap, pal.b_max, pal.c_max, pal.p_max));
  std::printf("%s -> %s (%dx%d)\n", snapshot.c_str(), out.c_str(), snap.nx, snap.ny);
  return kOk;
}

int cmd_serve(const std::string& config, int port, const std::string& address, std::uint64_t seed,
              const std::string& log) {
  const RunConfig cfg = load(config, "", -1);
  SessionCore core(cfg, seed);
  if (!log.empty()) core.set_log_file(log);
  // Signals are taken synchronously by this thread only.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  SessionServer server(core, static_cast<unsigned short>(port), address);
  server.start();
  std::printf("serving %s on ws://%s:%u\n", cfg.scenario.c_str(), address.c_str(), server.port());
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  server.stop();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reaction-diffusion spot simulator"};
  app.require_subcommand(1);

  std::string config, out, snapshots, snapshot, address = "127.0.0.1", log;
  int threads = -1, port = 8765;
  std::uint64_t seed = 1;

  auto* run = app.add_subcommand("run", "Run a scenario");
  run->add_option("--config", config, "Scenario JSON")->required();
  run->add_option("--out", out, "Output directory (overrides output.dir)");
  run->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--config", config, "Sweep JSON")->required();
  sweep->add_option("--out", out, "Output directory (overrides output.dir)");
  sweep->add_option("--threads", threads, "Worker threads (0: all cores)");

  auto* serve = app.add_subcommand("serve", "Start a live steering session");
  serve->add_option("--config", config, "Scenario JSON")->required();
  serve->add_option("--port", port, "TCP port (0: any free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--seed", seed, "Initial-condition seed");
  serve->add_option("--log", log, "Append applied commands to this file");

  auto* analyze = app.add_subcommand("analyze", "Recompute analysis from stored snapshots");
  analyze->add_option("--snapshots", snapshots, "Run output directory")->required();
  analyze->add_option("--out", out, "Directory for recomputed CSVs");

  auto* render = app.add_subcommand("render", "Render a snapshot to PNG");
  render->add_option("--snapshot", snapshot, "RDS1 file")->required();
  render->add_option("--out", out, "PNG path")->required();
  render->add_option("--config", config, "Config whose palette to use");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*run) return cmd_run(config, out, threads);
    if (*sweep) return cmd_sweep(config, out, threads);
    if (*serve) return cmd_serve(config, port, address, seed, log);
    if (*analyze) return cmd_analyze(snapshots, out);
    if (*render) return cmd_render(snapshot, out, config);
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
