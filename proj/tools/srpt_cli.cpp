#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iomanip>
#include <iostream>

#include "srpt/analysis.hpp"
#include "srpt/artifacts.hpp"
#include "srpt/harness.hpp"

namespace {

srpt::SimulationConfig load_config(const std::string& path) {
  srpt::SimulationConfig cfg;
  if (!path.empty()) cfg.apply(srpt::KeyValueConfig::from_file(path));
  return cfg;
}

bool parse_delay(const std::string& text) {
  if (text == "on") return true;
  if (text == "off") return false;
  throw std::invalid_argument("--delay expects on or off, got '" + text + "'");
}

void print_summary(const std::vector<srpt::RunLog>& logs, const srpt::TrackModel& track) {
  for (const auto& log : logs) {
    std::cout << log.spec.name() << ": " << (log.diverged ? "DIVERGED (" + log.divergence_reason + ")" : "completed")
              << ", " << log.samples.size() << " samples\n";
    for (const auto& m : srpt::region_metrics(log, track)) {
      if (!m.valid) continue;
      std::cout << "  " << m.region << std::fixed << std::setprecision(3) << "  max|dY|=" << m.max_abs_dy
                << "  rms=" << m.rms_dy << "  minV=" << m.min_speed << "  minVcmd=" << m.min_commanded_speed
                << "  reversals=" << m.steer_reversals << "  max|dbeta|=" << srpt::rad_to_deg(m.max_beta_error)
                << " deg\n";
    }
  }
}

int report(const std::vector<srpt::RunLog>& logs, const srpt::TrackModel& track, const std::string& out) {
  print_summary(logs, track);
  const auto paths = srpt::export_artifacts(logs, track, out);
  std::cout << "wrote " << paths.metrics.string() << " and " << paths.traces.size() << " trace(s)\n";
  for (const auto& log : logs) {
    if (log.diverged) return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delayed teleoperation simulator with successive reference pose tracking"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value overrides (vehicle.*, nmpc.*, delay.*, ...)")
      ->check(CLI::ExistingFile);

  std::string mode = "srpt-ekf";
  std::string noise_set = "ii";
  std::string delay = "on";
  std::uint64_t seed = 1;
  std::string out = "out";

  auto* run = app.add_subcommand("run", "Simulate one lap");
  run->add_option("--mode", mode, "srpt-true | srpt-ekf | driver");
  run->add_option("--noise-set", noise_set, "i..vi");
  run->add_option("--delay", delay, "on | off");
  run->add_option("--seed", seed);
  run->add_option("--out", out, "output directory");

  auto* grid = app.add_subcommand("grid", "Run the 14-run experiment grid");
  grid->add_option("--seed", seed);
  grid->add_option("--out", out, "output directory");

  std::string log_path;
  std::string q_out;
  int max_iter = srpt::TuningConfig{}.max_iterations;
  auto* tune_q = app.add_subcommand("tune-q", "Tune the EKF process noise on a recorded lap");
  tune_q->add_option("--log", log_path, "lap log CSV (see record-lap)")->required()->check(CLI::ExistingFile);
  tune_q->add_option("--out", q_out, "write the tuned variances as q.* keys");
  tune_q->add_option("--max-iter", max_iter);
  bool from_q0 = false;
  tune_q->add_flag("--from-q0", from_q0, "start from uniform 1e-5 variances instead of the defaults");

  auto* tune_k1 = app.add_subcommand("tune-k1", "Sweep the look-ahead driver gain k1");
  tune_k1->add_option("--delay", delay, "on | off");
  tune_k1->add_option("--seed", seed);

  std::string lap_out = "lap.csv";
  auto* record = app.add_subcommand("record-lap", "Record a no-delay SRPT-EKF lap for tune-q");
  record->add_option("--noise-set", noise_set, "ii..vi");
  record->add_option("--seed", seed);
  record->add_option("--out", lap_out);

  std::string track_out = "track.csv";
  auto* export_track = app.add_subcommand("export-track", "Write the track centerline CSV");
  export_track->add_option("--out", track_out);

  CLI11_PARSE(app, argc, argv);

  try {
    const srpt::SimulationConfig cfg = load_config(config_path);
    const srpt::TrackModel track = srpt::build_track();

    if (*run) {
      const srpt::ExperimentSpec spec{srpt::parse_mode(mode), srpt::parse_noise_set(noise_set), parse_delay(delay),
                                      seed};
      return report({srpt::run_experiment(spec, cfg, track)}, track, out);
    }
    if (*grid) {
      return report(srpt::run_grid(srpt::full_grid(seed), cfg, track), track, out);
    }
    if (*record) {
      const srpt::RunLog log =
          srpt::run_experiment({srpt::Mode::SrptEkf, srpt::parse_noise_set(noise_set), false, seed}, cfg, track);
      log.lap.write_csv(lap_out);
      std::cout << "wrote " << log.lap.samples.size() << " rows to " << lap_out << '\n';
      return log.diverged ? 2 : 0;
    }
    if (*tune_q) {
      const srpt::LapLog lap = srpt::LapLog::read_csv(log_path);
      srpt::TuningConfig tcfg;
      tcfg.max_iterations = max_iter;
      const srpt::ProcessCovariance initial =
          from_q0 ? srpt::ProcessCovariance::uniform(1e-4 / 10.0) : cfg.q;
      const auto result = srpt::tune_process_covariance(lap, tcfg, cfg.r, cfg.vehicle, initial);
      std::cout << "cost " << result.initial_cost << " -> " << result.cost << " after " << result.iterations
                << " iterations (" << result.evaluations << " evaluations)\nvariances:";
      for (int i = 0; i < srpt::kStateSize; ++i) std::cout << ' ' << result.q.variances[i];
      std::cout << '\n';
      if (!q_out.empty()) result.q.write(q_out);
      return 0;
    }
    if (*tune_k1) {
      const bool with_delay = parse_delay(delay);
      const auto grid_values = srpt::k1_grid();
      const auto sweep = srpt::select_k1(grid_values, [&](double k1) {
        return srpt::evaluate_driver_gain(k1, cfg, track, with_delay, seed);
      });
      for (const auto& [k1, score] : sweep.scores) {
        std::cout << std::fixed << std::setprecision(3) << "k1=" << k1 << "  rms=" << score.rms_lateral
                  << "  max=" << score.max_lateral << (score.diverged ? "  diverged" : "") << '\n';
      }
      std::cout << "selected k1 = " << sweep.k1 << '\n';
      return 0;
    }
    if (*export_track) {
      track.write_csv(track_out);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
