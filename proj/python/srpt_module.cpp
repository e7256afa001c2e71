#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "srpt/analysis.hpp"
#include "srpt/artifacts.hpp"
#include "srpt/harness.hpp"

namespace py = pybind11;
using namespace srpt;

namespace {

/// A finished run plus the track it was driven on.
struct RunResult {
  RunLog log;
  std::shared_ptr<const TrackModel> track;
};

py::array_t<double> column(const RunLog& log, double (*get)(const RunSample&)) {
  py::array_t<double> out(static_cast<py::ssize_t>(log.samples.size()));
  auto view = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < log.samples.size(); ++i) view(i) = get(log.samples[i]);
  return out;
}

py::array_t<double> states(const RunLog& log, bool estimate) {
  py::array_t<double> out({static_cast<py::ssize_t>(log.samples.size()), static_cast<py::ssize_t>(kStateSize)});
  auto view = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    const StateVector x = (estimate ? log.samples[i].estimate : log.samples[i].truth).to_vector();
    for (int j = 0; j < kStateSize; ++j) view(i, j) = x[j];
  }
  return out;
}

std::shared_ptr<const TrackModel> default_track() {
  static const auto track = std::make_shared<const TrackModel>(build_track());
  return track;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the SRPT teleoperation simulator";

  py::register_exception<SimulationError>(m, "SimulationError", PyExc_RuntimeError);

  py::class_<Pose>(m, "Pose")
      .def(py::init<double, double, double>(), py::arg("x") = 0.0, py::arg("y") = 0.0, py::arg("psi") = 0.0)
      .def_readwrite("x", &Pose::x)
      .def_readwrite("y", &Pose::y)
      .def_readwrite("psi", &Pose::psi)
      .def("__repr__", [](const Pose& p) {
        return "Pose(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " + std::to_string(p.psi) + ")";
      });

  m.def(
      "relative_pose",
      [](const Pose& a, const Pose& b) {
        const RelativePose r = relative_pose(a, b);
        return py::make_tuple(r.dx, r.dy, r.dpsi);
      },
      py::arg("a"), py::arg("b"), "Pose of b in the frame of a, as (dx, dy, dpsi).");

  m.def(
      "lookahead_distance",
      [](double vx, double tau, double horizon, double l_front) {
        return lookahead_distance(vx, tau, LookaheadConfig{horizon, l_front});
      },
      py::arg("vx"), py::arg("tau"), py::arg("horizon") = 1.0, py::arg("l_front") = 1.3);

  m.def(
      "sample_downlink_delays",
      [](std::size_t n, std::uint64_t seed) {
        const DelayModel model;
        std::mt19937_64 rng(seed);
        py::array_t<double> out(static_cast<py::ssize_t>(n));
        auto view = out.mutable_unchecked<1>();
        for (std::size_t i = 0; i < n; ++i) view(i) = sample_downlink_delay(model, rng);
        return out;
      },
      py::arg("n"), py::arg("seed") = 1);

  py::class_<TrackModel, std::shared_ptr<TrackModel>>(m, "Track")
      .def_property_readonly("total_length", &TrackModel::total_length)
      .def("pose_at", &TrackModel::pose_at, py::arg("s"))
      .def("curvature_at", &TrackModel::curvature_at, py::arg("s"))
      .def("region", [](const TrackModel& t, const std::string& label) {
        if (label.size() != 1) throw py::value_error("region label must be one character");
        const TrackRegion& r = t.region(label[0]);
        return py::make_tuple(r.begin, r.end, r.mu, r.wind);
      })
      .def("mu_at", [](const TrackModel& t, double s) { return environment_at(t, s).mu; }, py::arg("s"))
      .def("wind_at", [](const TrackModel& t, double s) { return environment_at(t, s).wind_speed_lateral; },
           py::arg("s"));

  m.def("build_track", [] { return std::const_pointer_cast<TrackModel>(default_track()); });

  py::class_<RegionMetrics>(m, "RegionMetrics")
      .def_property_readonly("region", [](const RegionMetrics& r) { return std::string(1, r.region); })
      .def_readonly("valid", &RegionMetrics::valid)
      .def_readonly("samples", &RegionMetrics::samples)
      .def_readonly("max_abs_dy", &RegionMetrics::max_abs_dy)
      .def_readonly("rms_dy", &RegionMetrics::rms_dy)
      .def_readonly("min_speed", &RegionMetrics::min_speed)
      .def_readonly("min_commanded_speed", &RegionMetrics::min_commanded_speed)
      .def_readonly("steer_reversals", &RegionMetrics::steer_reversals)
      .def_readonly("max_beta_error", &RegionMetrics::max_beta_error);

  py::class_<RunResult>(m, "RunResult")
      .def_property_readonly("name", [](const RunResult& r) { return r.log.spec.name(); })
      .def_property_readonly("diverged", [](const RunResult& r) { return r.log.diverged; })
      .def_property_readonly("divergence_reason", [](const RunResult& r) { return r.log.divergence_reason; })
      .def_property_readonly("completed", [](const RunResult& r) { return r.log.completed; })
      .def_property_readonly("commands_out_of_bounds", [](const RunResult& r) { return r.log.commands_out_of_bounds; })
      .def_property_readonly("max_update_pose_correction",
                             [](const RunResult& r) { return r.log.max_update_pose_correction; })
      .def_property_readonly("t", [](const RunResult& r) { return column(r.log, [](const RunSample& s) { return s.t; }); })
      .def_property_readonly("s", [](const RunResult& r) { return column(r.log, [](const RunSample& s) { return s.s; }); })
      .def_property_readonly("dy", [](const RunResult& r) { return column(r.log, [](const RunSample& s) { return s.dy; }); })
      .def_property_readonly("steer_rate", [](const RunResult& r) {
        return column(r.log, [](const RunSample& s) { return s.command.steer_rate; });
      })
      .def_property_readonly("accel", [](const RunResult& r) {
        return column(r.log, [](const RunSample& s) { return s.command.accel; });
      })
      .def_property_readonly("truth", [](const RunResult& r) { return states(r.log, false); },
                             "N x 9 array: beta, yaw rate, heading, Fy front, Fy rear, vx, x, y, steer")
      .def_property_readonly("estimate", [](const RunResult& r) { return states(r.log, true); })
      .def("region_metrics", [](const RunResult& r) { return region_metrics(r.log, *r.track); })
      .def("divergence_window",
           [](const RunResult& r, double window) {
             const auto series = divergence_window(r.log, window);
             py::array_t<double> out({static_cast<py::ssize_t>(series.size()), py::ssize_t{4}});
             auto view = out.mutable_unchecked<2>();
             for (std::size_t i = 0; i < series.size(); ++i) {
               view(i, 0) = series[i].t;
               view(i, 1) = series[i].ex;
               view(i, 2) = series[i].ey;
               view(i, 3) = series[i].epsi;
             }
             return out;
           },
           py::arg("window") = 0.3, "Rows of (t, ex, ey, epsi).")
      .def("write_csv", [](const RunResult& r, const std::string& path) { r.log.write_csv(path); });

  m.def(
      "run",
      [](const std::string& mode, const std::string& noise_set, bool delay, std::uint64_t seed,
         std::optional<double> stop_at, std::optional<std::string> config) {
        SimulationConfig cfg;
        if (config) cfg.apply(KeyValueConfig::from_file(*config));
        if (stop_at) cfg.stop_at_arclength = stop_at;
        const ExperimentSpec spec{parse_mode(mode), parse_noise_set(noise_set), delay, seed};
        RunResult result;
        result.track = default_track();
        {
          py::gil_scoped_release release;
          result.log = run_experiment(spec, cfg, *result.track);
        }
        return result;
      },
      py::arg("mode") = "srpt-ekf", py::arg("noise_set") = "ii", py::arg("delay") = true, py::arg("seed") = 1,
      py::arg("stop_at") = py::none(), py::arg("config") = py::none(),
      "Runs one experiment. mode: srpt-true | srpt-ekf | driver; noise_set: i..vi.");

  m.def(
      "metrics_csv",
      [](const std::vector<const RunResult*>& runs) {
        std::vector<RunLog> logs;
        for (const RunResult* r : runs) logs.push_back(r->log);
        return metrics_csv(logs, *default_track());
      },
      py::arg("runs"));
}
