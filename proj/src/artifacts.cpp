#include "srpt/artifacts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace srpt {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
                          "#7f7f7f", "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39"};

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct Bounds {
  double x0 = std::numeric_limits<double>::infinity();
  double x1 = -std::numeric_limits<double>::infinity();
  double y0 = std::numeric_limits<double>::infinity();
  double y1 = -std::numeric_limits<double>::infinity();

  void add(double x, double y) {
    x0 = std::min(x0, x);
    x1 = std::max(x1, x);
    y0 = std::min(y0, y);
    y1 = std::max(y1, y);
  }
  void pad() {
    if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
    if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
  }
};

// Minimal SVG canvas mapping data coordinates into a fixed-size plot area.
class SvgPlot {
 public:
  SvgPlot(std::string title, Bounds b, double width = 900, double height = 600, bool equal_axes = false)
      : title_(std::move(title)), b_(b), w_(width), h_(height) {
    b_.pad();
    if (equal_axes) {
      const double scale = std::max((b_.x1 - b_.x0) / (w_ - 2 * kMargin), (b_.y1 - b_.y0) / (h_ - 2 * kMargin));
      const double cx = 0.5 * (b_.x0 + b_.x1);
      const double cy = 0.5 * (b_.y0 + b_.y1);
      b_.x0 = cx - 0.5 * scale * (w_ - 2 * kMargin);
      b_.x1 = cx + 0.5 * scale * (w_ - 2 * kMargin);
      b_.y0 = cy - 0.5 * scale * (h_ - 2 * kMargin);
      b_.y1 = cy + 0.5 * scale * (h_ - 2 * kMargin);
    }
    body_ << std::fixed << std::setprecision(2);
  }

  double px(double x) const { return kMargin + (x - b_.x0) / (b_.x1 - b_.x0) * (w_ - 2 * kMargin); }
  double py(double y) const { return h_ - kMargin - (y - b_.y0) / (b_.y1 - b_.y0) * (h_ - 2 * kMargin); }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color, double width = 1.0) {
    body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"" << width << "\" points=\"";
    for (const auto& [x, y] : pts) body_ << px(x) << ',' << py(y) << ' ';
    body_ << "\"/>\n";
  }

  void rect(double x0, double y0, double x1, double y1, const std::string& color) {
    body_ << "<rect x=\"" << px(x0) << "\" y=\"" << py(y1) << "\" width=\"" << px(x1) - px(x0) << "\" height=\""
          << py(y0) - py(y1) << "\" fill=\"" << color << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 12) {
    body_ << "<text x=\"" << x << "\" y=\"" << y << "\" font-size=\"" << size << "\" font-family=\"sans-serif\">"
          << s << "</text>\n";
  }

  void legend(const std::vector<std::string>& labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const double y = kMargin + 14.0 * i;
      body_ << "<rect x=\"" << w_ - 190 << "\" y=\"" << y - 9 << "\" width=\"10\" height=\"10\" fill=\""
            << kPalette[i % std::size(kPalette)] << "\"/>\n";
      text(w_ - 175, y, labels[i], 11);
    }
  }

  void axes(const std::string& xlabel, const std::string& ylabel) {
    body_ << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << w_ - 2 * kMargin << "\" height=\""
          << h_ - 2 * kMargin << "\" fill=\"none\" stroke=\"black\"/>\n";
    std::ostringstream lo, hi;
    lo << std::setprecision(3) << b_.y0;
    hi << std::setprecision(3) << b_.y1;
    text(4, h_ - kMargin, lo.str(), 10);
    text(4, kMargin + 10, hi.str(), 10);
    text(w_ / 2, h_ - 10, xlabel);
    text(4, kMargin - 10, ylabel);
  }

  void write(const std::filesystem::path& path) const {
    auto out = open_for_write(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_ << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << w_ / 2 - 150 << "\" y=\"20\" font-size=\"15\" font-family=\"sans-serif\">" << title_
        << "</text>\n";
    out << body_.str() << "</svg>\n";
  }

 private:
  static constexpr double kMargin = 50.0;
  std::string title_;
  Bounds b_;
  double w_;
  double h_;
  std::ostringstream body_;
};

std::string run_label(const RunLog& log) {
  const std::string set = log.spec.mode == Mode::Driver ? "" : " " + log.spec.noise_label();
  return to_string(log.spec.mode) + set + (log.spec.delay ? " delay" : " no-delay");
}

void trajectory_plot(const std::vector<RunLog>& logs, const TrackModel& track, const std::filesystem::path& path) {
  Bounds b;
  std::vector<std::pair<double, double>> center;
  for (const TrackSample& s : track.samples()) {
    b.add(s.x, s.y);
    center.emplace_back(s.x, s.y);
  }
  SvgPlot plot("Trajectory overlay", b, 900, 700, true);
  plot.polyline(center, "#000000", 3.0);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    std::vector<std::pair<double, double>> path_pts;
    for (std::size_t k = 0; k < logs[i].samples.size(); k += 10) {
      path_pts.emplace_back(logs[i].samples[k].truth.x, logs[i].samples[k].truth.y);
    }
    plot.polyline(path_pts, kPalette[i % std::size(kPalette)], 1.0);
    labels.push_back(run_label(logs[i]));
  }
  plot.legend(labels);
  plot.write(path);
}

void region_bar_plot(const std::vector<RunLog>& logs, const TrackModel& track, const std::filesystem::path& path) {
  const std::size_t regions = track.regions().size();
  std::vector<std::vector<RegionMetrics>> metrics;
  double top = 0.0;
  for (const RunLog& log : logs) {
    metrics.push_back(region_metrics(log, track));
    for (const auto& m : metrics.back()) top = std::max(top, m.rms_dy);
  }
  Bounds b;
  b.add(0.0, 0.0);
  b.add(static_cast<double>(regions), top > 0 ? top * 1.1 : 1.0);
  SvgPlot plot("Region-wise RMS cross-track error [m]", b);
  plot.axes("region", "RMS dY [m]");
  const double width = logs.empty() ? 0.8 : 0.8 / logs.size();
  for (std::size_t r = 0; r < regions; ++r) {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const double x0 = r + 0.1 + width * i;
      plot.rect(x0, 0.0, x0 + width, metrics[i][r].rms_dy, kPalette[i % std::size(kPalette)]);
    }
    plot.text(plot.px(r + 0.45), plot.py(0.0) + 15, std::string(1, track.regions()[r].label));
  }
  std::vector<std::string> labels;
  for (const RunLog& log : logs) labels.push_back(run_label(log));
  plot.legend(labels);
  plot.write(path);
}

void divergence_plot(const std::vector<RunLog>& logs, const std::filesystem::path& path) {
  std::vector<std::vector<DivergenceSample>> series;
  std::vector<std::string> labels;
  Bounds b;
  for (const RunLog& log : logs) {
    if (log.spec.mode != Mode::SrptEkf) continue;
    series.push_back(divergence_window(log));
    labels.push_back(run_label(log));
    for (const auto& d : series.back()) b.add(d.t, d.ey);
  }
  SvgPlot plot("300 ms divergence window: lateral error [m]", b);
  plot.axes("t [s]", "e_y [m]");
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::vector<std::pair<double, double>> pts;
    for (std::size_t k = 0; k < series[i].size(); k += 5) pts.emplace_back(series[i][k].t, series[i][k].ey);
    plot.polyline(pts, kPalette[i % std::size(kPalette)]);
  }
  plot.legend(labels);
  plot.write(path);
}

}  // namespace

std::string metrics_csv(const std::vector<RunLog>& logs, const TrackModel& track) {
  std::ostringstream out;
  out << kMetricsHeader << '\n' << std::fixed << std::setprecision(6);
  for (const RunLog& log : logs) {
    for (const RegionMetrics& m : region_metrics(log, track)) {
      out << m.region << ',' << to_string(log.spec.mode) << ',' << log.spec.noise_label() << ','
          << (log.spec.delay ? "on" : "off") << ',' << m.max_abs_dy << ',' << m.rms_dy << ',' << m.min_speed << ','
          << m.steer_reversals << ',' << m.min_commanded_speed << ',' << rad_to_deg(m.max_beta_error) << ','
          << (m.valid ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

ArtifactPaths export_artifacts(const std::vector<RunLog>& logs, const TrackModel& track,
                               const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "traces", ec);
  if (ec) throw std::runtime_error("cannot create " + (out_dir / "traces").string() + ": " + ec.message());

  ArtifactPaths paths;
  paths.metrics = out_dir / "metrics.csv";
  open_for_write(paths.metrics) << metrics_csv(logs, track);

  for (const RunLog& log : logs) {
    const auto trace = out_dir / "traces" / (log.spec.name() + ".csv");
    log.write_csv(trace.string());
    paths.traces.push_back(trace);
  }

  paths.plots = {out_dir / "trajectory.svg", out_dir / "region_bars.svg", out_dir / "divergence.svg"};
  trajectory_plot(logs, track, paths.plots[0]);
  region_bar_plot(logs, track, paths.plots[1]);
  divergence_plot(logs, paths.plots[2]);
  return paths;
}

}  // namespace srpt
