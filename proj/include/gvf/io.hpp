#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "gvf/errors.hpp"
#include "gvf/scenario.hpp"
#include "gvf/sim.hpp"

namespace gvf {

// 17 significant digits, '.' decimal separator, enough to round-trip a double.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

// How trajectory states map onto the fixed CSV columns.
struct CsvLayout {
  int x = -1, y = -1, z = -1, w = -1;
  bool unicycle = false;
};

inline CsvLayout csv_layout(const ScenarioRuntime& rt) {
  CsvLayout lay;
  if (rt.doc.model == ModelKind::unicycle) {
    lay = {0, 1, 2, 4, true};
  } else if (rt.doc.implicit) {
    lay = {0, 1, -1, -1, false};
  } else if (rt.n_physical == 2) {
    lay = {0, 1, -1, 2, false};
  } else {
    lay = {0, 1, 2, 3, false};
  }
  return lay;
}

}  // namespace detail

// One row per record; blank cells where a column does not apply to the model.
inline void write_trajectory_csv(const std::string& file, const Trajectory& traj,
                                 const ScenarioRuntime& rt) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot open '" + file + "' for writing");
  const detail::CsvLayout lay = detail::csv_layout(rt);
  const int err_dims = traj.records.empty() ? 0 : static_cast<int>(traj.records[0].e.size());
  const int chi_dims = traj.records.empty() ? 0 : static_cast<int>(traj.records[0].chi.size());

  out << "# t[s],x[m],y[m],z[m],w,theta[rad]";
  for (int i = 1; i <= err_dims; ++i) out << ",phi_" << i << "[m]";
  out << ",err_norm,V,beta[rad]";
  for (int i = 1; i <= chi_dims; ++i) out << ",chi_" << i;
  out << "\n";

  auto cell = [](const TrajectoryRecord& rec, int idx) {
    return (idx >= 0 && idx < rec.state.size()) ? fmt17(rec.state[idx]) : std::string();
  };
  for (const auto& rec : traj.records) {
    out << fmt17(rec.t) << ',' << cell(rec, lay.x) << ',' << cell(rec, lay.y) << ','
        << cell(rec, lay.z) << ',' << cell(rec, lay.w) << ','
        << (rec.theta ? fmt17(*rec.theta) : std::string());
    for (int i = 0; i < err_dims; ++i) out << ',' << fmt17(rec.e[i]);
    out << ',' << fmt17(rec.err_norm) << ',' << fmt17(rec.V) << ','
        << (rec.beta ? fmt17(*rec.beta) : std::string());
    for (int i = 0; i < chi_dims; ++i) out << ',' << fmt17(rec.chi[i]);
    out << '\n';
  }
  if (!out) throw io_error("failed while writing '" + file + "'");
}

// ---------------------------------------------------------------------------
// Minimal SVG plotting: polylines in a framed canvas, no dependencies.
// ---------------------------------------------------------------------------
struct PlotSeries {
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f6fb2";
};

inline void write_svg_plot(const std::string& file, const std::string& title,
                           const std::vector<PlotSeries>& series) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot open '" + file + "' for writing");

  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool first = true;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (first) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        first = false;
      }
      x_min = std::min(x_min, s.x[i]);
      x_max = std::max(x_max, s.x[i]);
      y_min = std::min(y_min, s.y[i]);
      y_max = std::max(y_max, s.y[i]);
    }
  }
  if (x_max == x_min) x_max = x_min + 1.0;
  if (y_max == y_min) y_max = y_min + 1.0;
  const double pad_x = 0.05 * (x_max - x_min);
  const double pad_y = 0.05 * (y_max - y_min);
  x_min -= pad_x;
  x_max += pad_x;
  y_min -= pad_y;
  y_max += pad_y;

  const double W = 720.0, H = 520.0, ml = 60.0, mr = 20.0, mt = 40.0, mb = 45.0;
  auto px = [&](double x) { return ml + (x - x_min) / (x_max - x_min) * (W - ml - mr); };
  auto py = [&](double y) { return H - mb - (y - y_min) / (y_max - y_min) * (H - mt - mb); };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return std::string(buf);
  };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << W - ml - mr << "\" height=\""
      << H - mt - mb << "\" fill=\"white\" stroke=\"#444\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  out << "<text x=\"" << ml << "\" y=\"" << H - 14 << "\" font-size=\"11\">" << num(x_min)
      << "</text>\n";
  out << "<text x=\"" << W - mr << "\" y=\"" << H - 14
      << "\" text-anchor=\"end\" font-size=\"11\">" << num(x_max) << "</text>\n";
  out << "<text x=\"8\" y=\"" << H - mb << "\" font-size=\"11\">" << num(y_min) << "</text>\n";
  out << "<text x=\"8\" y=\"" << mt + 10 << "\" font-size=\"11\">" << num(y_max) << "</text>\n";

  for (const auto& s : series) {
    if (s.x.empty()) continue;
    // cap the emitted vertex count; plots stay faithful at this resolution
    const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 4096);
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); i += stride)
      out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
    const std::size_t last = s.x.size() - 1;
    out << num(px(s.x[last])) << ',' << num(py(s.y[last]));
    out << "\"/>\n";
  }
  out << "</svg>\n";
  if (!out) throw io_error("failed while writing '" + file + "'");
}

}  // namespace gvf
