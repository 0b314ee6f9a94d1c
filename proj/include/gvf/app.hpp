#pragma once

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "gvf/analysis.hpp"
#include "gvf/io.hpp"
#include "gvf/scenario.hpp"
#include "gvf/singular.hpp"

namespace gvf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitIo = 3;

namespace app_detail {

inline json load_json_file(const std::string& file) {
  std::ifstream in(file);
  if (!in) throw io_error("cannot read scenario file '" + file + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return json::parse(text);
  } catch (const json::parse_error& err) {
    // convert the byte offset into a line number for the diagnostic
    std::size_t line = 1;
    for (std::size_t i = 0; i < err.byte && i < text.size(); ++i)
      if (text[i] == '\n') ++line;
    throw validation_error("scenario parse error in '" + file + "' near line " +
                           std::to_string(line) + ": " + err.what());
  }
}

inline void write_text_file(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw io_error("cannot open '" + file + "' for writing");
  out << text;
  if (!out) throw io_error("failed while writing '" + file + "'");
}

inline json convergence_json(const ConvergenceReport& rep) {
  json out;
  out["lambda"] = rep.lambda ? json(*rep.lambda) : json(nullptr);
  out["r2"] = rep.r2;
  out["ultimate_bound"] = rep.ultimate_bound;
  out["final_error"] = rep.final_error;
  out["termination"] = to_string(rep.termination);
  return out;
}

// Max |phi_i| over the settled tail (last quarter) of a run.
inline std::optional<std::vector<double>> settled_max_abs_phi(const Trajectory& traj) {
  if (traj.records.size() < 8) return std::nullopt;
  const std::size_t start = (3 * traj.records.size()) / 4;
  std::vector<double> out(traj.records[0].e.size(), 0.0);
  for (std::size_t i = start; i < traj.records.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      out[j] = std::max(out[j], std::abs(traj.records[i].e[static_cast<int>(j)]));
  return out;
}

inline void write_plots(const std::filesystem::path& dir, const Trajectory& traj,
                        const ScenarioRuntime& rt) {
  const detail::CsvLayout lay = detail::csv_layout(rt);
  auto column = [&](int idx) {
    std::vector<double> v;
    if (idx < 0) return v;
    v.reserve(traj.records.size());
    for (const auto& rec : traj.records) v.push_back(rec.state[idx]);
    return v;
  };
  const std::vector<double> xs = column(lay.x);
  const std::vector<double> ys = column(lay.y);
  const std::vector<double> zs = column(lay.z);
  const std::vector<double> ws = column(lay.w);
  std::vector<double> ts, errs;
  for (const auto& rec : traj.records) {
    ts.push_back(rec.t);
    errs.push_back(rec.err_norm);
  }

  // XY view, with the desired path overlaid when a parametric form exists.
  std::vector<PlotSeries> xy;
  if (rt.folded_path && !ws.empty()) {
    const auto [w_lo, w_hi] = std::minmax_element(ws.begin(), ws.end());
    const double margin = rt.period_hint;
    PlotSeries desired;
    desired.color = "#c0392b";
    const int count = 2048;
    for (int i = 0; i < count; ++i) {
      const double w = (*w_lo - margin) + (*w_hi - *w_lo + 2 * margin) * i / (count - 1);
      const Vec p = rt.folded_path->f(w);
      desired.x.push_back(p[0]);
      desired.y.push_back(p[1]);
    }
    xy.push_back(desired);
  }
  xy.push_back({xs, ys, "#1f6fb2"});
  write_svg_plot((dir / "trajectory_xy.svg").string(), "trajectory, XY plane", xy);

  if (lay.z >= 0) {
    std::vector<PlotSeries> xz;
    if (rt.folded_path && !ws.empty()) {
      const auto [w_lo, w_hi] = std::minmax_element(ws.begin(), ws.end());
      const double margin = rt.period_hint;
      PlotSeries desired;
      desired.color = "#c0392b";
      const int count = 2048;
      for (int i = 0; i < count; ++i) {
        const double w = (*w_lo - margin) + (*w_hi - *w_lo + 2 * margin) * i / (count - 1);
        const Vec p = rt.folded_path->f(w);
        desired.x.push_back(p[0]);
        desired.y.push_back(p[2]);
      }
      xz.push_back(desired);
    }
    xz.push_back({xs, zs, "#1f6fb2"});
    write_svg_plot((dir / "trajectory_xz.svg").string(), "trajectory, XZ projection", xz);
  }

  write_svg_plot((dir / "error_norm.svg").string(), "|e(t)|", {{ts, errs, "#1f6fb2"}});
  if (lay.w >= 0) write_svg_plot((dir / "w.svg").string(), "virtual coordinate w(t)", {{ts, ws, "#1f6fb2"}});
  if (lay.unicycle) {
    std::vector<double> betas(traj.records.size(), 0.0);
    for (std::size_t i = 0; i < traj.records.size(); ++i)
      if (traj.records[i].beta) betas[i] = *traj.records[i].beta;
    write_svg_plot((dir / "beta.svg").string(), "heading error beta(t)", {{ts, betas, "#1f6fb2"}});
  }
}

struct SweepRunResult {
  int seed = 0;
  Vec start;
  ConvergenceReport report;
  long records = 0;
};

inline Vec sweep_start(const ScenarioRuntime& rt, const SweepSpec& spec, int index,
                       double& theta_out) {
  const std::uint64_t base = splitmix64(rt.doc.seed ^ 0x5EEDBA5EULL) + 0x9E37ULL * index;
  Vec xi(spec.lo.size());
  for (int i = 0; i < xi.size(); ++i)
    xi[i] = spec.lo[i] +
            (spec.hi[i] - spec.lo[i]) * uniform_from_bits(splitmix64(base + 7919ULL * (i + 1)));
  theta_out = -kPi + 2.0 * kPi * uniform_from_bits(splitmix64(base + 104729ULL));
  return xi;
}

inline Vec sweep_initial_state(const ScenarioRuntime& rt, const Vec& xi, double theta) {
  switch (rt.doc.model) {
    case ModelKind::single_integrator:
    case ModelKind::single_integrator_normalized:
      return xi;
    case ModelKind::extended:
      return extended_initial(ProjectionOperator::drop_last(rt.field.m), xi);
    case ModelKind::unicycle: {
      Vec state0(5);
      state0 << xi[0], xi[1], xi[2], wrap_angle(theta), xi[3];
      return state0;
    }
  }
  throw parameter_error("sweep: unsupported model");
}

inline std::vector<SweepRunResult> run_sweep(const ScenarioRuntime& rt, int count_override = 0,
                                             int threads = 0) {
  if (!rt.doc.sweep) throw validation_error("scenario error at sweep: missing section");
  SweepSpec spec = *rt.doc.sweep;
  if (count_override > 0) spec.count = count_override;
  const int expected_dim = rt.doc.implicit ? rt.field.m : rt.n_physical + 1;
  if (spec.lo.size() != expected_dim)
    throw validation_error("scenario error at sweep.lo: expected " +
                           std::to_string(expected_dim) + " entries");

  std::vector<SweepRunResult> results(spec.count);
  auto worker = [&](int index) {
    double theta = 0.0;
    const Vec xi = sweep_start(rt, spec, index, theta);
    const Vec state0 = sweep_initial_state(rt, xi, theta);
    const Trajectory traj = integrate(rt.dynamics, state0, rt.doc.sim);
    SweepRunResult res;
    res.seed = index;
    res.start = xi;
    res.records = static_cast<long>(traj.records.size());
    if (rt.folded_path) {
      double w_lo = 0.0, w_hi = 0.0;
      for (const auto& rec : traj.records) {
        const double w = rec.state[rt.doc.model == ModelKind::unicycle ? 4 : rt.n_physical];
        w_lo = std::min(w_lo, w);
        w_hi = std::max(w_hi, w);
      }
      res.report = analyze_trajectory(traj, *rt.physical_path,
                                      rt.doc.beta * w_lo - rt.period_hint * rt.doc.beta,
                                      rt.doc.beta * w_hi + rt.period_hint * rt.doc.beta);
    } else {
      ConvergenceReport rep;
      rep.termination = traj.termination;
      if (!traj.records.empty()) {
        rep.final_error = traj.records.back().err_norm;
        const std::size_t start = traj.records.size() / 5;
        for (std::size_t i = start; i < traj.records.size(); ++i)
          rep.ultimate_bound = std::max(rep.ultimate_bound, traj.records[i].err_norm);
      }
      res.report = rep;
    }
    results[index] = res;
  };

  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, spec.count));
  std::vector<std::future<void>> futures;
  std::atomic<int> next{0};
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&]() {
      for (int i = next.fetch_add(1); i < spec.count; i = next.fetch_add(1)) worker(i);
    }));
  }
  for (auto& f : futures) f.get();
  return results;
}

inline json sweep_json(const std::vector<SweepRunResult>& results) {
  json runs = json::array();
  double max_final = 0.0;
  bool all_completed = true;
  for (const auto& res : results) {
    json entry;
    entry["seed"] = res.seed;
    json start = json::array();
    for (int i = 0; i < res.start.size(); ++i) start.push_back(res.start[i]);
    entry["start"] = start;
    entry["final_error"] = res.report.final_error;
    entry["ultimate_bound"] = res.report.ultimate_bound;
    entry["termination"] = to_string(res.report.termination);
    entry["records"] = res.records;
    runs.push_back(entry);
    max_final = std::max(max_final, res.report.final_error);
    all_completed = all_completed && res.report.termination == Termination::completed;
  }
  json out;
  out["runs"] = runs;
  out["max_final_error"] = max_final;
  out["all_completed"] = all_completed;
  return out;
}

}  // namespace app_detail

// Run one scenario document: simulation or singularity scan, depending on
// whether a "scan" section is present. Returns the report document; the
// trajectory is exposed for callers that post-process.
inline json execute_scenario(const ScenarioRuntime& rt, Trajectory* traj_out = nullptr) {
  json report;
  report["model"] = to_string(rt.doc.model);
  report["path"] = rt.doc.path_type;
  report["dt"] = rt.doc.sim.dt;
  report["T"] = rt.doc.sim.T;

  if (rt.doc.scan_box) {
    auto field = [&rt](const Vec& xi) { return rt.field.sample(xi, false).chi; };
    const auto points = singular_scan(field, *rt.doc.scan_box, rt.doc.scan_grid);
    json arr = json::array();
    for (const Vec& p : points) {
      json point = json::array();
      for (int i = 0; i < p.size(); ++i) point.push_back(p[i]);
      arr.push_back(point);
    }
    report["scan"] = {{"count", points.size()}, {"points", arr}, {"grid", rt.doc.scan_grid}};
    report["termination"] = "completed";
    return report;
  }

  const Trajectory traj = integrate(rt.dynamics, rt.x0, rt.doc.sim);
  report["termination"] = to_string(traj.termination);
  report["records"] = traj.records.size();

  ConvergenceReport conv;
  if (rt.physical_path) {
    double w_lo = 0.0, w_hi = 0.0;
    for (const auto& rec : traj.records) {
      const double w = rec.state[rt.doc.model == ModelKind::unicycle ? 4 : rt.n_physical];
      w_lo = std::min(w_lo, w);
      w_hi = std::max(w_hi, w);
    }
    conv = analyze_trajectory(traj, *rt.physical_path,
                              rt.doc.beta * w_lo - rt.doc.beta * rt.period_hint,
                              rt.doc.beta * w_hi + rt.doc.beta * rt.period_hint);

    const GuidingPointTrace trace = guiding_point_trace(
        traj, *rt.folded_path, rt.doc.model == ModelKind::unicycle ? 4 : rt.n_physical);
    int sign_changes = 0;
    for (std::size_t i = 1; i < trace.w_dot_sign.size(); ++i)
      if (trace.w_dot_sign[i] != 0 && trace.w_dot_sign[i - 1] != 0 &&
          trace.w_dot_sign[i] != trace.w_dot_sign[i - 1])
        ++sign_changes;
    report["guiding_point"] = {{"bidirectional", trace.bidirectional},
                               {"sign_changes", sign_changes}};
  } else {
    conv.termination = traj.termination;
    if (!traj.records.empty()) {
      conv.final_error = traj.records.back().err_norm;
      const std::size_t start = traj.records.size() / 5;
      for (std::size_t i = start; i < traj.records.size(); ++i) {
        conv.ultimate_bound = std::max(conv.ultimate_bound, traj.records[i].err_norm);
        conv.err.push_back(traj.records[i].err_norm);
      }
    }
  }
  report["convergence"] = app_detail::convergence_json(conv);

  if (const auto settled = app_detail::settled_max_abs_phi(traj)) {
    report["settled_max_abs_phi"] = *settled;
  }
  if (traj_out) *traj_out = traj;
  return report;
}

inline void write_run_outputs(const std::string& out_dir, const ScenarioRuntime& rt,
                              const json& report, const Trajectory* traj) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    throw io_error("cannot create output directory '" + out_dir + "'");
  const fs::path dir(out_dir);
  app_detail::write_text_file((dir / "scenario.json").string(), rt.doc.raw.dump(2) + "\n");
  app_detail::write_text_file((dir / "report.json").string(), report.dump(2) + "\n");
  if (traj && rt.doc.out_csv) write_trajectory_csv((dir / "trajectory.csv").string(), *traj, rt);
  if (traj && rt.doc.out_svg) app_detail::write_plots(dir, *traj, rt);
}

// ---------------------------------------------------------------------------
// CLI verbs. Exit codes: 0 success (typed early termination included),
// 2 input error, 3 I/O error.
// ---------------------------------------------------------------------------
inline int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const io_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitIo;
  } catch (const validation_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  }
}

inline int cmd_run(const std::string& scenario_file, const std::string& out_dir) {
  return run_guarded([&] {
    const json doc_json = app_detail::load_json_file(scenario_file);
    const ScenarioRuntime rt = build_runtime(parse_scenario(doc_json));
    Trajectory traj;
    const json report = execute_scenario(rt, &traj);
    write_run_outputs(out_dir, rt, report, rt.doc.scan_box ? nullptr : &traj);
    std::cout << "run: termination=" << report["termination"].get<std::string>()
              << " out=" << out_dir << "\n";
  });
}

inline int cmd_scan(const std::string& scenario_file, const std::string& out_dir) {
  return run_guarded([&] {
    const json doc_json = app_detail::load_json_file(scenario_file);
    const ScenarioDoc doc = parse_scenario(doc_json);
    if (!doc.scan_box)
      throw validation_error("scenario error at scan: section required for the scan verb");
    const ScenarioRuntime rt = build_runtime(doc);
    const json report = execute_scenario(rt, nullptr);
    write_run_outputs(out_dir, rt, report, nullptr);
    std::cout << "scan: " << report["scan"]["count"].get<std::size_t>()
              << " singular point(s), out=" << out_dir << "\n";
  });
}

inline int cmd_sweep(const std::string& scenario_file, const std::string& out_dir, int runs = 0,
                     int threads = 0) {
  return run_guarded([&] {
    const json doc_json = app_detail::load_json_file(scenario_file);
    const ScenarioRuntime rt = build_runtime(parse_scenario(doc_json));
    const auto results = app_detail::run_sweep(rt, runs, threads);
    json report;
    report["model"] = to_string(rt.doc.model);
    report["path"] = rt.doc.path_type;
    report["sweep"] = app_detail::sweep_json(results);
    write_run_outputs(out_dir, rt, report, nullptr);
    std::cout << "sweep: " << results.size() << " runs, max_final_error="
              << report["sweep"]["max_final_error"].get<double>() << " out=" << out_dir << "\n";
  });
}

inline int cmd_reproduce(const std::string& name, const std::string& out_dir) {
  return run_guarded([&] {
    const json doc_json = builtin_scenario(name);  // throws on unknown name
    const ScenarioRuntime rt = build_runtime(parse_scenario(doc_json));

    if (name == "circle-impossibility") {
      // origin start stays put; the random starts all converge
      Trajectory origin_traj;
      json report = execute_scenario(rt, &origin_traj);
      double max_displacement = 0.0;
      for (const auto& rec : origin_traj.records)
        max_displacement = std::max(max_displacement, (rec.state - origin_traj.records[0].state).norm());
      const auto results = app_detail::run_sweep(rt);
      int converged = 0;
      for (const auto& res : results)
        if (res.report.termination == Termination::completed && res.report.final_error <= 1e-2)
          ++converged;
      report["impossibility"] = {{"origin_max_displacement", max_displacement},
                                 {"total_runs", results.size()},
                                 {"converged_runs", converged}};
      report["sweep"] = app_detail::sweep_json(results);
      write_run_outputs(out_dir, rt, report, &origin_traj);
      std::cout << "reproduce circle-impossibility: origin stationary ("
                << max_displacement << " m), " << converged << "/" << results.size()
                << " random starts converged, out=" << out_dir << "\n";
      return;
    }

    Trajectory traj;
    const json report = execute_scenario(rt, &traj);
    write_run_outputs(out_dir, rt, report, rt.doc.scan_box ? nullptr : &traj);
    std::cout << "reproduce " << name << ": termination="
              << report["termination"].get<std::string>() << " out=" << out_dir << "\n";
  });
}

}  // namespace gvf
