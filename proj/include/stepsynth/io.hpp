#pragma once

// Trajectory CSV, run summary JSON, phase-plane SVG and flat config files.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "stepsynth/chain_gramian.hpp"
#include "stepsynth/ctrl_fn.hpp"
#include "stepsynth/mappability.hpp"
#include "stepsynth/sim.hpp"

namespace stepsynth {

using Json = nlohmann::json;

inline constexpr int kSummarySchemaVersion = 1;

inline std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  return buf;
}

// 0 none, 1 branch-switch, 2 step-complete, 3 surface-slide; the last event
// recorded at a sample wins.
inline std::vector<int> event_flags(const Trajectory& traj) {
  std::vector<int> flags(traj.size(), 0);
  for (const Event& e : traj.events) {
    if (e.sample < flags.size()) flags[e.sample] = static_cast<int>(e.kind) + 1;
  }
  return flags;
}

// n < 0 infers the dimension from the first sample.
inline void write_csv(std::ostream& os, const Trajectory& traj, int n = -1) {
  if (n < 0) n = traj.empty() ? 0 : static_cast<int>(traj.x.front().size());
  os << "t";
  for (int i = 1; i <= n; ++i) os << ",x" << i;
  for (int i = 1; i <= n; ++i) os << ",z" << i;
  os << ",u,event\n";
  const auto flags = event_flags(traj);
  for (std::size_t s = 0; s < traj.size(); ++s) {
    os << fmt12(traj.times[s]);
    for (int i = 0; i < n; ++i) os << ',' << fmt12(traj.x[s](i));
    for (int i = 0; i < n; ++i) os << ',' << fmt12(traj.z[s](i));
    os << ',' << fmt12(traj.controls[s]) << ',' << flags[s] << '\n';
  }
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  return f;
}

inline void close_out(std::ofstream& f, const std::filesystem::path& path) {
  f.close();
  if (!f) throw IoError("failed writing '" + path.string() + "'");
}

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(row);
  }
  return a;
}

}  // namespace detail

inline void emit_csv(const Trajectory& traj, const std::filesystem::path& path, int n = -1) {
  auto f = detail::open_out(path);
  write_csv(f, traj, n);
  detail::close_out(f, path);
}

inline Json summary_json(const RunSummary& s) {
  Json j;
  j["schema_version"] = kSummarySchemaVersion;
  j["scenario"] = s.scenario;
  j["x0"] = detail::vec_json(s.x0);
  j["params"] = s.params;
  j["T_total"] = s.T_total;
  j["step_times"] = s.step_times;
  Json steps = Json::array();
  for (const StepRecord& r : s.steps) {
    Json st;
    st["i"] = r.i;
    st["T_start"] = r.t_start;
    st["T_end"] = r.t_end;
    st["theta_bound"] = r.theta_bound ? Json(*r.theta_bound) : Json(nullptr);
    st["policy"] = r.policy;
    st["switch_times"] = r.switch_times;
    steps.push_back(st);
  }
  j["steps"] = steps;
  j["hold_residuals"] = s.hold_residuals;
  j["final_state_norm"] = s.final_state_norm;
  return j;
}

inline void emit_json(const RunSummary& s, const std::filesystem::path& path) {
  auto f = detail::open_out(path);
  f << summary_json(s).dump(2) << '\n';
  detail::close_out(f, path);
}

// Polyline of coordinates (i, j), 1-based, with circles at events.
inline void write_svg(std::ostream& os, const Trajectory& traj, std::pair<int, int> proj,
                      bool z_chart = false) {
  const auto& pts = z_chart ? traj.z : traj.x;
  const int n = pts.empty() ? 0 : static_cast<int>(pts.front().size());
  const auto [pi, pj] = proj;
  if (pi < 1 || pj < 1 || pi > n || pj > n) {
    throw ValidationError("svg projection (" + std::to_string(pi) + "," + std::to_string(pj) +
                          ") outside 1.." + std::to_string(n));
  }
  double xmin = pts[0](pi - 1), xmax = xmin, ymin = pts[0](pj - 1), ymax = ymin;
  for (const Vec& p : pts) {
    xmin = std::min(xmin, p(pi - 1));
    xmax = std::max(xmax, p(pi - 1));
    ymin = std::min(ymin, p(pj - 1));
    ymax = std::max(ymax, p(pj - 1));
  }
  const double w = std::max(xmax - xmin, 1e-9), h = std::max(ymax - ymin, 1e-9);
  const double pad = 0.05 * std::max(w, h);
  const double stroke = 0.004 * std::max(w, h);
  // SVG y grows downward; plot -y so the picture reads like the usual phase plane.
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" viewBox=\""
     << xmin - pad << ' ' << -ymax - pad << ' ' << w + 2 * pad << ' ' << h + 2 * pad
     << "\" preserveAspectRatio=\"none\">\n";
  os << "<title>" << (z_chart ? 'z' : 'x') << pi << " vs " << (z_chart ? 'z' : 'x') << pj
     << "</title>\n";
  os << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"" << stroke << "\" points=\"";
  for (const Vec& p : pts) os << p(pi - 1) << ',' << -p(pj - 1) << ' ';
  os << "\"/>\n";
  static const char* colors[] = {"#d62728", "#2ca02c", "#ff7f0e"};
  for (const Event& e : traj.events) {
    const Vec& p = pts.at(e.sample);
    os << "<circle cx=\"" << p(pi - 1) << "\" cy=\"" << -p(pj - 1) << "\" r=\"" << 3 * stroke
       << "\" fill=\"" << colors[static_cast<int>(e.kind)] << "\"><title>" << to_string(e.kind)
       << " t=" << e.t << "</title></circle>\n";
  }
  os << "</svg>\n";
}

inline void emit_svg(const Trajectory& traj, std::pair<int, int> proj,
                     const std::filesystem::path& path, bool z_chart = false) {
  if (traj.empty()) throw ValidationError("svg: empty trajectory");
  std::ostringstream os;
  write_svg(os, traj, proj, z_chart);
  auto f = detail::open_out(path);
  f << os.str();
  detail::close_out(f, path);
}

inline Json theta_json(const ThetaEval& e) {
  return {{"theta", e.theta}, {"w", detail::vec_json(e.w)}, {"v", e.v}, {"sigma", e.sigma}};
}

inline Json gram_json(const GramSet& g, std::optional<double> theta = {}) {
  Json j;
  j["k"] = g.dim();
  j["n1"] = detail::mat_json(g.n1);
  j["n1_exact"] = g.n1_exact;
  j["n1_inv"] = detail::mat_json(g.n1_inv);
  j["dil"] = detail::vec_json(g.dil);
  if (theta) {
    j["theta"] = *theta;
    j["n_theta"] = detail::mat_json(gram_theta(g, *theta));
  }
  return j;
}

inline Json probe_json(const ProbeReport& r, const std::map<std::string, bool>& phi = {}) {
  Json j;
  Json kept = Json::array();
  for (const auto& [f, k] : r.kept) kept.push_back({f + 1, k});
  j["kept"] = kept;
  j["indices"] = r.indices;
  j["rank_history"] = r.rank_history;
  Json samples = Json::array();
  for (const Vec& x : r.samples) samples.push_back(detail::vec_json(x));
  j["samples"] = samples;
  j["h"] = r.h;
  j["svd_tol"] = r.svd_tol;
  if (!phi.empty()) j["phi_conditions"] = phi;
  return j;
}

// Flat "key = value" lines; '#' starts a comment.
inline std::map<std::string, std::string> parse_config(std::istream& in,
                                                       const std::string& origin = "config") {
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string key = eq == std::string::npos ? "" : trim(line.substr(0, eq));
    if (key.empty()) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

inline std::map<std::string, std::string> read_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config '" + path.string() + "'");
  return parse_config(f, path.string());
}

}  // namespace stepsynth
