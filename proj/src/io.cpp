#include "fbsde/io.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fbsde {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

void write_header(std::ofstream& out, const ConfigItems& header) {
  for (const auto& [key, value] : header)
    out << "# " << key << " = " << value << "\n";
}

json config_json(const ConfigItems& header) {
  json obj = json::object();
  for (const auto& [key, value] : header) obj[key] = value;
  return json{{"config", obj}};
}

json row_base(const ReportTag& tag) {
  return json{{"experiment", tag.experiment},
              {"model", tag.model},
              {"seed", tag.seed}};
}

json moment_row(const ReportTag& tag, const MomentPoint& pt) {
  json row = row_base(tag);
  row["m"] = pt.mass;
  row["estimate"] = pt.estimate;
  row["se"] = pt.se;
  row["n_paths"] = pt.n_paths;
  row["dt"] = pt.dt;
  return row;
}

json fit_json(const RateFit& fit) {
  return json{{"fit",
               {{"valid", fit.valid},
                {"slope", fit.slope},
                {"slope_se", fit.slope_se},
                {"intercept", fit.intercept},
                {"residual", fit.residual},
                {"excluded", fit.excluded}}}};
}

json vec_json(const Vec& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json tangent_json(const FrameTangent& t) {
  return json{{"dx", vec_json(t.dx)}, {"dh", mat_json(t.dh)}};
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void write_trajectory_csv(const std::string& path, const ConfigItems& header,
                          const Trajectory& traj, bool with_velocity) {
  std::ofstream out = open_out(path);
  write_header(out, header);
  if (traj.states.empty()) return;
  const int n = static_cast<int>(traj.states.front().u.base.x.size());
  out << "t,chart";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j) out << ",h" << i << j;
  if (with_velocity)
    for (int i = 1; i <= n; ++i) out << ",v" << i;
  out << "\n";
  for (const State& s : traj.states) {
    out << format_double(s.t) << "," << s.u.base.chart;
    for (int i = 0; i < n; ++i) out << "," << format_double(s.u.base.x[i]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out << "," << format_double(s.u.h(i, j));
    if (with_velocity)
      for (int i = 0; i < n; ++i) out << "," << format_double(s.v[i]);
    out << "\n";
  }
}

void write_moment_jsonl(const std::string& path, const ConfigItems& header,
                        const ReportTag& tag, const MomentCurve& curve,
                        const RateFit& fit) {
  std::ofstream out = open_out(path);
  out << config_json(header).dump() << "\n";
  for (const MomentPoint& pt : curve.points)
    out << moment_row(tag, pt).dump() << "\n";
  out << fit_json(fit).dump() << "\n";
}

void write_pathwise_jsonl(const std::string& path, const ConfigItems& header,
                          const ReportTag& tag, const PathwiseResult& res,
                          const RateFit& fit) {
  std::ofstream out = open_out(path);
  out << config_json(header).dump() << "\n";
  for (const MomentPoint& pt : res.curve.points)
    out << moment_row(tag, pt).dump() << "\n";
  out << fit_json(fit).dump() << "\n";
  out << json{{"summary",
               {{"monotone_fraction", res.monotone_fraction},
                {"bias_rel", res.bias_rel},
                {"bias_paths", res.bias_paths}}}}
             .dump()
      << "\n";
}

void write_checks_jsonl(const std::string& path, const ConfigItems& header,
                        const ReportTag& tag,
                        const std::vector<CheckLine>& lines) {
  std::ofstream out = open_out(path);
  out << config_json(header).dump() << "\n";
  for (const CheckLine& line : lines) {
    json row = row_base(tag);
    row["name"] = line.name;
    row["estimate"] = line.estimate;
    row["se"] = line.se;
    row["target"] = line.target;
    out << row.dump() << "\n";
  }
}

void write_vertical_jsonl(const std::string& path, const ConfigItems& header,
                          const ReportTag& tag, const VerticalReport& rep) {
  std::ofstream out = open_out(path);
  out << config_json(header).dump() << "\n";
  for (const KsLine& line : rep.position) {
    json row = row_base(tag);
    row["name"] = line.name;
    row["d"] = line.ks.d;
    row["p_value"] = line.ks.p_value;
    row["arm"] = "position";
    out << row.dump() << "\n";
  }
  json row = row_base(tag);
  row["name"] = rep.frame_control.name;
  row["d"] = rep.frame_control.ks.d;
  row["p_value"] = rep.frame_control.ks.p_value;
  row["arm"] = "control";
  out << row.dump() << "\n";
}

void write_drift_json(const std::string& path, const ConfigItems& header,
                      const State& at, const DriftReport& rep) {
  std::ofstream out = open_out(path);
  json obj = config_json(header);
  obj["at"] = {{"chart", at.u.base.chart},
               {"x", vec_json(at.u.base.x)},
               {"h", mat_json(at.u.h)}};
  obj["lift_coeff"] = vec_json(rep.lift_coeff);
  obj["sh_coeff"] = vec_json(rep.sh_coeff);
  obj["lift"] = tangent_json(rep.lift);
  obj["sh"] = tangent_json(rep.sh);
  obj["sv"] = tangent_json(rep.sv);
  obj["drift"] = tangent_json(rep.drift);
  obj["j"] = mat_json(rep.j);
  obj["diffusion"] = mat_json(rep.diffusion);
  out << obj.dump(2) << "\n";
}

}  // namespace fbsde
