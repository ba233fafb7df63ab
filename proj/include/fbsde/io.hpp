#pragma once
// Result writers: trajectory CSV and JSON-lines experiment reports.  Every
// floating-point value is written with round-trip precision, and reports
// start with an echo of the configuration that produced them, so reruns
// with the same settings reproduce the files byte for byte.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fbsde/drift.hpp"
#include "fbsde/engine.hpp"
#include "fbsde/experiments.hpp"

namespace fbsde {

// Configuration echo attached to every output file.
using ConfigItems = std::vector<std::pair<std::string, std::string>>;

// Shortest exact decimal form ("%.17g").
std::string format_double(double x);

// Rows t, chart, x1..xn, h11..hnn (row major), and v1..vn when
// with_velocity is set, preceded by '# key = value' header lines.
void write_trajectory_csv(const std::string& path, const ConfigItems& header,
                          const Trajectory& traj, bool with_velocity);

// Constant identification fields stamped on every report row.
struct ReportTag {
  std::string experiment;
  std::string model;
  std::uint64_t seed = 0;
};

// One JSON value per line: {"config": ...}, one row per mass point with
// the tag fields plus m/estimate/se/n_paths/dt, then {"fit": ...}.
void write_moment_jsonl(const std::string& path, const ConfigItems& header,
                        const ReportTag& tag, const MomentCurve& curve,
                        const RateFit& fit);

// Moment report plus {"summary": ...} with the monotonicity fraction and
// the step-halving bias per mass.
void write_pathwise_jsonl(const std::string& path, const ConfigItems& header,
                          const ReportTag& tag, const PathwiseResult& res,
                          const RateFit& fit);

// One row per named estimate with its standard error and target.
void write_checks_jsonl(const std::string& path, const ConfigItems& header,
                        const ReportTag& tag,
                        const std::vector<CheckLine>& lines);

// One row per position functional with its distance and p-value, then the
// scaled-arm frame control row.
void write_vertical_jsonl(const std::string& path, const ConfigItems& header,
                          const ReportTag& tag, const VerticalReport& rep);

// Single JSON document with the limiting coefficients at a point.
void write_drift_json(const std::string& path, const ConfigItems& header,
                      const State& at, const DriftReport& rep);

}  // namespace fbsde
