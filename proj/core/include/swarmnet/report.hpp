#pragma once

#include <filesystem>
#include <string>

#include "swarmnet/harness.hpp"

namespace swarmnet {

/// One row per arch x scenario x node:
///   arch,scenario,node,label,kind,metric,value,tp,tn,fp,fn
/// followed by attack rows with scenario set to the attack name.
std::string report_csv(const EvaluationReport& report);

/// Summary with run metadata (seeds, hyperparameters, sizes), per-arch
/// headline rates, per-scenario accuracy and attack results.
std::string report_json(const EvaluationReport& report);

/// Columnar file for bar charts: arch, AR authentic, DR primary, DR propagated.
std::string report_gnuplot(const EvaluationReport& report);

/// Writes <stem>.csv, <stem>.json and, when requested, <stem>.dat.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir, const std::string& stem,
                  bool gnuplot = false);

/// Fixed six-decimal rendering used by every report.
std::string format_rate(double v);

}  // namespace swarmnet
