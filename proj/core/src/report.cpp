#include "swarmnet/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "swarmnet/error.hpp"

namespace swarmnet {

using nlohmann::ordered_json;

std::string format_rate(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

namespace {

void counts_csv(std::ostringstream& os, const ConfusionCounts& c) {
  os << ',' << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn;
}

ordered_json counts_json(const ConfusionCounts& c) {
  return ordered_json{{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn}};
}

ordered_json optional_rate(const std::optional<double>& v) {
  if (!v) return nullptr;
  return ordered_json(std::stod(format_rate(*v)));
}

std::string arch_list(const std::vector<Arch>& archs) {
  std::string s;
  for (auto a : archs) {
    if (!s.empty()) s += ',';
    s += to_string(a);
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace

std::string report_csv(const EvaluationReport& r) {
  std::ostringstream os;
  os << "arch,scenario,node,label,kind,metric,value,tp,tn,fp,fn\n";
  for (const auto& c : r.nodes) {
    os << c.arch << ',' << c.scenario << ",N" << c.node << ',' << c.label << ',' << to_string(c.kind) << ','
       << (c.label == 1 ? "dr" : "ar") << ',' << format_rate(c.rate);
    counts_csv(os, c.counts);
    os << '\n';
  }
  for (const auto& a : r.attacks) {
    os << a.arch << ',' << a.attack << ",all,1," << a.param << ',' << a.metric << ',' << format_rate(a.value);
    counts_csv(os, a.counts);
    os << '\n';
  }
  return os.str();
}

std::string report_json(const EvaluationReport& r) {
  const auto& c = r.config;
  ordered_json j;
  j["swarm"] = r.swarm;
  j["metadata"] = {
      {"seed", c.seed},
      {"repeats", c.repeats},
      {"archs", arch_list(c.archs)},
      {"m_train", c.m_train},
      {"m_eval", c.m_eval},
      {"through_protocol", c.through_protocol},
      {"pad_length", r.pad_length},
      {"parameter_count", r.parameter_count},
      {"sf", c.sf},
      {"noise", c.train.noise},
      {"resample_noise", c.train.resample_noise},
      {"epochs", c.train.epochs},
      {"batch_size", c.train.batch_size},
      {"hidden", c.train.hidden},
      {"latent", c.train.latent},
      {"lr", c.train.adam.lr},
      {"weight_decay", c.train.adam.weight_decay},
      {"s1_rounds", c.s1_rounds},
      {"s1_drops", c.s1_drops},
  };
  j["summary"] = ordered_json::array();
  for (const auto& s : r.summary) {
    j["summary"].push_back({{"arch", s.arch},
                            {"accuracy", optional_rate(s.accuracy)},
                            {"ar_authentic", optional_rate(s.ar_authentic)},
                            {"dr_primary", optional_rate(s.dr_primary)},
                            {"dr_propagated", optional_rate(s.dr_propagated)},
                            {"min_training_cs", std::stod(format_rate(s.min_training_score))},
                            {"training_flags", s.training_flags}});
  }
  j["scenarios"] = ordered_json::array();
  for (const auto& s : r.scenarios) {
    ordered_json row{{"arch", s.arch}, {"scenario", s.scenario}, {"accuracy", std::stod(format_rate(s.accuracy))}};
    row["nodes"] = ordered_json::array();
    for (const auto& n : r.nodes) {
      if (n.arch != s.arch || n.scenario != s.scenario) continue;
      row["nodes"].push_back({{"node", n.node},
                              {"label", n.label},
                              {"kind", std::string(to_string(n.kind))},
                              {n.label == 1 ? "dr" : "ar", std::stod(format_rate(n.rate))},
                              {"counts", counts_json(n.counts)}});
    }
    j["scenarios"].push_back(row);
  }
  j["attacks"] = ordered_json::array();
  for (const auto& a : r.attacks)
    j["attacks"].push_back({{"arch", a.arch},
                            {"attack", a.attack},
                            {"param", a.param},
                            {a.metric, std::stod(format_rate(a.value))},
                            {"counts", counts_json(a.counts)}});
  return j.dump(2) + "\n";
}

std::string report_gnuplot(const EvaluationReport& r) {
  std::ostringstream os;
  os << "# arch ar_authentic dr_primary dr_propagated\n";
  for (const auto& s : r.summary)
    os << s.arch << ' ' << format_rate(s.ar_authentic.value_or(0.0)) << ' '
       << format_rate(s.dr_primary.value_or(0.0)) << ' ' << format_rate(s.dr_propagated.value_or(0.0)) << '\n';
  return os.str();
}

void write_report(const EvaluationReport& report, const std::filesystem::path& dir, const std::string& stem,
                  bool gnuplot) {
  std::filesystem::create_directories(dir);
  write_file(dir / (stem + ".csv"), report_csv(report));
  write_file(dir / (stem + ".json"), report_json(report));
  if (gnuplot) write_file(dir / (stem + ".dat"), report_gnuplot(report));
}

}  // namespace swarmnet
