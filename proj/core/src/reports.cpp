#include "skillgrid/reports.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "skillgrid/error.hpp"

namespace skillgrid {

namespace {

using nlohmann::json;

std::string config_comment(const std::string& config_json) {
  if (config_json.empty()) return "";
  std::string compact = json::parse(config_json).dump();
  return "# config " + compact + "\n";
}

}  // namespace

std::string metrics_report_csv(const MetricsReport& r, const std::string& config_json) {
  std::ostringstream out;
  out.precision(10);
  out << config_comment(config_json);
  out << "policy_id,episodes,m_success,m_st_mean,m_st_std,m_tte_mean,m_tte_std,"
         "excluded_unsolved\n";
  out << r.policy_id << ',' << r.episodes << ',' << r.success << ',' << r.st_mean << ','
      << r.st_std << ',' << r.tte_mean << ',' << r.tte_std << ',' << r.excluded_unsolved
      << '\n';
  return out.str();
}

std::string metrics_report_json(const MetricsReport& r, const std::string& config_json) {
  json j;
  j["policy_id"] = r.policy_id;
  j["episodes"] = r.episodes;
  j["m_success"] = r.success;
  j["m_st"] = {{"mean", r.st_mean}, {"std", r.st_std}};
  j["m_tte"] = {{"mean", r.tte_mean}, {"std", r.tte_std}};
  j["excluded_unsolved"] = r.excluded_unsolved;
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  return j.dump(2);
}

std::string ratio_report_csv(const MetricsReport& eval_report, const RatioReport& ratios,
                             const std::string& config_json) {
  std::ostringstream out;
  out.precision(10);
  out << config_comment(config_json);
  out << "policy_id,episodes,m_success,st_ratio,tte_ratio,solved_by_policy\n";
  out << eval_report.policy_id << ',' << eval_report.episodes << ',' << eval_report.success
      << ',';
  if (ratios.st_ratio) {
    out << *ratios.st_ratio;
  } else {
    out << "n/a";
  }
  out << ',';
  if (ratios.tte_ratio) {
    out << *ratios.tte_ratio;
  } else {
    out << "n/a";
  }
  out << ',' << ratios.solved_by_policy << '\n';
  return out.str();
}

std::string ratio_report_json(const MetricsReport& eval_report, const RatioReport& ratios,
                              const std::string& config_json) {
  json j;
  j["policy_id"] = eval_report.policy_id;
  j["episodes"] = eval_report.episodes;
  j["m_success"] = eval_report.success;
  j["paired"] = ratios.paired;
  j["solved_by_policy"] = ratios.solved_by_policy;
  j["st_ratio"] = ratios.st_ratio ? json(*ratios.st_ratio) : json(nullptr);
  j["tte_ratio"] = ratios.tte_ratio ? json(*ratios.tte_ratio) : json(nullptr);
  j["means"] = {{"policy_st", ratios.policy_st_mean},
                {"es_st", ratios.es_st_mean},
                {"policy_tte", ratios.policy_tte_mean},
                {"es_tte", ratios.es_tte_mean}};
  if (!config_json.empty()) j["config"] = json::parse(config_json);
  return j.dump(2);
}

std::string episode_results_jsonl(const std::vector<EpisodeResult>& results) {
  std::ostringstream out;
  for (const EpisodeResult& r : results) {
    json j;
    j["seed"] = r.scenario_seed;
    j["solved"] = r.solved;
    if (r.solved) j["t_solved"] = r.t_solved;
    j["moves"] = r.moves;
    out << j.dump() << '\n';
  }
  return out.str();
}

std::string timing_report_csv(const std::vector<TimingRow>& rows,
                              const std::string& config_json) {
  std::ostringstream out;
  out.precision(10);
  out << config_comment(config_json);
  out << "scenario_seed,num_targets,policy_episode_mean_s,policy_episode_std_s,"
         "policy_step_mean_s,es_mean_s\n";
  for (const TimingRow& row : rows) {
    out << row.scenario_seed << ',' << row.num_targets << ',' << row.policy.episode_mean_s
        << ',' << row.policy.episode_std_s << ',' << row.policy.step_mean_s << ',';
    if (row.es_mean_s >= 0.0) {
      out << row.es_mean_s;
    } else {
      out << "n/a";
    }
    out << '\n';
  }
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw ConfigError("write_text_file: cannot open " + path);
  out << content;
  if (!out) throw ConfigError("write_text_file: write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("read_text_file: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace skillgrid
