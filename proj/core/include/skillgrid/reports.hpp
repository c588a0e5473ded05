#pragma once

#include <string>
#include <vector>

#include "skillgrid/eval.hpp"

namespace skillgrid {

// Report emission. Every CSV starts with '#'-prefixed lines embedding the
// resolved run configuration so artifacts are regenerable from the file
// alone; the JSON forms embed it as a field.

std::string metrics_report_csv(const MetricsReport& report, const std::string& config_json);
std::string metrics_report_json(const MetricsReport& report, const std::string& config_json);

std::string ratio_report_csv(const MetricsReport& eval_report, const RatioReport& ratios,
                             const std::string& config_json);
std::string ratio_report_json(const MetricsReport& eval_report, const RatioReport& ratios,
                              const std::string& config_json);

std::string episode_results_jsonl(const std::vector<EpisodeResult>& results);

struct TimingRow {
  std::uint64_t scenario_seed = 0;
  int num_targets = 0;
  TimingStats policy;
  double es_mean_s = 0.0;  // negative when not measured
};
std::string timing_report_csv(const std::vector<TimingRow>& rows,
                              const std::string& config_json);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace skillgrid
