#pragma once

#include <map>
#include <string>

#include "timesplit/config.hpp"
#include "timesplit/synthetic.hpp"

namespace timesplit {

struct CommandOptions {
  unsigned jobs = 1;
};

// Shared front half of every pipeline: load inputs, normalize ids through
// the synonym table, intersect, filter targets by positive ratio, run the
// feature filter per dataset, optionally append the concatenation dataset.
struct PreparedData {
  DatasetBundle bundle;
  std::map<std::string, FilterReport> filter_reports;  // by dataset name
  std::map<std::string, std::size_t> excluded_ids;     // per input file
};
PreparedData load_and_prepare(const RunConfig& config);

// Outputs: records.jsonl, comparison.json, comparison.csv, filter_reports.json.
void cmd_evaluate(const RunConfig& config, const CommandOptions& options);

// Outputs: importance.json, importance.csv.
void cmd_importance(const RunConfig& config, const CommandOptions& options);

// Outputs under <out>/chemspace/: pca_scores.csv, pca_explained.csv,
// correlation_distances.csv, tanimoto.csv, pmfg_edges.csv, path_lengths.csv.
void cmd_chemspace(const RunConfig& config, const CommandOptions& options);

// Outputs: leakage.json (plus the importance pair it derives the ranking from).
void cmd_leakage(const RunConfig& config, const CommandOptions& options);

// Writes the synthetic input-file set plus runconfig.json into out_dir.
SyntheticFiles cmd_synth(const RunConfig& config);

}  // namespace timesplit
