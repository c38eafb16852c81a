#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "timesplit/month_date.hpp"

namespace timesplit {

// Parameters of the synthetic benchmark family. The default configuration
// produces a drifting structure dataset (random-split scores beat time-split
// scores) and a knowledge dataset whose informative columns are documented
// shortly after approval, so the publication-lag test fires.
struct SyntheticSpec {
  std::size_t n_compounds = 500;
  MonthDate timeline_start{1980, 1};
  MonthDate timeline_end{2015, 12};
  MonthDate drift_point{1998, 10};
  // Exact number of compounds dated strictly before the drift point; the
  // remainder land at or after it. Unset: dates are uniform over the span.
  std::optional<std::size_t> n_pre_drift;

  double stable_strength = 2.0;  // motif weights shared by both eras
  double drift_strength = 2.0;   // motif weights that flip sign after drift
  double noise_level = 1.0;      // label noise scale

  double leak_rate = 0.9;        // P(knowledge bit | positive drifting label)
  double background_rate = 0.15; // P(knowledge bit) otherwise
  int leak_lag_mean_months = 6;
  int background_lag_min_months = 24;
  int background_lag_max_months = 120;
  std::size_t n_knowledge_features = 60;
  std::size_t n_leaky_features = 15;
  std::size_t n_noise_features = 12;
  // Reassigns publication dates uniformly across pairs; the leakage signal
  // disappears while everything else stays put.
  bool shuffle_publication_dates = false;

  std::uint64_t seed = 1;

  void validate() const;
};

struct SyntheticFiles {
  std::filesystem::path features_struct;
  std::filesystem::path features_knowledge;
  std::filesystem::path labels;
  std::filesystem::path dates;
  std::filesystem::path smiles;
  std::filesystem::path synonyms;
  std::filesystem::path approvals;
  std::filesystem::path publications;
  std::filesystem::path run_config;
  std::size_t n_pre_drift = 0;   // realized time-split sizes
  std::size_t n_post_drift = 0;
};

// Writes the full input-file set plus a ready-to-run config into out_dir.
// Same spec, same files, byte for byte.
SyntheticFiles generate_synthetic(const SyntheticSpec& spec,
                                  const std::filesystem::path& out_dir);

}  // namespace timesplit
