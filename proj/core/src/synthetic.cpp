#include "timesplit/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

namespace {

struct Motif {
  const char* name;
  const char* fragment;  // branch text inserted after a backbone atom
  bool drifts;           // sign flips at the drift point for the drift target
};

// Structural fragments whose presence drives the labels. The drifting ones
// model compound classes whose adverse-event association changes over the
// timeline; the stable ones hold in both eras.
constexpr Motif kMotifs[] = {
    {"hydroxyl", "(O)", false},
    {"carboxyl", "(C(=O)O)", false},
    {"amine", "(N)", false},
    {"chloro", "(Cl)", true},
    {"nitrile", "(C#N)", true},
    {"sulfone", "(S(=O)(=O)C)", true},
    {"phenyl", "(c1ccccc1)", false},
    {"nitro", "([N+](=O)[O-])", false},
};
constexpr std::size_t kNumMotifs = sizeof(kMotifs) / sizeof(kMotifs[0]);
constexpr std::size_t kNumLabelMotifs = 6;  // phenyl / nitro are decoration only

double normal_draw(Xoshiro256StarStar& rng) {
  // Box-Muller; both uniforms drawn unconditionally to keep the stream fixed.
  const double u1 = rng.uniform01();
  const double u2 = rng.uniform01();
  return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * M_PI * u2);
}

MonthDate uniform_month(Xoshiro256StarStar& rng, MonthDate lo, MonthDate hi) {
  const int span = hi.month_index() - lo.month_index() + 1;
  return MonthDate::from_month_index(lo.month_index() +
                                     static_cast<int>(rng.bounded(static_cast<std::uint64_t>(span))));
}

}  // namespace

void SyntheticSpec::validate() const {
  std::vector<std::string> problems;
  if (n_compounds < 20) problems.push_back("n_compounds must be >= 20");
  if (!timeline_start.valid() || !timeline_end.valid() || !drift_point.valid()) {
    problems.push_back("timeline dates must be valid YYYY-MM values");
  }
  if (!(timeline_start < drift_point && drift_point <= timeline_end)) {
    problems.push_back("drift_point must lie inside the timeline");
  }
  if (n_pre_drift && (*n_pre_drift == 0 || *n_pre_drift >= n_compounds)) {
    problems.push_back("n_pre_drift must leave both eras non-empty");
  }
  for (auto [value, name] : {std::pair<double, const char*>{leak_rate, "leak_rate"},
                             {background_rate, "background_rate"}}) {
    if (!(value >= 0.0 && value <= 1.0)) problems.push_back(std::string(name) + " must lie in [0, 1]");
  }
  if (noise_level < 0.0) problems.push_back("noise_level must be >= 0");
  if (drift_strength < 0.0 || stable_strength < 0.0) {
    problems.push_back("motif strengths must be >= 0");
  }
  if (n_leaky_features > n_knowledge_features) {
    problems.push_back("n_leaky_features cannot exceed n_knowledge_features");
  }
  if (leak_lag_mean_months <= 0 || background_lag_min_months <= 0 ||
      background_lag_max_months < background_lag_min_months) {
    problems.push_back("lag distribution bounds are inconsistent");
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
}

SyntheticFiles generate_synthetic(const SyntheticSpec& spec,
                                  const std::filesystem::path& out_dir) {
  spec.validate();
  std::filesystem::create_directories(out_dir);
  const std::size_t n = spec.n_compounds;

  Xoshiro256StarStar rng(derive_seed(spec.seed, "synthetic"));

  // --- compound ids and market dates ---------------------------------------
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "cmp%05zu", i);
    ids[i] = buf;
  }
  const MonthDate last_pre = MonthDate::from_month_index(spec.drift_point.month_index() - 1);
  std::vector<MonthDate> market(n);
  if (spec.n_pre_drift) {
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    fisher_yates_shuffle(order, rng);
    for (std::size_t i = 0; i < n; ++i) {
      market[order[i]] = i < *spec.n_pre_drift
                             ? uniform_month(rng, spec.timeline_start, last_pre)
                             : uniform_month(rng, spec.drift_point, spec.timeline_end);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      market[i] = uniform_month(rng, spec.timeline_start, spec.timeline_end);
    }
  }

  // --- structures ------------------------------------------------------------
  std::vector<std::array<bool, kNumMotifs>> motif_of(n);
  std::vector<std::string> smiles(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t tail = 2 + rng.bounded(4);
    for (std::size_t m = 0; m < kNumMotifs; ++m) motif_of[i][m] = rng.uniform01() < 0.35;
    // One backbone carbon per present motif keeps every atom within valence.
    std::string s = "C";
    for (std::size_t m = 0; m < kNumMotifs; ++m) {
      if (motif_of[i][m]) {
        s += "C";
        s += kMotifs[m].fragment;
      }
    }
    for (std::size_t b = 0; b < tail; ++b) s += "C";
    smiles[i] = s;
  }

  // --- labels ------------------------------------------------------------------
  // ae_drift: stable motifs keep their weight, drifting motifs flip sign at
  // the drift point. ae_steady: stable motifs only.
  const std::vector<std::string> targets = {"ae_drift", "ae_steady"};
  std::vector<double> score_drift(n), score_steady(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool post = !(market[i] < spec.drift_point);
    double z_drift = 0.0, z_steady = 0.0;
    for (std::size_t m = 0; m < kNumLabelMotifs; ++m) {
      if (!motif_of[i][m]) continue;
      if (kMotifs[m].drifts) {
        z_drift += post ? -spec.drift_strength : spec.drift_strength;
      } else {
        z_drift += spec.stable_strength;
        z_steady += spec.stable_strength;
      }
    }
    score_drift[i] = z_drift + spec.noise_level * normal_draw(rng);
    score_steady[i] = z_steady + spec.noise_level * normal_draw(rng);
  }
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
  };
  const double cut_drift = median_of(score_drift);
  const double cut_steady = median_of(score_steady);
  std::vector<std::int8_t> y_drift(n), y_steady(n);
  for (std::size_t i = 0; i < n; ++i) {
    y_drift[i] = score_drift[i] > cut_drift ? 1 : 0;
    y_steady[i] = score_steady[i] > cut_steady ? 1 : 0;
  }

  // --- structure feature table ---------------------------------------------
  // Motif indicators with measurement noise, pure-noise columns, and three
  // deliberately redundant columns the filter should remove.
  csv::Table fs;
  fs.header = {"compound_id"};
  for (std::size_t m = 0; m < kNumMotifs; ++m) fs.header.push_back(kMotifs[m].name);
  for (std::size_t j = 0; j < spec.n_noise_features; ++j) {
    fs.header.push_back("noise" + std::to_string(j));
  }
  fs.header.push_back("assay");           // carries missing cells
  fs.header.push_back("hydroxyl_copy");   // exact duplicate -> dropped
  fs.header.push_back("near_constant");   // CV below threshold -> dropped
  fs.header.push_back("chloro_scaled");   // r^2 > threshold vs chloro -> dropped
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{ids[i]};
    for (std::size_t m = 0; m < kNumMotifs; ++m) {
      row.push_back(csv::format_double(motif_of[i][m] ? 1.0 : 0.0));
    }
    for (std::size_t j = 0; j < spec.n_noise_features; ++j) {
      row.push_back(csv::format_double(normal_draw(rng)));
    }
    const double assay = 0.5 * score_steady[i] + normal_draw(rng);
    row.push_back(rng.uniform01() < 0.1 ? std::string() : csv::format_double(assay));
    row.push_back(row[1]);  // hydroxyl duplicate
    row.push_back(csv::format_double(100.0 + 0.001 * normal_draw(rng)));
    row.push_back(csv::format_double((motif_of[i][3] ? 1.0 : 0.0) * 2.0 +
                                     0.01 * normal_draw(rng)));
    fs.rows.push_back(std::move(row));
  }

  // --- knowledge feature table and publications ------------------------------
  // Leaky columns echo the drifting label and are documented shortly after
  // approval; the rest are background.
  csv::Table fk;
  fk.header = {"compound_id"};
  for (std::size_t j = 0; j < spec.n_knowledge_features; ++j) {
    fk.header.push_back("prot" + std::to_string(j));
  }
  std::vector<std::vector<bool>> knowledge(n, std::vector<bool>(spec.n_knowledge_features));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.n_knowledge_features; ++j) {
      const bool leaky = j < spec.n_leaky_features;
      const double p = leaky && y_drift[i] == 1 ? spec.leak_rate : spec.background_rate;
      knowledge[i][j] = rng.uniform01() < p;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row{ids[i]};
    for (std::size_t j = 0; j < spec.n_knowledge_features; ++j) {
      row.push_back(csv::format_double(knowledge[i][j] ? 1.0 : 0.0));
    }
    fk.rows.push_back(std::move(row));
  }

  csv::Table pubs;
  pubs.header = {"compound_id", "feature_id", "first_pub_date"};
  std::vector<MonthDate> pub_dates;
  std::vector<std::pair<std::size_t, std::size_t>> pub_pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < spec.n_knowledge_features; ++j) {
      if (!knowledge[i][j]) continue;
      const bool leaky = j < spec.n_leaky_features;
      const int lag =
          leaky ? 1 + static_cast<int>(rng.bounded(
                          static_cast<std::uint64_t>(2 * spec.leak_lag_mean_months - 1)))
                : spec.background_lag_min_months +
                      static_cast<int>(rng.bounded(static_cast<std::uint64_t>(
                          spec.background_lag_max_months - spec.background_lag_min_months + 1)));
      pub_pairs.emplace_back(i, j);
      pub_dates.push_back(MonthDate::from_month_index(market[i].month_index() + lag));
    }
  }
  if (spec.shuffle_publication_dates) {
    fisher_yates_shuffle(pub_dates, rng);
  }
  for (std::size_t p = 0; p < pub_pairs.size(); ++p) {
    pubs.rows.push_back({ids[pub_pairs[p].first], "prot" + std::to_string(pub_pairs[p].second),
                         pub_dates[p].to_string()});
  }

  // --- remaining tables -------------------------------------------------------
  csv::Table labels;
  labels.header = {"compound_id", targets[0], targets[1]};
  csv::Table dates;
  dates.header = {"compound_id", "market_date"};
  csv::Table smi;
  smi.header = {"compound_id", "smiles"};
  csv::Table syn;
  syn.header = {"alias", "canonical"};
  csv::Table approvals;
  approvals.header = {"compound_id", "approval_date"};
  for (std::size_t i = 0; i < n; ++i) {
    labels.rows.push_back({ids[i], std::to_string(int(y_drift[i])), std::to_string(int(y_steady[i]))});
    dates.rows.push_back({ids[i], market[i].to_string()});
    smi.rows.push_back({ids[i], smiles[i]});
    syn.rows.push_back({ids[i], ids[i]});
    approvals.rows.push_back({ids[i], market[i].to_string()});
  }

  SyntheticFiles files;
  files.features_struct = out_dir / "features_struct.csv";
  files.features_knowledge = out_dir / "features_knowledge.csv";
  files.labels = out_dir / "labels.csv";
  files.dates = out_dir / "dates.csv";
  files.smiles = out_dir / "smiles.csv";
  files.synonyms = out_dir / "synonyms.csv";
  files.approvals = out_dir / "approvals.csv";
  files.publications = out_dir / "publications.csv";
  files.run_config = out_dir / "runconfig.json";

  csv::write_file(files.features_struct, fs);
  csv::write_file(files.features_knowledge, fk);
  csv::write_file(files.labels, labels);
  csv::write_file(files.dates, dates);
  csv::write_file(files.smiles, smi);
  csv::write_file(files.synonyms, syn);
  csv::write_file(files.approvals, approvals);
  csv::write_file(files.publications, pubs);

  for (const MonthDate& d : market) {
    if (d < spec.drift_point) {
      ++files.n_pre_drift;
    } else {
      ++files.n_post_drift;
    }
  }

  nlohmann::json cfg;
  cfg["seed"] = spec.seed;
  cfg["out_dir"] = "out";
  cfg["inputs"] = {
      {"features",
       nlohmann::json::array({{{"name", "struct"}, {"path", "features_struct.csv"}},
                              {{"name", "knowledge"}, {"path", "features_knowledge.csv"}}})},
      {"labels", "labels.csv"},
      {"dates", "dates.csv"},
      {"smiles", "smiles.csv"},
      {"approvals", "approvals.csv"},
      {"publications", "publications.csv"}};
  cfg["filter"] = {{"cv_threshold", 0.05}, {"r2_threshold", 0.85}};
  cfg["splits"] = nlohmann::json::array(
      {{{"label", "time"}, {"method", "time"}, {"threshold", spec.drift_point.to_string()}},
       {{"label", "random"},
        {"method", "random"},
        {"n_train", files.n_pre_drift},
        {"n_test", files.n_post_drift}}});
  cfg["learners"] = nlohmann::json::array(
      {{{"kind", "elastic_net"}}, {{"kind", "naive_bayes"}}});
  cfg["targets"] = targets;
  cfg["repetitions"] = 20;
  cfg["concat_datasets"] = true;
  cfg["ensemble_datasets"] = nlohmann::json::array({"struct", "knowledge"});
  cfg["protein_datasets"] = nlohmann::json::array({"knowledge"});
  cfg["importance"] = {{"dataset", "knowledge"}, {"learner", "elastic_net"},
                       {"target", "ae_drift"},  {"split", "time"},
                       {"n_folds", 4},          {"n_shuffles", 25},
                       {"top_n", 20}};
  cfg["leakage"] = {{"k", 15}, {"n_permutations", 100000}};

  std::ofstream out(files.run_config, std::ios::binary);
  if (!out) throw Error("cannot write file: " + files.run_config.string());
  out << cfg.dump(2) << '\n';
  return files;
}

}  // namespace timesplit
