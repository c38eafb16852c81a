#include "timesplit/commands.hpp"

#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "timesplit/chemspace.hpp"
#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"
#include "timesplit/fingerprint.hpp"
#include "timesplit/graph.hpp"
#include "timesplit/importance.hpp"
#include "timesplit/leakage.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

// Random splits may omit n_train/n_test; they default to the time plan sizes.
std::vector<SplitSetting> resolve_splits(const RunConfig& config, const DatasetBundle& bundle) {
  std::optional<std::pair<std::size_t, std::size_t>> time_sizes;
  for (const auto& s : config.splits) {
    if (s.method == SplitMethod::time && s.threshold) {
      SplitPlan plan = time_split(bundle, *s.threshold);
      time_sizes = {plan.train_ids.size(), plan.test_ids.size()};
      break;
    }
  }
  std::vector<SplitSetting> resolved;
  for (SplitSetting s : config.splits) {
    if (s.method == SplitMethod::random && (!s.n_train || !s.n_test)) {
      if (!time_sizes) {
        throw ValidationError("random split '" + s.label +
                              "' needs n_train/n_test (no time split to copy sizes from)");
      }
      s.n_train = time_sizes->first;
      s.n_test = time_sizes->second;
    }
    resolved.push_back(std::move(s));
  }
  return resolved;
}

const SplitSetting& find_split(std::span<const SplitSetting> settings, const std::string& label) {
  for (const auto& s : settings) {
    if (s.label == label) return s;
  }
  throw ValidationError("unknown split label '" + label + "'");
}

std::vector<std::string> resolve_targets(const RunConfig& config, const DatasetBundle& bundle) {
  if (!config.targets.empty()) return config.targets;
  return bundle.labels.target_names;
}

// Builds one concrete plan for a setting (repetition 0 seeds for the
// single-plan commands).
SplitPlan plan_for(const SplitSetting& setting, const DatasetBundle& bundle,
                   std::uint64_t base_seed) {
  if (setting.method == SplitMethod::time) {
    if (!setting.threshold) throw ValidationError("time split needs a threshold");
    return time_split(bundle, *setting.threshold);
  }
  if (!setting.n_train || !setting.n_test) {
    throw ValidationError("random split '" + setting.label + "' needs n_train/n_test");
  }
  return random_split(bundle, *setting.n_train, *setting.n_test,
                      derive_seed(base_seed, "plan:" + setting.label),
                      setting.fixed_test_positive_count,
                      setting.ratio_target ? &*setting.ratio_target : nullptr);
}

struct SupervisedCell {
  Matrix train_X, test_X;
  std::vector<std::int8_t> train_y, test_y;
  std::vector<std::string> test_ids;
};

// Labeled rows only on both sides (the importance/leakage path needs scored
// test rows), imputed with training-column means.
SupervisedCell assemble_labeled_cell(const DatasetBundle& bundle, const FeatureTable& table,
                                     std::size_t target_idx, const SplitPlan& plan) {
  std::set<std::string> test_set(plan.test_ids.begin(), plan.test_ids.end());
  std::set<std::string> train_set(plan.train_ids.begin(), plan.train_ids.end());
  std::vector<std::size_t> train_rows, test_rows;
  SupervisedCell cell;
  for (std::size_t r = 0; r < bundle.compound_ids.size(); ++r) {
    const std::int8_t y = bundle.labels.at(r, target_idx);
    if (y == kMissingLabel) continue;
    if (train_set.count(bundle.compound_ids[r])) {
      train_rows.push_back(r);
      cell.train_y.push_back(y);
    } else if (test_set.count(bundle.compound_ids[r])) {
      test_rows.push_back(r);
      cell.test_y.push_back(y);
      cell.test_ids.push_back(bundle.compound_ids[r]);
    }
  }
  cell.train_X = table.values.select_rows(train_rows);
  cell.test_X = table.values.select_rows(test_rows);
  const std::vector<double> means = fit_impute_means(cell.train_X);
  apply_impute_means(cell.train_X, means);
  apply_impute_means(cell.test_X, means);
  return cell;
}

ImportanceReport run_importance(const RunConfig& config, const PreparedData& prepared,
                                const CommandOptions& options,
                                std::vector<std::string>* test_ids_out) {
  const auto& bundle = prepared.bundle;
  auto table_idx = bundle.table_index(config.importance.dataset);
  if (!table_idx) {
    throw ValidationError("importance.dataset '" + config.importance.dataset + "' not found");
  }
  const NamedLearner* learner = nullptr;
  for (const auto& l : config.learners) {
    if (l.name == config.importance.learner_name) learner = &l;
  }
  if (!learner) {
    throw ValidationError("importance.learner '" + config.importance.learner_name + "' not found");
  }
  auto target_idx = bundle.labels.target_index(config.importance.target);
  if (!target_idx) {
    throw ValidationError("importance.target '" + config.importance.target +
                          "' not present after filtering");
  }
  const auto settings = resolve_splits(config, bundle);
  const SplitSetting& setting = find_split(settings, config.importance.split_label);
  const SplitPlan plan = plan_for(setting, bundle, config.seed);

  SupervisedCell cell = assemble_labeled_cell(bundle, bundle.tables[*table_idx], *target_idx, plan);
  if (test_ids_out) *test_ids_out = cell.test_ids;
  return permutation_importance(
      learner->spec, cell.train_X, cell.train_y, cell.test_X, cell.test_y,
      bundle.tables[*table_idx].feature_names, config.importance.n_folds,
      config.importance.n_shuffles, derive_seed(config.seed, "importance"), options.jobs);
}

void write_group_histogram_csv(const std::filesystem::path& path, const GroupedValues& groups,
                               double lo, double hi, int bins) {
  csv::Table table;
  table.header = {"group", "bin_lo", "bin_hi", "count"};
  const double width = (hi - lo) / bins;
  auto emit = [&](const char* name, const std::vector<double>& values) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(bins), 0);
    for (double v : values) {
      int b = static_cast<int>((v - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      ++counts[static_cast<std::size_t>(b)];
    }
    for (int b = 0; b < bins; ++b) {
      table.rows.push_back({name, csv::format_double(lo + b * width),
                            csv::format_double(lo + (b + 1) * width),
                            std::to_string(counts[static_cast<std::size_t>(b)])});
    }
  };
  emit("within_train", groups.within_train);
  emit("within_test", groups.within_test);
  emit("cross", groups.cross);
  csv::write_file(path, table);
}

void write_hop_histogram_csv(const std::filesystem::path& path, const GroupedValues& groups) {
  csv::Table table;
  table.header = {"group", "hops", "count"};
  auto emit = [&](const char* name, const std::vector<double>& values) {
    std::map<int, std::size_t> counts;  // -1 marks unreachable pairs
    for (double v : values) ++counts[static_cast<int>(v)];
    for (const auto& [hops, count] : counts) {
      table.rows.push_back({name, std::to_string(hops), std::to_string(count)});
    }
  };
  emit("within_train", groups.within_train);
  emit("within_test", groups.within_test);
  emit("cross", groups.cross);
  csv::write_file(path, table);
}

}  // namespace

PreparedData load_and_prepare(const RunConfig& config) {
  PreparedData out;

  std::optional<SynonymMap> synonyms;
  if (config.synonyms_path) synonyms = load_synonym_map(*config.synonyms_path);

  std::vector<FeatureTable> tables;
  for (const auto& input : config.features) {
    FeatureTable table = load_feature_table(input.path, input.name);
    if (synonyms) {
      out.excluded_ids[input.name] = apply_synonyms(table, *synonyms).size();
    }
    tables.push_back(std::move(table));
  }

  LabelTable labels;
  if (config.labels_path) {
    labels = load_label_table(*config.labels_path);
    if (synonyms) out.excluded_ids["labels"] = apply_synonyms(labels, *synonyms).size();
  }

  std::vector<CompoundRecord> registry;
  if (config.dates_path) {
    registry = load_registry(*config.dates_path, config.smiles_path);
    if (synonyms) out.excluded_ids["registry"] = apply_synonyms(registry, *synonyms).size();
  }

  out.bundle = intersect_compounds(tables, labels.empty() ? nullptr : &labels, registry);

  if (!out.bundle.labels.empty()) {
    out.bundle.labels = filter_targets_by_positive_ratio(
        out.bundle.labels, config.positive_ratio_low, config.positive_ratio_high);
  }

  std::vector<FeatureTable> filtered;
  for (const auto& table : out.bundle.tables) {
    auto [kept, report] = apply_filter_pipeline(table, config.filter);
    out.filter_reports.emplace(table.dataset_name, std::move(report));
    filtered.push_back(std::move(kept));
  }
  out.bundle.tables = std::move(filtered);

  if (config.concat_datasets) {
    out.bundle.tables.push_back(concatenate_datasets(out.bundle.tables, "concat"));
  }
  return out;
}

void cmd_evaluate(const RunConfig& config, const CommandOptions& options) {
  PreparedData prepared = load_and_prepare(config);
  std::filesystem::create_directories(config.out_dir);

  const auto settings = resolve_splits(config, prepared.bundle);
  const auto targets = resolve_targets(config, prepared.bundle);

  GridOptions grid_options;
  grid_options.k_folds = config.k_folds;
  grid_options.n_repetitions = config.repetitions;
  grid_options.base_seed = config.seed;
  grid_options.jobs = options.jobs;

  GridResult result =
      run_grid(prepared.bundle, config.learners, targets, settings, grid_options);

  if (!config.ensemble_datasets.empty()) {
    auto derived = derive_ensemble_records(result.records, config.ensemble_datasets,
                                           prepared.bundle, "ensemble", result.failures);
    result.records.insert(result.records.end(), std::make_move_iterator(derived.begin()),
                          std::make_move_iterator(derived.end()));
  }

  write_records_jsonl(config.out_dir / "records.jsonl", result.records);

  ComparisonReport report = build_comparison_report(result.records, config.time_label,
                                                    config.random_label, config.protein_datasets);
  write_text(config.out_dir / "comparison.json", report.to_json_string());
  write_comparison_csv(config.out_dir / "comparison.csv", report);

  nlohmann::json filter_json;
  for (const auto& [name, rep] : prepared.filter_reports) {
    filter_json[name] = nlohmann::json::parse(rep.to_json_string());
  }
  write_text(config.out_dir / "filter_reports.json", filter_json.dump(2));

  std::cout << "records: " << result.records.size() << "\n";
  std::cout << "cell failures: " << result.failures.size() << "\n";
  for (const auto& f : result.failures) {
    std::cerr << "cell failure: " << f.dataset << "/" << f.learner << "/" << f.target << "/"
              << f.split_label << " rep " << f.rep << ": " << f.message << "\n";
  }
  if (report.combined_p) {
    std::cout << "combined p (random > time): " << *report.combined_p << "\n";
  }
}

void cmd_importance(const RunConfig& config, const CommandOptions& options) {
  PreparedData prepared = load_and_prepare(config);
  std::filesystem::create_directories(config.out_dir);
  ImportanceReport report = run_importance(config, prepared, options, nullptr);
  write_text(config.out_dir / "importance.json", report.to_json_string());
  write_importance_csv(config.out_dir / "importance.csv", report);
  for (const auto& [feature, value] : rank_features(report, config.importance.top_n)) {
    std::cout << feature << "\t" << value << "\n";
  }
}

void cmd_chemspace(const RunConfig& config, const CommandOptions& options) {
  (void)options;
  PreparedData prepared = load_and_prepare(config);
  const auto& bundle = prepared.bundle;
  const std::filesystem::path dir = config.out_dir / "chemspace";
  std::filesystem::create_directories(dir);

  const auto settings = resolve_splits(config, bundle);
  const SplitSetting& setting = find_split(settings, config.chemspace.split_label);
  const SplitPlan plan = plan_for(setting, bundle, config.seed);
  std::set<std::string> test_set(plan.test_ids.begin(), plan.test_ids.end());
  std::vector<bool> is_test(bundle.compound_ids.size());
  for (std::size_t i = 0; i < bundle.compound_ids.size(); ++i) {
    is_test[i] = test_set.count(bundle.compound_ids[i]) > 0;
  }

  // All-dataset concatenation of the filtered features, standardized.
  std::span<const FeatureTable> base_tables(bundle.tables);
  if (config.concat_datasets && !bundle.tables.empty() &&
      bundle.tables.back().dataset_name == "concat") {
    base_tables = base_tables.first(base_tables.size() - 1);
  }
  FeatureTable all = concatenate_datasets(base_tables, "all");
  Matrix standardized = standardize_columns(all.values);

  const int max_components =
      static_cast<int>(std::min(standardized.rows(), standardized.cols()));
  PcaResult pca = pca_embed(standardized, std::min(config.chemspace.pca_components, max_components));
  csv::Table scores;
  scores.header = {"compound_id", "group"};
  for (std::size_t c = 0; c < pca.scores.cols(); ++c) {
    scores.header.push_back("pc" + std::to_string(c + 1));
  }
  for (std::size_t i = 0; i < bundle.compound_ids.size(); ++i) {
    std::vector<std::string> row{bundle.compound_ids[i], is_test[i] ? "test" : "train"};
    for (std::size_t c = 0; c < pca.scores.cols(); ++c) {
      row.push_back(csv::format_double(pca.scores(i, c)));
    }
    scores.rows.push_back(std::move(row));
  }
  csv::write_file(dir / "pca_scores.csv", scores);
  csv::Table explained;
  explained.header = {"component", "explained_variance_fraction"};
  for (std::size_t c = 0; c < pca.explained_variance_fraction.size(); ++c) {
    explained.rows.push_back(
        {"pc" + std::to_string(c + 1), csv::format_double(pca.explained_variance_fraction[c])});
  }
  csv::write_file(dir / "pca_explained.csv", explained);

  CorrelationDistances distances = correlation_distance_matrix(standardized);
  write_group_histogram_csv(dir / "correlation_distances.csv",
                            group_pair_values(distances.matrix, is_test), 0.0, 2.0, 40);

  // Structure similarity from hashed circular fingerprints.
  std::vector<std::string> missing;
  std::vector<Fingerprint> fingerprints(bundle.compound_ids.size());
  for (std::size_t i = 0; i < bundle.registry.size(); ++i) {
    if (!bundle.registry[i].smiles) {
      missing.push_back(bundle.registry[i].id);
      continue;
    }
    Molecule mol = parse_smiles(*bundle.registry[i].smiles);
    fingerprints[i] = morgan_fingerprint(mol, config.chemspace.fingerprint_radius,
                                         config.chemspace.fingerprint_bits);
  }
  if (!missing.empty()) {
    throw ValidationError("chemspace: " + std::to_string(missing.size()) +
                          " compounds lack SMILES (first: " + missing.front() + ")");
  }
  Matrix tanimoto_matrix(fingerprints.size(), fingerprints.size());
  for (std::size_t i = 0; i < fingerprints.size(); ++i) {
    tanimoto_matrix(i, i) = 1.0;
    for (std::size_t j = i + 1; j < fingerprints.size(); ++j) {
      const double t = tanimoto(fingerprints[i], fingerprints[j]);
      tanimoto_matrix(i, j) = t;
      tanimoto_matrix(j, i) = t;
    }
  }
  write_group_histogram_csv(dir / "tanimoto.csv", group_pair_values(tanimoto_matrix, is_test), 0.0,
                            1.0, 20);

  // Compound network: correlation adjacency pruned by planarity.
  RowCorrelation correlation = row_correlation_matrix(standardized);
  WeightedGraph pmfg = pmfg_construct(correlation.matrix);
  write_edge_list_csv(dir / "pmfg_edges.csv", pmfg, bundle.compound_ids);
  write_hop_histogram_csv(dir / "path_lengths.csv",
                          group_pair_hops(all_pairs_hops(pmfg), is_test));

  std::cout << "chemspace reports written to " << dir.string() << "\n";
}

void cmd_leakage(const RunConfig& config, const CommandOptions& options) {
  PreparedData prepared = load_and_prepare(config);
  std::filesystem::create_directories(config.out_dir);

  std::vector<std::string> test_ids;
  ImportanceReport importance = run_importance(config, prepared, options, &test_ids);
  write_text(config.out_dir / "importance.json", importance.to_json_string());
  write_importance_csv(config.out_dir / "importance.csv", importance);

  auto approvals = load_approvals(*config.approvals_path);
  auto publications = load_publications(*config.publications_path);
  if (config.synonyms_path) {
    SynonymMap synonyms = load_synonym_map(*config.synonyms_path);
    std::map<std::string, MonthDate> mapped;
    for (const auto& [id, date] : approvals) {
      if (auto canonical = synonyms.lookup(id)) mapped[*canonical] = date;
    }
    approvals = std::move(mapped);
    std::vector<PublicationRecord> kept;
    for (auto& pub : publications) {
      if (auto canonical = synonyms.lookup(pub.compound_id)) {
        pub.compound_id = *canonical;
        kept.push_back(std::move(pub));
      }
    }
    publications = std::move(kept);
  }

  std::set<std::string> restrict_to(test_ids.begin(), test_ids.end());
  LagTable lags = compute_time_lags(approvals, publications, restrict_to);

  std::vector<std::string> ranked;
  for (const auto& [feature, value] : rank_features(importance, importance.feature_names.size())) {
    (void)value;
    ranked.push_back(feature);
  }
  LeakageResult result =
      top_feature_lag_test(lags, ranked, config.leakage.k, config.leakage.n_permutations,
                           derive_seed(config.seed, "leakage"), options.jobs);
  write_text(config.out_dir / "leakage.json", result.to_json_string());
  std::cout << "observed mean lag (top " << result.k << "): " << result.observed_mean_lag
            << " months, p = " << result.p_value << "\n";
}

SyntheticFiles cmd_synth(const RunConfig& config) {
  if (!config.synthetic) throw ConfigError({"'synthetic' section is required for synth"});
  SyntheticFiles files = generate_synthetic(*config.synthetic, config.out_dir);
  std::cout << "synthetic benchmark written to " << config.out_dir.string() << " ("
            << files.n_pre_drift << " pre-drift / " << files.n_post_drift
            << " post-drift compounds)\n";
  return files;
}

}  // namespace timesplit
