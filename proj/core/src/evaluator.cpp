#include "timesplit/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"
#include "timesplit/parallel.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

std::vector<double> train_fold_ensemble(const LearnerSpec& spec, const Matrix& train_X,
                                        std::span<const std::int8_t> train_y, const Matrix& test_X,
                                        int k, std::uint64_t splitting_seed,
                                        std::uint64_t training_seed) {
  FoldPlan folds = stratified_kfold(train_y, k, splitting_seed);

  std::vector<std::vector<double>> per_model;
  per_model.reserve(k);
  for (int fold = 0; fold < k; ++fold) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < train_y.size(); ++i) {
      if (folds.fold_of[i] != fold) rows.push_back(i);
    }
    Matrix fold_X = train_X.select_rows(rows);
    std::vector<std::int8_t> fold_y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) fold_y[i] = train_y[rows[i]];

    LearnerSpec fold_spec = spec;
    fold_spec.training_seed = derive_seed(training_seed, static_cast<std::uint64_t>(fold));
    per_model.push_back(train(fold_spec, fold_X, fold_y).predict_proba(test_X));
  }

  std::vector<double> mean(test_X.rows());
  std::vector<double> values(k);
  for (std::size_t row = 0; row < mean.size(); ++row) {
    for (int f = 0; f < k; ++f) values[f] = per_model[f][row];
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    mean[row] = sum / static_cast<double>(k);
  }
  return mean;
}

FeatureTable concatenate_datasets(std::span<const FeatureTable> tables, std::string result_name) {
  if (tables.empty()) throw Error("concatenate_datasets: no tables");
  for (std::size_t t = 1; t < tables.size(); ++t) {
    if (tables[t].compound_ids != tables[0].compound_ids) {
      throw Error("concatenate_datasets: '" + tables[t].dataset_name +
                  "' is not aligned with '" + tables[0].dataset_name + "'");
    }
  }
  FeatureTable out;
  out.dataset_name = std::move(result_name);
  out.compound_ids = tables[0].compound_ids;
  std::size_t total_cols = 0;
  for (const auto& t : tables) total_cols += t.n_features();
  out.values = Matrix(out.compound_ids.size(), total_cols);
  std::size_t offset = 0;
  for (const auto& t : tables) {
    for (const auto& f : t.feature_names) out.feature_names.push_back(t.dataset_name + "." + f);
    for (std::size_t r = 0; r < t.n_compounds(); ++r) {
      for (std::size_t c = 0; c < t.n_features(); ++c) out.values(r, offset + c) = t.values(r, c);
    }
    offset += t.n_features();
  }
  return out;
}

std::vector<double> ensemble_across_datasets(std::span<const std::vector<double>> vectors) {
  if (vectors.empty()) throw Error("ensemble_across_datasets: no probability vectors");
  const std::size_t n = vectors[0].size();
  for (const auto& v : vectors) {
    if (v.size() != n) throw Error("ensemble_across_datasets: length mismatch");
  }
  std::vector<double> mean(n, 0.0);
  for (const auto& v : vectors) {
    for (std::size_t i = 0; i < n; ++i) mean[i] += v[i];
  }
  for (double& v : mean) v /= static_cast<double>(vectors.size());
  return mean;
}

std::vector<double> fit_impute_means(const Matrix& train_X) {
  std::vector<double> means(train_X.cols(), 0.0);
  for (std::size_t j = 0; j < train_X.cols(); ++j) {
    std::size_t defined = 0;
    double sum = pairwise_sum(train_X.rows(), [&](std::size_t i) {
      const double v = train_X(i, j);
      if (is_missing(v)) return 0.0;
      ++defined;
      return v;
    });
    means[j] = defined == 0 ? 0.0 : sum / static_cast<double>(defined);
  }
  return means;
}

void apply_impute_means(Matrix& X, std::span<const double> means) {
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) {
      if (is_missing(X(i, j))) X(i, j) = means[j];
    }
  }
}

namespace {

std::vector<std::size_t> rows_for_ids(const DatasetBundle& bundle,
                                      std::span<const std::string> ids) {
  std::unordered_map<std::string_view, std::size_t> pos;
  pos.reserve(bundle.compound_ids.size());
  for (std::size_t i = 0; i < bundle.compound_ids.size(); ++i) pos.emplace(bundle.compound_ids[i], i);
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = pos.find(id);
    if (it == pos.end()) throw Error("unknown compound id '" + id + "' in split plan");
    rows.push_back(it->second);
  }
  return rows;
}

struct CellOutcome {
  MetricSet metrics;
  std::vector<double> probabilities;
};

// One grid cell: impute from labeled training rows, fit the fold ensemble,
// predict every test row, score the labeled ones.
CellOutcome evaluate_cell(const Matrix& dataset_matrix, const LabelTable& labels,
                          std::size_t target_idx, std::span<const std::size_t> train_rows,
                          std::span<const std::size_t> test_rows, const LearnerSpec& spec,
                          int k_folds, std::uint64_t splitting_seed, std::uint64_t training_seed) {
  std::vector<std::size_t> labeled_train;
  for (std::size_t r : train_rows) {
    if (labels.at(r, target_idx) != kMissingLabel) labeled_train.push_back(r);
  }
  if (labeled_train.size() < 2) throw Error("cell has fewer than 2 labeled training rows");

  Matrix train_X = dataset_matrix.select_rows(labeled_train);
  std::vector<std::int8_t> train_y(labeled_train.size());
  for (std::size_t i = 0; i < labeled_train.size(); ++i) {
    train_y[i] = labels.at(labeled_train[i], target_idx);
  }
  Matrix test_X = dataset_matrix.select_rows(test_rows);

  const std::vector<double> means = fit_impute_means(train_X);
  apply_impute_means(train_X, means);
  apply_impute_means(test_X, means);

  CellOutcome out;
  out.probabilities =
      train_fold_ensemble(spec, train_X, train_y, test_X, k_folds, splitting_seed, training_seed);

  std::vector<double> scored;
  std::vector<std::int8_t> scored_y;
  for (std::size_t i = 0; i < test_rows.size(); ++i) {
    const std::int8_t y = labels.at(test_rows[i], target_idx);
    if (y == kMissingLabel) continue;
    scored.push_back(out.probabilities[i]);
    scored_y.push_back(y);
  }
  if (scored.empty()) throw Error("cell has no labeled test rows");
  out.metrics = compute_metrics(scored, scored_y);
  return out;
}

}  // namespace

GridResult run_grid(const DatasetBundle& bundle, std::span<const NamedLearner> learners,
                    std::span<const std::string> targets, std::span<const SplitSetting> settings,
                    const GridOptions& options) {
  if (options.n_repetitions <= 0) throw Error("run_grid: n_repetitions must be > 0");
  if (bundle.labels.empty() && !targets.empty()) throw Error("run_grid: bundle has no labels");

  std::vector<std::size_t> target_idx;
  for (const auto& t : targets) {
    auto idx = bundle.labels.target_index(t);
    if (!idx) throw ValidationError("run_grid: unknown target '" + t + "'");
    target_idx.push_back(*idx);
  }

  // Plans are resolved up front; they are shared by every dataset/learner/
  // target combination of a (setting, repetition) pair.
  struct ResolvedPlan {
    std::shared_ptr<const SplitPlan> plan;
    std::shared_ptr<const std::vector<std::string>> test_ids;
    std::vector<std::size_t> train_rows, test_rows;
  };
  const int n_reps = options.n_repetitions;
  std::vector<std::vector<ResolvedPlan>> plans(settings.size());
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const auto& setting = settings[s];
    auto resolve = [&](SplitPlan&& p) {
      ResolvedPlan r;
      r.plan = std::make_shared<const SplitPlan>(std::move(p));
      r.test_ids = std::shared_ptr<const std::vector<std::string>>(r.plan, &r.plan->test_ids);
      r.train_rows = rows_for_ids(bundle, r.plan->train_ids);
      r.test_rows = rows_for_ids(bundle, r.plan->test_ids);
      return r;
    };
    if (setting.method == SplitMethod::time) {
      if (!setting.threshold) throw ValidationError("time split '" + setting.label + "' needs a threshold");
      ResolvedPlan one = resolve(time_split(bundle, *setting.threshold));
      plans[s].assign(static_cast<std::size_t>(n_reps), one);
    } else {
      if (!setting.n_train || !setting.n_test) {
        throw ValidationError("random split '" + setting.label + "' needs n_train and n_test");
      }
      const std::uint64_t plan_base = derive_seed(options.base_seed, "plan:" + setting.label);
      plans[s].reserve(n_reps);
      for (int rep = 0; rep < n_reps; ++rep) {
        plans[s].push_back(resolve(random_split(
            bundle, *setting.n_train, *setting.n_test, plan_base + static_cast<std::uint64_t>(rep),
            setting.fixed_test_positive_count,
            setting.ratio_target ? &*setting.ratio_target : nullptr)));
      }
    }
  }

  struct CellRef {
    std::size_t dataset, learner, target, setting;
    int rep;
  };
  std::vector<CellRef> cells;
  for (std::size_t d = 0; d < bundle.tables.size(); ++d) {
    for (std::size_t l = 0; l < learners.size(); ++l) {
      for (std::size_t t = 0; t < targets.size(); ++t) {
        for (std::size_t s = 0; s < settings.size(); ++s) {
          for (int rep = 0; rep < n_reps; ++rep) cells.push_back({d, l, t, s, rep});
        }
      }
    }
  }

  std::vector<std::optional<RunRecord>> slots(cells.size());
  std::vector<std::optional<CellFailure>> failure_slots(cells.size());

  parallel_for(cells.size(), options.jobs, [&](std::size_t i) {
    const CellRef& cell = cells[i];
    const auto& table = bundle.tables[cell.dataset];
    const auto& learner = learners[cell.learner];
    const auto& target = targets[cell.target];
    const auto& setting = settings[cell.setting];
    const ResolvedPlan& plan = plans[cell.setting][static_cast<std::size_t>(cell.rep)];

    const std::string cell_id = table.dataset_name + "\x1f" + learner.name + "\x1f" + target +
                                "\x1f" + setting.label + "\x1f" + std::to_string(cell.rep);
    SplitMix64 seeds(derive_seed(options.base_seed, cell_id));
    const std::uint64_t splitting_seed = seeds.next();
    const std::uint64_t training_seed = seeds.next();

    RunRecord record;
    record.dataset = table.dataset_name;
    record.learner = learner.name;
    record.target = target;
    record.split_label = setting.label;
    record.method = setting.method;
    record.threshold = plan.plan->threshold;
    record.plan_seed = plan.plan->seed;
    record.rep = cell.rep;
    record.test_ids = plan.test_ids;
    try {
      CellOutcome outcome =
          evaluate_cell(table.values, bundle.labels, target_idx[cell.target], plan.train_rows,
                        plan.test_rows, learner.spec, options.k_folds, splitting_seed, training_seed);
      record.metrics = outcome.metrics;
      record.probabilities = std::move(outcome.probabilities);
      slots[i] = std::move(record);
    } catch (const std::exception& e) {
      failure_slots[i] = CellFailure{table.dataset_name, learner.name, target, setting.label,
                                     cell.rep, e.what()};
    }
  });

  GridResult result;
  for (auto& slot : slots) {
    if (slot) result.records.push_back(std::move(*slot));
  }
  for (auto& slot : failure_slots) {
    if (slot) result.failures.push_back(std::move(*slot));
  }
  return result;
}

std::vector<RunRecord> derive_ensemble_records(std::span<const RunRecord> records,
                                               std::span<const std::string> member_datasets,
                                               const DatasetBundle& bundle,
                                               const std::string& ensemble_name,
                                               std::vector<CellFailure>& failures) {
  if (member_datasets.empty()) return {};
  std::set<std::string> members(member_datasets.begin(), member_datasets.end());

  // Group member records by (learner, target, split, rep), keeping first-seen
  // order so derived records follow the grid's canonical order.
  using Key = std::tuple<std::string, std::string, std::string, int>;
  std::vector<Key> order;
  std::map<Key, std::vector<const RunRecord*>> groups;
  for (const auto& r : records) {
    if (!members.count(r.dataset)) continue;
    Key key{r.learner, r.target, r.split_label, r.rep};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }

  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < bundle.compound_ids.size(); ++i) {
    row_of.emplace(bundle.compound_ids[i], i);
  }

  std::vector<RunRecord> derived;
  for (const auto& key : order) {
    const auto& group = groups[key];
    if (group.size() != members.size()) {
      failures.push_back(CellFailure{ensemble_name, std::get<0>(key), std::get<1>(key),
                                     std::get<2>(key), std::get<3>(key),
                                     "ensemble member records missing (" +
                                         std::to_string(group.size()) + " of " +
                                         std::to_string(members.size()) + ")"});
      continue;
    }
    std::vector<std::vector<double>> member_probs;
    member_probs.reserve(group.size());
    for (const RunRecord* r : group) member_probs.push_back(r->probabilities);

    RunRecord out = *group.front();
    out.dataset = ensemble_name;
    out.probabilities = ensemble_across_datasets(member_probs);

    auto t_idx = bundle.labels.target_index(out.target);
    if (!t_idx) continue;
    std::vector<double> scored;
    std::vector<std::int8_t> scored_y;
    for (std::size_t i = 0; i < out.test_ids->size(); ++i) {
      const std::size_t row = row_of.at((*out.test_ids)[i]);
      const std::int8_t y = bundle.labels.at(row, *t_idx);
      if (y == kMissingLabel) continue;
      scored.push_back(out.probabilities[i]);
      scored_y.push_back(y);
    }
    out.metrics = compute_metrics(scored, scored_y);
    derived.push_back(std::move(out));
  }
  return derived;
}

// --- comparison ---------------------------------------------------------------

ComparisonReport build_comparison_report(std::span<const RunRecord> records,
                                         const std::string& time_label,
                                         const std::string& random_label,
                                         std::vector<std::string> protein_datasets) {
  ComparisonReport report;
  report.time_label = time_label;
  report.random_label = random_label;
  report.protein_datasets = std::move(protein_datasets);

  using Key = std::tuple<std::string, std::string, std::string>;  // dataset, learner, target
  std::vector<Key> order;
  std::map<Key, ComparisonCell> cells;
  for (const auto& r : records) {
    const bool is_time = r.split_label == time_label;
    const bool is_random = r.split_label == random_label;
    if (!is_time && !is_random) continue;
    Key key{r.dataset, r.learner, r.target};
    auto [it, inserted] = cells.try_emplace(key);
    if (inserted) {
      order.push_back(key);
      it->second.dataset = r.dataset;
      it->second.learner = r.learner;
      it->second.target = r.target;
    }
    if (r.metrics.roc_auc) {
      (is_time ? it->second.auc_time : it->second.auc_random).push_back(*r.metrics.roc_auc);
    } else {
      ++(is_time ? it->second.undefined_time : it->second.undefined_random);
    }
  }

  auto mean_of = [](const std::vector<double>& v) -> std::optional<double> {
    if (v.empty()) return std::nullopt;
    return pairwise_sum(v) / static_cast<double>(v.size());
  };
  for (const auto& key : order) {
    ComparisonCell cell = std::move(cells[key]);
    cell.mean_time = mean_of(cell.auc_time);
    cell.mean_random = mean_of(cell.auc_random);
    if (cell.complete()) {
      cell.diff = *cell.mean_random - *cell.mean_time;
    } else {
      ++report.incomplete_cells;
    }
    report.cells.push_back(std::move(cell));
  }

  // Per-target paired one-sided test (random > time) over complete cells.
  std::vector<std::string> target_order;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_target;
  for (const auto& cell : report.cells) {
    if (!cell.complete()) continue;
    auto [it, inserted] = by_target.try_emplace(cell.target);
    if (inserted) target_order.push_back(cell.target);
    it->second.first.push_back(*cell.mean_random);
    it->second.second.push_back(*cell.mean_time);
  }
  std::vector<double> combinable;
  for (const auto& target : target_order) {
    const auto& [random_means, time_means] = by_target[target];
    TargetComparison tc;
    tc.target = target;
    tc.n_pairs = random_means.size();
    if (tc.n_pairs >= 2) {
      tc.ttest = paired_t_test_one_sided(random_means, time_means, Alternative::a_greater);
      if (tc.ttest->p > 0.0 && tc.ttest->p < 1.0) {
        combinable.push_back(tc.ttest->p);
      } else {
        ++report.excluded_p_values;
      }
    }
    report.per_target.push_back(std::move(tc));
  }
  if (!combinable.empty()) report.combined_p = stouffer_combine(combinable);
  return report;
}

namespace {

nlohmann::json metrics_to_json(const MetricSet& m) {
  nlohmann::json j;
  j["accuracy"] = m.accuracy;
  j["f1"] = m.f1;
  j["mcc"] = m.mcc;
  j["roc_auc"] = m.roc_auc ? nlohmann::json(*m.roc_auc) : nlohmann::json(nullptr);
  j["pr_auc"] = m.pr_auc ? nlohmann::json(*m.pr_auc) : nlohmann::json(nullptr);
  return j;
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::string ComparisonReport::to_json_string() const {
  nlohmann::json j;
  j["time_label"] = time_label;
  j["random_label"] = random_label;
  j["protein_datasets"] = protein_datasets;
  j["incomplete_cells"] = incomplete_cells;
  j["excluded_p_values"] = excluded_p_values;

  auto cells_json = nlohmann::json::array();
  std::set<std::string> protein(protein_datasets.begin(), protein_datasets.end());
  // Per-target difference lists, split by the protein-interaction partition.
  std::map<std::string, std::map<std::string, std::vector<double>>> partitions;
  for (const auto& cell : cells) {
    nlohmann::json c;
    c["dataset"] = cell.dataset;
    c["learner"] = cell.learner;
    c["target"] = cell.target;
    c["auc_time_reps"] = cell.auc_time;
    c["auc_random_reps"] = cell.auc_random;
    c["undefined_time"] = cell.undefined_time;
    c["undefined_random"] = cell.undefined_random;
    c["mean_auc_time"] = cell.mean_time ? nlohmann::json(*cell.mean_time) : nlohmann::json(nullptr);
    c["mean_auc_random"] =
        cell.mean_random ? nlohmann::json(*cell.mean_random) : nlohmann::json(nullptr);
    c["auc_diff"] = cell.diff ? nlohmann::json(*cell.diff) : nlohmann::json(nullptr);
    cells_json.push_back(std::move(c));
    if (cell.diff) {
      partitions[cell.target][protein.count(cell.dataset) ? "protein" : "other"].push_back(
          *cell.diff);
    }
  }
  j["cells"] = std::move(cells_json);

  auto targets_json = nlohmann::json::array();
  for (const auto& tc : per_target) {
    nlohmann::json t;
    t["target"] = tc.target;
    t["n_pairs"] = tc.n_pairs;
    if (tc.ttest) {
      t["p_value"] = tc.ttest->p;
      t["t_statistic"] = tc.ttest->t;
      t["degenerate"] = tc.ttest->degenerate;
    } else {
      t["p_value"] = nullptr;
    }
    targets_json.push_back(std::move(t));
  }
  j["per_target"] = std::move(targets_json);

  nlohmann::json partition_json;
  for (const auto& [target, split] : partitions) {
    nlohmann::json p;
    for (const auto& [name, diffs] : split) {
      p[name] = {{"diffs", diffs}, {"median_diff", median_of(diffs)}};
    }
    partition_json[target] = std::move(p);
  }
  j["partition"] = std::move(partition_json);

  j["combined_p"] = combined_p ? nlohmann::json(*combined_p) : nlohmann::json(nullptr);
  return j.dump(2);
}

void write_records_jsonl(const std::filesystem::path& path, std::span<const RunRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path.string());
  for (const auto& r : records) {
    nlohmann::json j;
    j["dataset"] = r.dataset;
    j["learner"] = r.learner;
    j["target"] = r.target;
    j["split"] = {{"label", r.split_label},
                  {"method", std::string(split_method_name(r.method))},
                  {"threshold",
                   r.threshold ? nlohmann::json(r.threshold->to_string()) : nlohmann::json(nullptr)},
                  {"seed", r.plan_seed ? nlohmann::json(*r.plan_seed) : nlohmann::json(nullptr)}};
    j["rep"] = r.rep;
    j["metrics"] = metrics_to_json(r.metrics);
    j["test_ids"] = *r.test_ids;
    j["probabilities"] = r.probabilities;
    out << j.dump() << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

void write_comparison_csv(const std::filesystem::path& path, const ComparisonReport& report) {
  csv::Table table;
  table.header = {"dataset",        "learner",         "target",
                  "n_reps_time",    "n_reps_random",   "mean_auc_time",
                  "mean_auc_random", "auc_diff",       "protein_dataset"};
  std::set<std::string> protein(report.protein_datasets.begin(), report.protein_datasets.end());
  for (const auto& cell : report.cells) {
    std::vector<std::string> row;
    row.push_back(cell.dataset);
    row.push_back(cell.learner);
    row.push_back(cell.target);
    row.push_back(std::to_string(cell.auc_time.size()));
    row.push_back(std::to_string(cell.auc_random.size()));
    row.push_back(cell.mean_time ? csv::format_double(*cell.mean_time) : "");
    row.push_back(cell.mean_random ? csv::format_double(*cell.mean_random) : "");
    row.push_back(cell.diff ? csv::format_double(*cell.diff) : "");
    row.push_back(protein.count(cell.dataset) ? "1" : "0");
    table.rows.push_back(std::move(row));
  }
  csv::write_file(path, table);
}

}  // namespace timesplit
