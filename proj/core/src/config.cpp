#include "timesplit/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "timesplit/error.hpp"

namespace timesplit {

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base,
                              const std::filesystem::path& path) {
  return path.is_absolute() ? path : base / path;
}

// Typed getters that accumulate problems instead of throwing one at a time.
struct Reader {
  std::vector<std::string> problems;

  template <class T>
  T get(const json& j, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
      return j.at(key).get<T>();
    } catch (const json::exception&) {
      problems.push_back("field '" + key + "' has the wrong type");
      return fallback;
    }
  }

  std::optional<MonthDate> get_month(const json& j, const std::string& key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    try {
      return MonthDate::parse(j.at(key).get<std::string>());
    } catch (const std::exception& e) {
      problems.push_back(std::string("field '") + key + "': " + e.what());
      return std::nullopt;
    }
  }
};

LearnerSpec learner_from_json(const json& j, Reader& reader) {
  LearnerSpec spec;
  const std::string kind = reader.get<std::string>(j, "kind", "elastic_net");
  try {
    spec.kind = learner_kind_from_name(kind);
  } catch (const std::exception& e) {
    reader.problems.push_back(e.what());
    return spec;
  }
  spec.elastic_net.l1_weight = reader.get(j, "l1_weight", spec.elastic_net.l1_weight);
  spec.elastic_net.l2_weight = reader.get(j, "l2_weight", spec.elastic_net.l2_weight);
  spec.elastic_net.max_iters = reader.get(j, "max_iters", spec.elastic_net.max_iters);
  spec.elastic_net.tol = reader.get(j, "tol", spec.elastic_net.tol);
  spec.naive_bayes.variance_floor = reader.get(j, "variance_floor", spec.naive_bayes.variance_floor);
  spec.gbdt.n_trees = reader.get(j, "n_trees", spec.gbdt.n_trees);
  spec.gbdt.max_depth = reader.get(j, "max_depth", spec.gbdt.max_depth);
  spec.gbdt.learning_rate = reader.get(j, "learning_rate", spec.gbdt.learning_rate);
  spec.gbdt.min_leaf = reader.get(j, "min_leaf", spec.gbdt.min_leaf);
  return spec;
}

SyntheticSpec synthetic_from_json(const json& j, Reader& reader) {
  SyntheticSpec spec;
  spec.n_compounds = reader.get<std::size_t>(j, "n_compounds", spec.n_compounds);
  if (auto d = reader.get_month(j, "timeline_start")) spec.timeline_start = *d;
  if (auto d = reader.get_month(j, "timeline_end")) spec.timeline_end = *d;
  if (auto d = reader.get_month(j, "drift_point")) spec.drift_point = *d;
  if (j.contains("n_pre_drift") && !j.at("n_pre_drift").is_null()) {
    spec.n_pre_drift = reader.get<std::size_t>(j, "n_pre_drift", 0);
  }
  spec.stable_strength = reader.get(j, "stable_strength", spec.stable_strength);
  spec.drift_strength = reader.get(j, "drift_strength", spec.drift_strength);
  spec.noise_level = reader.get(j, "noise_level", spec.noise_level);
  spec.leak_rate = reader.get(j, "leak_rate", spec.leak_rate);
  spec.background_rate = reader.get(j, "background_rate", spec.background_rate);
  spec.leak_lag_mean_months = reader.get(j, "leak_lag_mean_months", spec.leak_lag_mean_months);
  spec.background_lag_min_months =
      reader.get(j, "background_lag_min_months", spec.background_lag_min_months);
  spec.background_lag_max_months =
      reader.get(j, "background_lag_max_months", spec.background_lag_max_months);
  spec.n_knowledge_features = reader.get(j, "n_knowledge_features", spec.n_knowledge_features);
  spec.n_leaky_features = reader.get(j, "n_leaky_features", spec.n_leaky_features);
  spec.n_noise_features = reader.get(j, "n_noise_features", spec.n_noise_features);
  spec.shuffle_publication_dates =
      reader.get(j, "shuffle_publication_dates", spec.shuffle_publication_dates);
  spec.seed = reader.get(j, "seed", spec.seed);
  return spec;
}

}  // namespace

RunConfig RunConfig::from_json_string(const std::string& text,
                                      const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  Reader reader;
  RunConfig cfg;

  if (j.contains("seed")) {
    cfg.seed = reader.get<std::uint64_t>(j, "seed", 0);
    cfg.seed_set = true;
  }
  cfg.out_dir = resolve(base_dir, reader.get<std::string>(j, "out_dir", "out"));

  if (j.contains("inputs")) {
    const json& in = j.at("inputs");
    if (in.contains("features")) {
      if (!in.at("features").is_array()) {
        reader.problems.push_back("inputs.features must be an array");
      } else {
        for (const auto& f : in.at("features")) {
          FeatureInput input;
          input.name = reader.get<std::string>(f, "name", "");
          input.path = resolve(base_dir, reader.get<std::string>(f, "path", ""));
          if (input.name.empty()) reader.problems.push_back("feature input without a name");
          cfg.features.push_back(std::move(input));
        }
      }
    }
    auto path_of = [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!in.contains(key) || in.at(key).is_null()) return std::nullopt;
      return resolve(base_dir, reader.get<std::string>(in, key, ""));
    };
    cfg.labels_path = path_of("labels");
    cfg.dates_path = path_of("dates");
    cfg.smiles_path = path_of("smiles");
    cfg.synonyms_path = path_of("synonyms");
    cfg.approvals_path = path_of("approvals");
    cfg.publications_path = path_of("publications");
  }

  if (j.contains("filter")) {
    cfg.filter.cv_threshold = reader.get(j.at("filter"), "cv_threshold", cfg.filter.cv_threshold);
    cfg.filter.r2_threshold = reader.get(j.at("filter"), "r2_threshold", cfg.filter.r2_threshold);
  }
  if (j.contains("positive_ratio")) {
    cfg.positive_ratio_low = reader.get(j.at("positive_ratio"), "low", cfg.positive_ratio_low);
    cfg.positive_ratio_high = reader.get(j.at("positive_ratio"), "high", cfg.positive_ratio_high);
  }

  if (j.contains("splits")) {
    for (const auto& s : j.at("splits")) {
      SplitSetting setting;
      const std::string method = reader.get<std::string>(s, "method", "time");
      if (method == "time") {
        setting.method = SplitMethod::time;
      } else if (method == "random") {
        setting.method = SplitMethod::random;
      } else {
        reader.problems.push_back("unknown split method '" + method + "'");
        continue;
      }
      setting.label = reader.get<std::string>(s, "label", method);
      setting.threshold = reader.get_month(s, "threshold");
      if (s.contains("n_train") && !s.at("n_train").is_null()) {
        setting.n_train = reader.get<std::size_t>(s, "n_train", 0);
      }
      if (s.contains("n_test") && !s.at("n_test").is_null()) {
        setting.n_test = reader.get<std::size_t>(s, "n_test", 0);
      }
      if (s.contains("fixed_test_positive_count") && !s.at("fixed_test_positive_count").is_null()) {
        setting.fixed_test_positive_count =
            reader.get<std::size_t>(s, "fixed_test_positive_count", 0);
      }
      if (s.contains("ratio_target") && !s.at("ratio_target").is_null()) {
        setting.ratio_target = reader.get<std::string>(s, "ratio_target", "");
      }
      cfg.splits.push_back(std::move(setting));
    }
  } else {
    SplitSetting time_default;
    time_default.label = "time";
    time_default.method = SplitMethod::time;
    SplitSetting random_default;
    random_default.label = "random";
    random_default.method = SplitMethod::random;
    cfg.splits.push_back(std::move(time_default));
    cfg.splits.push_back(std::move(random_default));
  }

  if (j.contains("learners")) {
    for (const auto& l : j.at("learners")) {
      NamedLearner learner;
      learner.spec = learner_from_json(l, reader);
      learner.name =
          reader.get<std::string>(l, "name", std::string(learner_kind_name(learner.spec.kind)));
      cfg.learners.push_back(std::move(learner));
    }
  } else {
    for (LearnerKind kind :
         {LearnerKind::elastic_net, LearnerKind::naive_bayes, LearnerKind::gbdt}) {
      NamedLearner learner;
      learner.spec.kind = kind;
      learner.name = std::string(learner_kind_name(kind));
      cfg.learners.push_back(std::move(learner));
    }
  }

  cfg.targets = reader.get(j, "targets", cfg.targets);
  cfg.repetitions = reader.get(j, "repetitions", cfg.repetitions);
  cfg.k_folds = reader.get(j, "k_folds", cfg.k_folds);
  cfg.concat_datasets = reader.get(j, "concat_datasets", cfg.concat_datasets);
  cfg.ensemble_datasets = reader.get(j, "ensemble_datasets", cfg.ensemble_datasets);
  cfg.protein_datasets = reader.get(j, "protein_datasets", cfg.protein_datasets);
  if (j.contains("comparison")) {
    cfg.time_label = reader.get(j.at("comparison"), "time_label", cfg.time_label);
    cfg.random_label = reader.get(j.at("comparison"), "random_label", cfg.random_label);
  }

  if (j.contains("importance")) {
    const json& imp = j.at("importance");
    cfg.importance.dataset = reader.get<std::string>(imp, "dataset", "");
    cfg.importance.learner_name = reader.get<std::string>(imp, "learner", "");
    cfg.importance.target = reader.get<std::string>(imp, "target", "");
    cfg.importance.split_label = reader.get(imp, "split", cfg.importance.split_label);
    cfg.importance.n_folds = reader.get(imp, "n_folds", cfg.importance.n_folds);
    cfg.importance.n_shuffles = reader.get(imp, "n_shuffles", cfg.importance.n_shuffles);
    cfg.importance.top_n = reader.get(imp, "top_n", cfg.importance.top_n);
  }
  if (j.contains("leakage")) {
    cfg.leakage.k = reader.get(j.at("leakage"), "k", cfg.leakage.k);
    cfg.leakage.n_permutations =
        reader.get(j.at("leakage"), "n_permutations", cfg.leakage.n_permutations);
  }
  if (j.contains("chemspace")) {
    const json& cs = j.at("chemspace");
    cfg.chemspace.split_label = reader.get(cs, "split", cfg.chemspace.split_label);
    cfg.chemspace.fingerprint_radius =
        reader.get(cs, "fingerprint_radius", cfg.chemspace.fingerprint_radius);
    cfg.chemspace.fingerprint_bits =
        reader.get(cs, "fingerprint_bits", cfg.chemspace.fingerprint_bits);
    cfg.chemspace.pca_components = reader.get(cs, "pca_components", cfg.chemspace.pca_components);
  }
  if (j.contains("synthetic")) {
    cfg.synthetic = synthetic_from_json(j.at("synthetic"), reader);
    if (!cfg.synthetic->seed && cfg.seed_set) cfg.synthetic->seed = cfg.seed;
  }

  if (!reader.problems.empty()) throw ConfigError(std::move(reader.problems));
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({"cannot open config file: " + path.string()});
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str(), path.parent_path());
}

void RunConfig::validate_for(std::string_view command) const {
  std::vector<std::string> problems;
  auto require_file = [&](const std::optional<std::filesystem::path>& path, const char* what,
                          bool required) {
    if (!path) {
      if (required) problems.push_back(std::string("inputs.") + what + " is required");
      return;
    }
    if (!std::filesystem::exists(*path)) {
      problems.push_back(std::string("inputs.") + what + ": file not found: " + path->string());
    }
  };

  if (!seed_set) problems.push_back("seed is required (config 'seed' or --seed)");

  if (command == "synth") {
    if (!synthetic) problems.push_back("'synthetic' section is required for synth");
  } else {
    if (features.empty()) problems.push_back("inputs.features must list at least one dataset");
    std::set<std::string> names;
    for (const auto& f : features) {
      if (!names.insert(f.name).second) {
        problems.push_back("duplicate dataset name '" + f.name + "'");
      }
      if (!std::filesystem::exists(f.path)) {
        problems.push_back("feature file not found: " + f.path.string());
      }
    }
    require_file(synonyms_path, "synonyms", false);
    require_file(smiles_path, "smiles", false);

    const bool needs_labels =
        command == "evaluate" || command == "importance" || command == "leakage";
    require_file(labels_path, "labels", needs_labels);

    bool has_time = false, has_random = false;
    std::set<std::string> labels_seen;
    for (const auto& s : splits) {
      if (!labels_seen.insert(s.label).second) {
        problems.push_back("duplicate split label '" + s.label + "'");
      }
      if (s.method == SplitMethod::time) {
        has_time = true;
        if (!s.threshold) problems.push_back("time split '" + s.label + "' needs a threshold");
      } else {
        has_random = true;
        if (s.fixed_test_positive_count && !s.ratio_target) {
          problems.push_back("split '" + s.label +
                             "': fixed_test_positive_count needs ratio_target");
        }
      }
    }
    require_file(dates_path, "dates", has_time);

    std::set<std::string> learner_names;
    for (const auto& l : learners) {
      if (!learner_names.insert(l.name).second) {
        problems.push_back("duplicate learner name '" + l.name + "'; set a distinct 'name'");
      }
      try {
        l.spec.validate();
      } catch (const std::exception& e) {
        problems.push_back("learner '" + l.name + "': " + e.what());
      }
    }

    if (command == "evaluate") {
      if (repetitions <= 0) problems.push_back("repetitions must be > 0");
      if (k_folds < 2) problems.push_back("k_folds must be >= 2");
      if (!has_random && !has_time) problems.push_back("at least one split is required");
    }
    if (command == "importance" || command == "leakage") {
      if (importance.dataset.empty()) problems.push_back("importance.dataset is required");
      if (importance.learner_name.empty()) problems.push_back("importance.learner is required");
      if (importance.target.empty()) problems.push_back("importance.target is required");
    }
    if (command == "leakage") {
      require_file(approvals_path, "approvals", true);
      require_file(publications_path, "publications", true);
      if (leakage.k <= 0) problems.push_back("leakage.k must be > 0");
      if (leakage.n_permutations <= 0) problems.push_back("leakage.n_permutations must be > 0");
    }
    if (command == "chemspace") {
      require_file(smiles_path, "smiles", true);
      require_file(dates_path, "dates", true);
    }
    if (!(positive_ratio_low >= 0.0 && positive_ratio_low < positive_ratio_high &&
          positive_ratio_high <= 1.0)) {
      problems.push_back("positive_ratio must satisfy 0 <= low < high <= 1");
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
}

std::string RunConfig::to_json_string() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir.string();
  json in;
  json feats = json::array();
  for (const auto& f : features) feats.push_back({{"name", f.name}, {"path", f.path.string()}});
  in["features"] = std::move(feats);
  auto opt_path = [](const std::optional<std::filesystem::path>& p) {
    return p ? json(p->string()) : json(nullptr);
  };
  in["labels"] = opt_path(labels_path);
  in["dates"] = opt_path(dates_path);
  in["smiles"] = opt_path(smiles_path);
  in["synonyms"] = opt_path(synonyms_path);
  in["approvals"] = opt_path(approvals_path);
  in["publications"] = opt_path(publications_path);
  j["inputs"] = std::move(in);
  j["filter"] = {{"cv_threshold", filter.cv_threshold}, {"r2_threshold", filter.r2_threshold}};
  j["positive_ratio"] = {{"low", positive_ratio_low}, {"high", positive_ratio_high}};
  json splits_json = json::array();
  for (const auto& s : splits) {
    json sj;
    sj["label"] = s.label;
    sj["method"] = std::string(split_method_name(s.method));
    sj["threshold"] = s.threshold ? json(s.threshold->to_string()) : json(nullptr);
    sj["n_train"] = s.n_train ? json(*s.n_train) : json(nullptr);
    sj["n_test"] = s.n_test ? json(*s.n_test) : json(nullptr);
    sj["fixed_test_positive_count"] =
        s.fixed_test_positive_count ? json(*s.fixed_test_positive_count) : json(nullptr);
    sj["ratio_target"] = s.ratio_target ? json(*s.ratio_target) : json(nullptr);
    splits_json.push_back(std::move(sj));
  }
  j["splits"] = std::move(splits_json);
  json learners_json = json::array();
  for (const auto& l : learners) {
    json lj;
    lj["name"] = l.name;
    lj["kind"] = std::string(learner_kind_name(l.spec.kind));
    switch (l.spec.kind) {
      case LearnerKind::elastic_net:
        lj["l1_weight"] = l.spec.elastic_net.l1_weight;
        lj["l2_weight"] = l.spec.elastic_net.l2_weight;
        lj["max_iters"] = l.spec.elastic_net.max_iters;
        lj["tol"] = l.spec.elastic_net.tol;
        break;
      case LearnerKind::naive_bayes:
        lj["variance_floor"] = l.spec.naive_bayes.variance_floor;
        break;
      case LearnerKind::gbdt:
        lj["n_trees"] = l.spec.gbdt.n_trees;
        lj["max_depth"] = l.spec.gbdt.max_depth;
        lj["learning_rate"] = l.spec.gbdt.learning_rate;
        lj["min_leaf"] = l.spec.gbdt.min_leaf;
        break;
    }
    learners_json.push_back(std::move(lj));
  }
  j["learners"] = std::move(learners_json);
  j["targets"] = targets;
  j["repetitions"] = repetitions;
  j["k_folds"] = k_folds;
  j["concat_datasets"] = concat_datasets;
  j["ensemble_datasets"] = ensemble_datasets;
  j["protein_datasets"] = protein_datasets;
  j["comparison"] = {{"time_label", time_label}, {"random_label", random_label}};
  j["importance"] = {{"dataset", importance.dataset},     {"learner", importance.learner_name},
                     {"target", importance.target},       {"split", importance.split_label},
                     {"n_folds", importance.n_folds},     {"n_shuffles", importance.n_shuffles},
                     {"top_n", importance.top_n}};
  j["leakage"] = {{"k", leakage.k}, {"n_permutations", leakage.n_permutations}};
  j["chemspace"] = {{"split", chemspace.split_label},
                    {"fingerprint_radius", chemspace.fingerprint_radius},
                    {"fingerprint_bits", chemspace.fingerprint_bits},
                    {"pca_components", chemspace.pca_components}};
  if (synthetic) {
    const SyntheticSpec& s = *synthetic;
    json sj;
    sj["n_compounds"] = s.n_compounds;
    sj["timeline_start"] = s.timeline_start.to_string();
    sj["timeline_end"] = s.timeline_end.to_string();
    sj["drift_point"] = s.drift_point.to_string();
    sj["n_pre_drift"] = s.n_pre_drift ? json(*s.n_pre_drift) : json(nullptr);
    sj["stable_strength"] = s.stable_strength;
    sj["drift_strength"] = s.drift_strength;
    sj["noise_level"] = s.noise_level;
    sj["leak_rate"] = s.leak_rate;
    sj["background_rate"] = s.background_rate;
    sj["leak_lag_mean_months"] = s.leak_lag_mean_months;
    sj["background_lag_min_months"] = s.background_lag_min_months;
    sj["background_lag_max_months"] = s.background_lag_max_months;
    sj["n_knowledge_features"] = s.n_knowledge_features;
    sj["n_leaky_features"] = s.n_leaky_features;
    sj["n_noise_features"] = s.n_noise_features;
    sj["shuffle_publication_dates"] = s.shuffle_publication_dates;
    sj["seed"] = s.seed;
    j["synthetic"] = std::move(sj);
  }
  return j.dump(2);
}

}  // namespace timesplit
