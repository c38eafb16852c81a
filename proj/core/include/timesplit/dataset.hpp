#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "timesplit/matrix.hpp"
#include "timesplit/month_date.hpp"

namespace timesplit {

// A compound's identity; the unit every split assigns to train or test.
struct CompoundRecord {
  std::string id;
  std::string canonical_name;
  std::optional<std::string> smiles;
  std::optional<MonthDate> market_date;
};

// One named dataset's numeric feature matrix keyed by compound id.
struct FeatureTable {
  std::string dataset_name;
  std::vector<std::string> compound_ids;
  std::vector<std::string> feature_names;
  Matrix values;  // rows = compounds, cols = features, NaN = missing

  std::size_t n_compounds() const { return compound_ids.size(); }
  std::size_t n_features() const { return feature_names.size(); }
};

inline constexpr std::int8_t kMissingLabel = -1;

// Binary targets per compound; cells are 0, 1, or missing.
struct LabelTable {
  std::vector<std::string> compound_ids;
  std::vector<std::string> target_names;
  std::vector<std::int8_t> values;  // row-major, kMissingLabel = missing

  std::int8_t at(std::size_t row, std::size_t col) const {
    return values[row * target_names.size() + col];
  }
  std::int8_t& at(std::size_t row, std::size_t col) {
    return values[row * target_names.size() + col];
  }
  std::optional<std::size_t> target_index(std::string_view name) const;
  // Column of labels for one target, aligned with compound_ids.
  std::vector<std::int8_t> target_column(std::size_t col) const;
  bool empty() const { return compound_ids.empty() && target_names.empty(); }
};

// Alias -> canonical name, case-insensitive on the alias side.
class SynonymMap {
 public:
  // Duplicate alias with a conflicting canonical name is an error.
  void insert(std::string_view alias, std::string_view canonical);
  std::optional<std::string> lookup(std::string_view raw) const;
  std::size_t size() const { return map_.size(); }

 private:
  std::map<std::string, std::string> map_;  // key lower-cased
};

struct NameNormalization {
  std::vector<std::string> canonical;  // mapped names, input order, excluded omitted
  std::vector<std::string> excluded;   // raw names with no mapping
};

// Case-insensitive lookup of every raw name; unmapped names are excluded,
// not errors.
NameNormalization normalize_names(std::span<const std::string> raw, const SynonymMap& synonyms);

// Feature tables, labels, and registry restricted to the compounds present
// in every input, all row-aligned to one id ordering.
struct DatasetBundle {
  std::vector<std::string> compound_ids;  // sorted lexicographically
  std::vector<FeatureTable> tables;
  LabelTable labels;                      // empty if no labels supplied
  std::vector<CompoundRecord> registry;   // empty if no registry supplied

  std::optional<std::size_t> table_index(std::string_view dataset_name) const;
};

// labels/registry may be null/empty, in which case they do not constrain the
// intersection. Throws on an empty intersection.
DatasetBundle intersect_compounds(std::span<const FeatureTable> tables, const LabelTable* labels,
                                  std::span<const CompoundRecord> registry);

// Keeps targets whose positive ratio over non-missing labels lies in
// [low, high], endpoints included.
LabelTable filter_targets_by_positive_ratio(const LabelTable& labels, double low, double high);

// Positive fraction over non-missing entries; nullopt when all missing.
std::optional<double> positive_ratio(const LabelTable& labels, std::size_t target);

// --- file I/O -------------------------------------------------------------
// Schemas: features_<name>.csv (compound_id, f1, ...); labels.csv
// (compound_id, target1, ..., cells 0/1/empty); dates.csv (compound_id,
// market_date YYYY-MM); smiles.csv (compound_id, smiles); synonyms.csv
// (alias, canonical).

FeatureTable load_feature_table(const std::filesystem::path& path, std::string dataset_name);
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);

LabelTable load_label_table(const std::filesystem::path& path);
void write_label_table(const std::filesystem::path& path, const LabelTable& labels);

// dates.csv plus an optional smiles.csv merged into one registry. Compounds
// present only in the smiles file get no market date; ones missing from the
// smiles file get no structure.
std::vector<CompoundRecord> load_registry(const std::filesystem::path& dates_path,
                                          const std::optional<std::filesystem::path>& smiles_path);

SynonymMap load_synonym_map(const std::filesystem::path& path);

// Maps compound ids through the synonym table, dropping unmapped rows.
// Returns the excluded raw ids. Mapping two rows onto one canonical id is a
// hard error (duplicate compound id).
std::vector<std::string> apply_synonyms(FeatureTable& table, const SynonymMap& synonyms);
std::vector<std::string> apply_synonyms(LabelTable& labels, const SynonymMap& synonyms);
std::vector<std::string> apply_synonyms(std::vector<CompoundRecord>& registry,
                                        const SynonymMap& synonyms);

}  // namespace timesplit
