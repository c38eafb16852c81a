#include "timesplit/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"

namespace timesplit {

namespace {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void check_unique(const std::vector<std::string>& names, const std::string& what,
                  const std::string& source) {
  std::unordered_set<std::string_view> seen;
  for (const auto& n : names) {
    if (!seen.insert(n).second) {
      throw ValidationError(source + ": duplicate " + what + " '" + n + "'");
    }
  }
}

}  // namespace

std::optional<std::size_t> LabelTable::target_index(std::string_view name) const {
  for (std::size_t i = 0; i < target_names.size(); ++i) {
    if (target_names[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::int8_t> LabelTable::target_column(std::size_t col) const {
  std::vector<std::int8_t> out(compound_ids.size());
  for (std::size_t r = 0; r < compound_ids.size(); ++r) out[r] = at(r, col);
  return out;
}

void SynonymMap::insert(std::string_view alias, std::string_view canonical) {
  std::string key = to_lower(alias);
  auto [it, inserted] = map_.emplace(std::move(key), std::string(canonical));
  if (!inserted && it->second != canonical) {
    throw ValidationError("synonym alias '" + std::string(alias) + "' maps to both '" +
                          it->second + "' and '" + std::string(canonical) + "'");
  }
}

std::optional<std::string> SynonymMap::lookup(std::string_view raw) const {
  auto it = map_.find(to_lower(raw));
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

NameNormalization normalize_names(std::span<const std::string> raw, const SynonymMap& synonyms) {
  NameNormalization out;
  for (const auto& name : raw) {
    if (auto canonical = synonyms.lookup(name)) {
      out.canonical.push_back(std::move(*canonical));
    } else {
      out.excluded.push_back(name);
    }
  }
  return out;
}

std::optional<std::size_t> DatasetBundle::table_index(std::string_view dataset_name) const {
  for (std::size_t i = 0; i < tables.size(); ++i) {
    if (tables[i].dataset_name == dataset_name) return i;
  }
  return std::nullopt;
}

DatasetBundle intersect_compounds(std::span<const FeatureTable> tables, const LabelTable* labels,
                                  std::span<const CompoundRecord> registry) {
  if (tables.empty()) throw Error("intersect_compounds: no feature tables");

  std::set<std::string> shared(tables[0].compound_ids.begin(), tables[0].compound_ids.end());
  auto restrict_to = [&shared](const std::vector<std::string>& ids) {
    std::set<std::string> keep;
    for (const auto& id : ids) {
      if (shared.count(id)) keep.insert(id);
    }
    shared = std::move(keep);
  };
  for (std::size_t t = 1; t < tables.size(); ++t) restrict_to(tables[t].compound_ids);
  if (labels && !labels->empty()) restrict_to(labels->compound_ids);
  if (!registry.empty()) {
    std::vector<std::string> ids;
    ids.reserve(registry.size());
    for (const auto& r : registry) ids.push_back(r.id);
    restrict_to(ids);
  }
  if (shared.empty()) throw Error("intersect_compounds: no compound is present in every input");

  DatasetBundle bundle;
  bundle.compound_ids.assign(shared.begin(), shared.end());  // std::set is already sorted

  std::unordered_map<std::string_view, std::size_t> pos;
  pos.reserve(bundle.compound_ids.size());
  for (std::size_t i = 0; i < bundle.compound_ids.size(); ++i) pos.emplace(bundle.compound_ids[i], i);

  const std::size_t n = bundle.compound_ids.size();
  for (const auto& table : tables) {
    FeatureTable aligned;
    aligned.dataset_name = table.dataset_name;
    aligned.compound_ids = bundle.compound_ids;
    aligned.feature_names = table.feature_names;
    aligned.values = Matrix(n, table.n_features());
    for (std::size_t r = 0; r < table.compound_ids.size(); ++r) {
      auto it = pos.find(table.compound_ids[r]);
      if (it == pos.end()) continue;
      for (std::size_t c = 0; c < table.n_features(); ++c) {
        aligned.values(it->second, c) = table.values(r, c);
      }
    }
    bundle.tables.push_back(std::move(aligned));
  }

  if (labels && !labels->empty()) {
    LabelTable aligned;
    aligned.compound_ids = bundle.compound_ids;
    aligned.target_names = labels->target_names;
    aligned.values.assign(n * labels->target_names.size(), kMissingLabel);
    for (std::size_t r = 0; r < labels->compound_ids.size(); ++r) {
      auto it = pos.find(labels->compound_ids[r]);
      if (it == pos.end()) continue;
      for (std::size_t c = 0; c < labels->target_names.size(); ++c) {
        aligned.at(it->second, c) = labels->at(r, c);
      }
    }
    bundle.labels = std::move(aligned);
  }

  if (!registry.empty()) {
    bundle.registry.resize(n);
    for (const auto& rec : registry) {
      auto it = pos.find(rec.id);
      if (it != pos.end()) bundle.registry[it->second] = rec;
    }
  }
  return bundle;
}

std::optional<double> positive_ratio(const LabelTable& labels, std::size_t target) {
  std::size_t positives = 0;
  std::size_t defined = 0;
  for (std::size_t r = 0; r < labels.compound_ids.size(); ++r) {
    std::int8_t v = labels.at(r, target);
    if (v == kMissingLabel) continue;
    ++defined;
    positives += (v == 1);
  }
  if (defined == 0) return std::nullopt;
  return static_cast<double>(positives) / static_cast<double>(defined);
}

LabelTable filter_targets_by_positive_ratio(const LabelTable& labels, double low, double high) {
  if (!(low >= 0.0 && low < high && high <= 1.0)) {
    throw Error("positive-ratio bounds must satisfy 0 <= low < high <= 1");
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < labels.target_names.size(); ++c) {
    auto r = positive_ratio(labels, c);
    if (r && *r >= low && *r <= high) keep.push_back(c);
  }
  LabelTable out;
  out.compound_ids = labels.compound_ids;
  for (std::size_t c : keep) out.target_names.push_back(labels.target_names[c]);
  out.values.resize(labels.compound_ids.size() * keep.size());
  for (std::size_t r = 0; r < labels.compound_ids.size(); ++r) {
    for (std::size_t j = 0; j < keep.size(); ++j) out.at(r, j) = labels.at(r, keep[j]);
  }
  return out;
}

FeatureTable load_feature_table(const std::filesystem::path& path, std::string dataset_name) {
  csv::Table raw = csv::read_file(path);
  const std::string source = path.string();
  if (raw.header.empty() || raw.header[0] != "compound_id") {
    throw ValidationError(source + ": first column must be 'compound_id'");
  }
  FeatureTable table;
  table.dataset_name = std::move(dataset_name);
  table.feature_names.assign(raw.header.begin() + 1, raw.header.end());
  check_unique(table.feature_names, "feature name", source);

  const std::size_t n_features = table.feature_names.size();
  table.values = Matrix(raw.rows.size(), n_features);
  table.compound_ids.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    table.compound_ids.push_back(raw.rows[r][0]);
    for (std::size_t c = 0; c < n_features; ++c) {
      auto v = csv::parse_cell(raw.rows[r][c + 1], source, r, c + 1);
      table.values(r, c) = v ? *v : std::numeric_limits<double>::quiet_NaN();
    }
  }
  check_unique(table.compound_ids, "compound id", source);
  return table;
}

void write_feature_table(const std::filesystem::path& path, const FeatureTable& table) {
  csv::Table raw;
  raw.header.push_back("compound_id");
  for (const auto& f : table.feature_names) raw.header.push_back(f);
  raw.rows.reserve(table.n_compounds());
  for (std::size_t r = 0; r < table.n_compounds(); ++r) {
    std::vector<std::string> row;
    row.reserve(table.n_features() + 1);
    row.push_back(table.compound_ids[r]);
    for (std::size_t c = 0; c < table.n_features(); ++c) {
      double v = table.values(r, c);
      row.push_back(is_missing(v) ? std::string() : csv::format_double(v));
    }
    raw.rows.push_back(std::move(row));
  }
  csv::write_file(path, raw);
}

LabelTable load_label_table(const std::filesystem::path& path) {
  csv::Table raw = csv::read_file(path);
  const std::string source = path.string();
  if (raw.header.empty() || raw.header[0] != "compound_id") {
    throw ValidationError(source + ": first column must be 'compound_id'");
  }
  LabelTable labels;
  labels.target_names.assign(raw.header.begin() + 1, raw.header.end());
  check_unique(labels.target_names, "target name", source);
  labels.values.resize(raw.rows.size() * labels.target_names.size());
  labels.compound_ids.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    labels.compound_ids.push_back(raw.rows[r][0]);
    for (std::size_t c = 0; c < labels.target_names.size(); ++c) {
      const std::string& cell = raw.rows[r][c + 1];
      std::int8_t v = kMissingLabel;
      if (cell == "0") {
        v = 0;
      } else if (cell == "1") {
        v = 1;
      } else if (!cell.empty() && to_lower(cell) != "nan") {
        throw ValidationError(source + ": label cell must be 0, 1, or empty; got '" + cell +
                              "' at row " + std::to_string(r + 1));
      }
      labels.at(r, c) = v;
    }
  }
  check_unique(labels.compound_ids, "compound id", source);
  return labels;
}

void write_label_table(const std::filesystem::path& path, const LabelTable& labels) {
  csv::Table raw;
  raw.header.push_back("compound_id");
  for (const auto& t : labels.target_names) raw.header.push_back(t);
  for (std::size_t r = 0; r < labels.compound_ids.size(); ++r) {
    std::vector<std::string> row{labels.compound_ids[r]};
    for (std::size_t c = 0; c < labels.target_names.size(); ++c) {
      std::int8_t v = labels.at(r, c);
      row.push_back(v == kMissingLabel ? std::string() : std::to_string(int(v)));
    }
    raw.rows.push_back(std::move(row));
  }
  csv::write_file(path, raw);
}

std::vector<CompoundRecord> load_registry(const std::filesystem::path& dates_path,
                                          const std::optional<std::filesystem::path>& smiles_path) {
  csv::Table dates = csv::read_file(dates_path);
  if (dates.header.size() != 2 || dates.header[0] != "compound_id" ||
      dates.header[1] != "market_date") {
    throw ValidationError(dates_path.string() + ": expected header compound_id,market_date");
  }
  std::vector<CompoundRecord> registry;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t r = 0; r < dates.rows.size(); ++r) {
    CompoundRecord rec;
    rec.id = dates.rows[r][0];
    rec.canonical_name = rec.id;
    if (rec.canonical_name.empty()) {
      throw ValidationError(dates_path.string() + ": empty compound id at row " +
                            std::to_string(r + 1));
    }
    const std::string& cell = dates.rows[r][1];
    if (!cell.empty()) rec.market_date = MonthDate::parse(cell);
    if (!index.emplace(rec.id, registry.size()).second) {
      throw ValidationError(dates_path.string() + ": duplicate compound id '" + rec.id + "'");
    }
    registry.push_back(std::move(rec));
  }

  if (smiles_path) {
    csv::Table smiles = csv::read_file(*smiles_path);
    if (smiles.header.size() != 2 || smiles.header[0] != "compound_id" ||
        smiles.header[1] != "smiles") {
      throw ValidationError(smiles_path->string() + ": expected header compound_id,smiles");
    }
    std::unordered_set<std::string> seen;
    for (const auto& row : smiles.rows) {
      if (!seen.insert(row[0]).second) {
        throw ValidationError(smiles_path->string() + ": duplicate compound id '" + row[0] + "'");
      }
      auto it = index.find(row[0]);
      if (it != index.end()) {
        if (!row[1].empty()) registry[it->second].smiles = row[1];
      } else {
        CompoundRecord rec;
        rec.id = row[0];
        rec.canonical_name = rec.id;
        if (!row[1].empty()) rec.smiles = row[1];
        index.emplace(rec.id, registry.size());
        registry.push_back(std::move(rec));
      }
    }
  }
  return registry;
}

SynonymMap load_synonym_map(const std::filesystem::path& path) {
  csv::Table raw = csv::read_file(path);
  if (raw.header.size() != 2 || raw.header[0] != "alias" || raw.header[1] != "canonical") {
    throw ValidationError(path.string() + ": expected header alias,canonical");
  }
  SynonymMap map;
  for (const auto& row : raw.rows) map.insert(row[0], row[1]);
  return map;
}

namespace {

// Shared id-remapping logic: returns kept row indices and excluded raw ids,
// rewriting `ids` in place.
std::vector<std::string> remap_ids(std::vector<std::string>& ids, const SynonymMap& synonyms,
                                   std::vector<std::size_t>& kept) {
  std::vector<std::string> excluded;
  std::vector<std::string> mapped;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 0; r < ids.size(); ++r) {
    auto canonical = synonyms.lookup(ids[r]);
    if (!canonical) {
      excluded.push_back(ids[r]);
      continue;
    }
    if (!seen.insert(*canonical).second) {
      throw ValidationError("synonym mapping collapses two rows onto compound id '" + *canonical +
                            "'");
    }
    kept.push_back(r);
    mapped.push_back(std::move(*canonical));
  }
  ids = std::move(mapped);
  return excluded;
}

}  // namespace

std::vector<std::string> apply_synonyms(FeatureTable& table, const SynonymMap& synonyms) {
  std::vector<std::size_t> kept;
  auto excluded = remap_ids(table.compound_ids, synonyms, kept);
  table.values = table.values.select_rows(kept);
  return excluded;
}

std::vector<std::string> apply_synonyms(LabelTable& labels, const SynonymMap& synonyms) {
  std::vector<std::size_t> kept;
  auto excluded = remap_ids(labels.compound_ids, synonyms, kept);
  std::vector<std::int8_t> values(kept.size() * labels.target_names.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    for (std::size_t c = 0; c < labels.target_names.size(); ++c) {
      values[i * labels.target_names.size() + c] = labels.values[kept[i] * labels.target_names.size() + c];
    }
  }
  labels.values = std::move(values);
  return excluded;
}

std::vector<std::string> apply_synonyms(std::vector<CompoundRecord>& registry,
                                        const SynonymMap& synonyms) {
  std::vector<std::string> excluded;
  std::vector<CompoundRecord> kept;
  std::unordered_set<std::string> seen;
  for (auto& rec : registry) {
    auto canonical = synonyms.lookup(rec.id);
    if (!canonical) {
      excluded.push_back(rec.id);
      continue;
    }
    if (!seen.insert(*canonical).second) {
      throw ValidationError("synonym mapping collapses two rows onto compound id '" + *canonical +
                            "'");
    }
    rec.id = *canonical;
    rec.canonical_name = *canonical;
    kept.push_back(std::move(rec));
  }
  registry = std::move(kept);
  return excluded;
}

}  // namespace timesplit
