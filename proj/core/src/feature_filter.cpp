#include "timesplit/feature_filter.hpp"

#include <cmath>
#include <cstring>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"

namespace timesplit {

namespace {

FeatureTable keep_columns(const FeatureTable& table, const std::vector<std::size_t>& keep) {
  FeatureTable out;
  out.dataset_name = table.dataset_name;
  out.compound_ids = table.compound_ids;
  for (std::size_t c : keep) out.feature_names.push_back(table.feature_names[c]);
  out.values = table.values.select_cols(keep);
  return out;
}

// Bit pattern with NaN and -0.0 canonicalized, so identical-by-value columns
// hash identically.
std::uint64_t canonical_bits(double v) {
  if (std::isnan(v)) return 0x7ff8000000000000ull;
  if (v == 0.0) return 0;
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

}  // namespace

FeatureTable drop_duplicate_features(const FeatureTable& table, FilterReport& report) {
  const std::size_t n_rows = table.n_compounds();
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets;
  std::vector<std::size_t> keep;
  std::vector<std::uint64_t> hashes(table.n_features());

  for (std::size_t c = 0; c < table.n_features(); ++c) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t r = 0; r < n_rows; ++r) {
      std::uint64_t bits = canonical_bits(table.values(r, c));
      for (int byte = 0; byte < 8; ++byte) {
        h ^= (bits >> (8 * byte)) & 0xff;
        h *= 0x100000001b3ull;
      }
    }
    hashes[c] = h;
  }

  auto columns_equal = [&](std::size_t a, std::size_t b) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      if (canonical_bits(table.values(r, a)) != canonical_bits(table.values(r, b))) return false;
    }
    return true;
  };

  for (std::size_t c = 0; c < table.n_features(); ++c) {
    auto& bucket = buckets[hashes[c]];
    bool duplicate = false;
    for (std::size_t earlier : bucket) {
      if (columns_equal(earlier, c)) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) {
      report.dropped_duplicates.push_back(table.feature_names[c]);
    } else {
      bucket.push_back(c);
      keep.push_back(c);
    }
  }
  return keep_columns(table, keep);
}

FeatureTable drop_low_cv_features(const FeatureTable& table, double threshold,
                                  FilterReport& report) {
  if (threshold < 0.0) throw Error("cv threshold must be >= 0");
  const std::size_t n_rows = table.n_compounds();
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < table.n_features(); ++c) {
    std::size_t defined = 0;
    double sum = pairwise_sum(n_rows, [&](std::size_t r) {
      double v = table.values(r, c);
      if (is_missing(v)) return 0.0;
      ++defined;
      return v;
    });
    bool drop;
    if (defined == 0) {
      drop = true;  // no information at all
    } else {
      const double mean = sum / static_cast<double>(defined);
      double ss = pairwise_sum(n_rows, [&](std::size_t r) {
        double v = table.values(r, c);
        if (is_missing(v)) return 0.0;
        double d = v - mean;
        return d * d;
      });
      const double sd = std::sqrt(ss / static_cast<double>(defined));  // population sd
      if (sd == 0.0) {
        drop = true;  // constant column
      } else if (mean == 0.0) {
        drop = false;  // spread around zero: CV treated as infinite
      } else {
        drop = sd / std::abs(mean) < threshold;
      }
    }
    if (drop) {
      report.dropped_low_cv.push_back(table.feature_names[c]);
    } else {
      keep.push_back(c);
    }
  }
  return keep_columns(table, keep);
}

namespace {

// Pearson r over jointly non-missing rows; nullopt when degenerate or when
// fewer than 3 shared rows exist.
std::optional<double> pairwise_pearson(const Matrix& m, std::size_t a, std::size_t b) {
  std::size_t n = 0;
  double sum_a = 0, sum_b = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double va = m(r, a), vb = m(r, b);
    if (is_missing(va) || is_missing(vb)) continue;
    ++n;
    sum_a += va;
    sum_b += vb;
  }
  if (n < 3) return std::nullopt;
  const double mean_a = sum_a / n, mean_b = sum_b / n;
  double saa = 0, sbb = 0, sab = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double va = m(r, a), vb = m(r, b);
    if (is_missing(va) || is_missing(vb)) continue;
    const double da = va - mean_a, db = vb - mean_b;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (saa == 0.0 || sbb == 0.0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

FeatureTable drop_correlated_features(const FeatureTable& table, double r2_threshold,
                                      FilterReport& report) {
  if (!(r2_threshold >= 0.0 && r2_threshold <= 1.0)) {
    throw Error("r^2 threshold must lie in [0, 1]");
  }
  const std::size_t n_cols = table.n_features();
  std::vector<bool> dropped(n_cols, false);
  for (std::size_t i = 0; i < n_cols; ++i) {
    for (std::size_t j = i + 1; j < n_cols; ++j) {
      if (dropped[j]) continue;
      auto r = pairwise_pearson(table.values, i, j);
      if (!r) continue;
      if (*r * *r > r2_threshold) {
        dropped[j] = true;
        report.dropped_correlated.emplace_back(table.feature_names[i], table.feature_names[j]);
      }
    }
  }
  std::vector<std::size_t> keep;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (!dropped[c]) keep.push_back(c);
  }
  return keep_columns(table, keep);
}

std::pair<FeatureTable, FilterReport> apply_filter_pipeline(const FeatureTable& table,
                                                            const FilterConfig& config) {
  FilterReport report;
  FeatureTable stage = drop_duplicate_features(table, report);
  stage = drop_low_cv_features(stage, config.cv_threshold, report);
  stage = drop_correlated_features(stage, config.r2_threshold, report);
  if (stage.n_features() == 0) {
    throw Error("all features filtered from dataset '" + table.dataset_name + "'");
  }
  report.kept = stage.feature_names;
  return {std::move(stage), std::move(report)};
}

std::string FilterReport::to_json_string() const {
  nlohmann::json j;
  j["dropped_duplicates"] = dropped_duplicates;
  j["dropped_low_cv"] = dropped_low_cv;
  auto pairs = nlohmann::json::array();
  for (const auto& [kept_name, dropped_name] : dropped_correlated) {
    pairs.push_back({{"kept", kept_name}, {"dropped", dropped_name}});
  }
  j["dropped_correlated"] = std::move(pairs);
  j["kept"] = kept;
  return j.dump();
}

}  // namespace timesplit
