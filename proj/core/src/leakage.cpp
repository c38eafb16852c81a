#include "timesplit/leakage.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include <nlohmann/json.hpp>

#include "timesplit/csv.hpp"
#include "timesplit/error.hpp"
#include "timesplit/math_util.hpp"
#include "timesplit/parallel.hpp"
#include "timesplit/rng.hpp"

namespace timesplit {

LagTable compute_time_lags(const std::map<std::string, MonthDate>& approvals,
                           std::span<const PublicationRecord> publications,
                           const std::set<std::string>& restrict_to) {
  LagTable out;
  for (const auto& pub : publications) {
    if (!restrict_to.empty() && !restrict_to.count(pub.compound_id)) continue;
    auto it = approvals.find(pub.compound_id);
    if (it == approvals.end()) {
      ++out.skipped_pairs;
      continue;
    }
    out.by_feature[pub.feature_id][pub.compound_id] =
        months_between(pub.first_publication, it->second);
  }
  return out;
}

std::optional<double> feature_mean_lag(const LagTable& lags, const std::string& feature) {
  auto it = lags.by_feature.find(feature);
  if (it == lags.by_feature.end() || it->second.empty()) return std::nullopt;
  const auto& per_compound = it->second;
  std::vector<double> values;
  values.reserve(per_compound.size());
  for (const auto& [compound, lag] : per_compound) values.push_back(static_cast<double>(lag));
  return pairwise_sum(values) / static_cast<double>(values.size());
}

LeakageResult top_feature_lag_test(const LagTable& lags,
                                   std::span<const std::string> ranked_features, int k,
                                   std::int64_t n_permutations, std::uint64_t seed, unsigned jobs) {
  if (k <= 0) throw Error("top_feature_lag_test: k must be > 0");
  if (n_permutations <= 0) throw Error("top_feature_lag_test: n_permutations must be > 0");

  // Eligible pool: every feature with at least one defined lag. The observed
  // statistic takes the k best-ranked features among them.
  std::vector<std::string> pool_names;
  std::vector<double> pool_lags;
  for (const auto& [feature, per_compound] : lags.by_feature) {
    (void)per_compound;
    if (auto mean = feature_mean_lag(lags, feature)) {
      pool_names.push_back(feature);
      pool_lags.push_back(*mean);
    }
  }
  if (pool_names.size() < static_cast<std::size_t>(k)) {
    throw Error("top_feature_lag_test: only " + std::to_string(pool_names.size()) +
                " features have lags; k = " + std::to_string(k));
  }

  std::map<std::string, double> lag_of;
  for (std::size_t i = 0; i < pool_names.size(); ++i) lag_of[pool_names[i]] = pool_lags[i];

  LeakageResult result;
  result.k = k;
  result.n_permutations = n_permutations;
  result.pool_size = pool_names.size();
  for (const auto& feature : ranked_features) {
    if (static_cast<int>(result.top_features.size()) == k) break;
    auto it = lag_of.find(feature);
    if (it != lag_of.end()) result.top_features.emplace_back(feature, it->second);
  }
  if (static_cast<int>(result.top_features.size()) < k) {
    throw Error("top_feature_lag_test: ranking covers fewer than k eligible features");
  }
  result.observed_mean_lag =
      pairwise_sum(result.top_features.size(), [&](std::size_t i) {
        return result.top_features[i].second;
      }) / static_cast<double>(k);

  // Null draws partition into fixed-size chunks with chunk-derived seeds, so
  // the counts are identical for any worker count.
  constexpr std::int64_t kChunk = 4096;
  const std::int64_t n_chunks = (n_permutations + kChunk - 1) / kChunk;
  std::vector<std::int64_t> below(static_cast<std::size_t>(n_chunks), 0);
  std::vector<double> chunk_sum(static_cast<std::size_t>(n_chunks), 0.0);
  std::vector<double> chunk_sum_sq(static_cast<std::size_t>(n_chunks), 0.0);

  parallel_for(static_cast<std::size_t>(n_chunks), jobs, [&](std::size_t chunk) {
    const std::int64_t begin = static_cast<std::int64_t>(chunk) * kChunk;
    const std::int64_t end = std::min(begin + kChunk, n_permutations);
    Xoshiro256StarStar rng(derive_seed(seed, static_cast<std::uint64_t>(chunk), 0x6c6167));
    std::vector<std::size_t> index(pool_lags.size());
    std::int64_t count = 0;
    double sum = 0.0, sum_sq = 0.0;
    for (std::int64_t draw = begin; draw < end; ++draw) {
      for (std::size_t i = 0; i < index.size(); ++i) index[i] = i;
      double stat = 0.0;
      for (int i = 0; i < k; ++i) {
        const std::size_t j =
            static_cast<std::size_t>(i) +
            static_cast<std::size_t>(rng.bounded(index.size() - static_cast<std::size_t>(i)));
        std::swap(index[i], index[j]);
        stat += pool_lags[index[static_cast<std::size_t>(i)]];
      }
      stat /= static_cast<double>(k);
      if (stat <= result.observed_mean_lag) ++count;
      sum += stat;
      sum_sq += stat * stat;
    }
    below[chunk] = count;
    chunk_sum[chunk] = sum;
    chunk_sum_sq[chunk] = sum_sq;
  });

  std::int64_t total_below = 0;
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t c = 0; c < below.size(); ++c) {
    total_below += below[c];
    sum += chunk_sum[c];
    sum_sq += chunk_sum_sq[c];
  }
  result.p_value = static_cast<double>(1 + total_below) / static_cast<double>(1 + n_permutations);
  result.null_mean = sum / static_cast<double>(n_permutations);
  const double var =
      std::max(0.0, sum_sq / static_cast<double>(n_permutations) - result.null_mean * result.null_mean);
  result.null_sd = std::sqrt(var);
  return result;
}

std::string LeakageResult::to_json_string() const {
  nlohmann::json j;
  j["observed_mean_lag"] = observed_mean_lag;
  j["p_value"] = p_value;
  j["k"] = k;
  j["n_permutations"] = n_permutations;
  j["pool_size"] = pool_size;
  j["null_mean"] = null_mean;
  j["null_sd"] = null_sd;
  auto top = nlohmann::json::array();
  for (const auto& [feature, lag] : top_features) {
    top.push_back({{"feature", feature}, {"mean_lag_months", lag}});
  }
  j["top_features"] = std::move(top);
  return j.dump(2);
}

std::map<std::string, MonthDate> load_approvals(const std::filesystem::path& path) {
  csv::Table raw = csv::read_file(path);
  if (raw.header.size() != 2 || raw.header[0] != "compound_id" ||
      raw.header[1] != "approval_date") {
    throw ValidationError(path.string() + ": expected header compound_id,approval_date");
  }
  std::map<std::string, MonthDate> out;
  for (const auto& row : raw.rows) {
    if (row[1].empty()) continue;
    if (!out.emplace(row[0], MonthDate::parse(row[1])).second) {
      throw ValidationError(path.string() + ": duplicate compound id '" + row[0] + "'");
    }
  }
  return out;
}

std::vector<PublicationRecord> load_publications(const std::filesystem::path& path) {
  csv::Table raw = csv::read_file(path);
  if (raw.header.size() != 3 || raw.header[0] != "compound_id" || raw.header[1] != "feature_id" ||
      raw.header[2] != "first_pub_date") {
    throw ValidationError(path.string() + ": expected header compound_id,feature_id,first_pub_date");
  }
  std::vector<PublicationRecord> out;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& row : raw.rows) {
    if (row[2].empty()) continue;
    if (!seen.insert({row[0], row[1]}).second) {
      throw ValidationError(path.string() + ": duplicate (compound, feature) pair (" + row[0] +
                            ", " + row[1] + ")");
    }
    out.push_back({row[0], row[1], MonthDate::parse(row[2])});
  }
  return out;
}

}  // namespace timesplit
