#include "fedfair/fairness.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace fedfair {

namespace {

void check_same_length(std::size_t stats, std::size_t weights) {
  if (stats != weights) {
    throw LengthMismatch("stats count " + std::to_string(stats) +
                         " vs weight count " + std::to_string(weights));
  }
}

nlohmann::json optional_list(const std::vector<std::optional<double>>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& v : values) {
    if (v) {
      arr.push_back(*v);
    } else {
      arr.push_back(nullptr);
    }
  }
  return arr;
}

}  // namespace

std::string metric_name(MetricKind metric) {
  switch (metric) {
    case MetricKind::StatisticalParity: return "statistical_parity";
    case MetricKind::EqualOpportunity: return "equal_opportunity";
    case MetricKind::WellCalibration: return "well_calibration";
  }
  return "unknown";
}

FairnessStats fairness_stats(const ModelParams& params, const Dataset& data,
                             const ClientShard& shard, MetricKind metric,
                             StatsMode mode) {
  if (shard.rows.empty()) throw EmptyDataset("fairness_stats on empty shard");
  FairnessStats stats;
  stats.metric = metric;
  stats.mode = mode;
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  for (std::size_t row : shard.rows) {
    const bool group1 = data.sensitive[row] != 0;
    const bool label1 = data.labels[row] != 0;
    // prediction indicator, softened in surrogate mode
    const double pred = mode == StatsMode::Hard
                            ? (predict_hard(params, data, row) ? 1.0 : 0.0)
                            : predict_proba(params, data, row);
    switch (metric) {
      case MetricKind::StatisticalParity:
        if (!group1) { a += pred; b += 1.0; } else { c += pred; d += 1.0; }
        break;
      case MetricKind::EqualOpportunity:
        if (label1) {
          if (!group1) { a += pred; b += 1.0; } else { c += pred; d += 1.0; }
        }
        break;
      case MetricKind::WellCalibration:
        // both numerator and denominator carry the prediction indicator
        if (!group1) {
          a += label1 ? pred : 0.0;
          b += pred;
        } else {
          c += label1 ? pred : 0.0;
          d += pred;
        }
        break;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(shard.rows.size());
  stats.a = a * inv_n;
  stats.b = b * inv_n;
  stats.c = c * inv_n;
  stats.d = d * inv_n;
  return stats;
}

std::optional<double> local_fairness(const FairnessStats& stats) {
  if (stats.b == 0.0 || stats.d == 0.0) return std::nullopt;
  return std::abs(stats.a / stats.b - stats.c / stats.d);
}

FairnessStats pooled_stats(const std::vector<FairnessStats>& stats_list,
                           const std::vector<double>& weights) {
  check_same_length(stats_list.size(), weights.size());
  if (stats_list.empty()) throw EmptyDataset("pooled_stats of nothing");
  FairnessStats pooled;
  pooled.metric = stats_list.front().metric;
  pooled.mode = stats_list.front().mode;
  for (std::size_t k = 0; k < stats_list.size(); ++k) {
    const auto& s = stats_list[k];
    if (s.metric != pooled.metric || s.mode != pooled.mode) {
      throw DimensionMismatch("pooled_stats inputs mix metrics or modes");
    }
    pooled.a += weights[k] * s.a;
    pooled.b += weights[k] * s.b;
    pooled.c += weights[k] * s.c;
    pooled.d += weights[k] * s.d;
  }
  return pooled;
}

FairnessReport global_fairness(const std::vector<FairnessStats>& stats_list,
                               const std::vector<double>& weights) {
  const FairnessStats pooled = pooled_stats(stats_list, weights);
  if (pooled.b == 0.0 || pooled.d == 0.0) {
    throw ZeroDenominator("no samples in one sensitive group overall");
  }
  FairnessReport report;
  report.pooled_value = std::abs(pooled.a / pooled.b - pooled.c / pooled.d);
  report.local_values.reserve(stats_list.size());
  report.components.reserve(stats_list.size());
  double signed_value = 0.0;
  for (std::size_t k = 0; k < stats_list.size(); ++k) {
    const auto& s = stats_list[k];
    report.local_values.push_back(local_fairness(s));
    const double component = s.a / pooled.b - s.c / pooled.d;
    report.components.push_back(component);
    signed_value += weights[k] * component;
  }
  report.signed_value = signed_value;
  return report;
}

std::string FairnessReport::to_json() const {
  nlohmann::json j;
  j["local"] = optional_list(local_values);
  j["components"] = components;
  j["pooled"] = pooled_value;
  j["signed"] = signed_value;
  return j.dump(2) + "\n";
}

HeterogeneityReport dh_coefficient(const std::vector<FairnessStats>& stats_list,
                                   const std::vector<double>& weights) {
  const FairnessStats pooled = pooled_stats(stats_list, weights);
  if (pooled.b == 0.0 || pooled.d == 0.0) {
    throw ZeroPooledDenominator("pooled b or d is zero");
  }
  HeterogeneityReport report;
  const double scale = pooled.d / pooled.b;
  bool any_defined = false;
  for (const auto& s : stats_list) {
    if (s.b > 0.0 && s.d > 0.0) {
      const double ratio = scale * (s.b / s.d);
      report.ratios.push_back(ratio);
      report.coefficient = std::max(report.coefficient, std::abs(ratio - 1.0));
      any_defined = true;
    } else {
      report.ratios.push_back(std::nullopt);  // pure-group client, excluded
    }
  }
  if (!any_defined) {
    throw AllRatiosUndefined("every client is missing one sensitive group");
  }
  return report;
}

std::string HeterogeneityReport::to_json() const {
  nlohmann::json j;
  j["beta"] = coefficient;
  j["ratios"] = optional_list(ratios);
  return j.dump(2) + "\n";
}

Theorem3Check check_theorem3_bound(const std::vector<FairnessStats>& stats_list,
                                   const std::vector<double>& weights) {
  Theorem3Check check;
  for (const auto& s : stats_list) {
    const auto local = local_fairness(s);
    if (!local) {
      throw ZeroDenominator("local value undefined; bound needs all locals");
    }
    check.alpha = std::max(check.alpha, *local);
  }
  check.beta = dh_coefficient(stats_list, weights).coefficient;
  check.global = global_fairness(stats_list, weights).pooled_value;
  check.holds = check.global <= check.alpha + check.beta + 1e-12;
  return check;
}

StatsInstance theorem1_forward_construction(double C, std::size_t K,
                                            double eps) {
  if (C < 0.0 || C > 1.0) throw InvalidC("C must lie in [0,1]");
  if (K < 2) throw InvalidC("construction needs at least 2 clients");
  if (eps <= 0.0 || eps >= 1.0) throw InvalidC("eps must lie in (0,1)");
  StatsInstance instance;
  instance.stats.resize(K);
  instance.weights.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    auto& s = instance.stats[k];
    // client 0 is nearly all group 0 with acceptance rate 1 in both groups;
    // the others are nearly all group 1 with rate 0, so every local value
    // vanishes while the pooled rates split apart
    const double rate = k == 0 ? 1.0 : 0.0;
    s.b = k == 0 ? 1.0 - eps : eps;
    s.d = 1.0 - s.b;
    s.a = s.b * rate;
    s.c = s.d * rate;
    instance.weights[k] =
        k == 0 ? (1.0 + C) / 2.0
               : (1.0 - (1.0 + C) / 2.0) / static_cast<double>(K - 1);
  }
  return instance;
}

StatsInstance theorem1_converse_construction(double C, std::size_t K) {
  if (C < 0.0 || C > 1.0) throw InvalidC("C must lie in [0,1]");
  if (K < 2) throw InvalidC("construction needs at least 2 clients");
  StatsInstance instance;
  instance.stats.resize(K);
  instance.weights.resize(K);
  // alternate which group carries rate C; give each parity class total
  // weight 1/2 so the pooled numerators cancel exactly
  const std::size_t evens = (K + 1) / 2;
  const std::size_t odds = K - evens;
  for (std::size_t k = 0; k < K; ++k) {
    auto& s = instance.stats[k];
    s.b = 0.5;
    s.d = 0.5;
    if (k % 2 == 0) {
      s.a = 0.5 * C;
      s.c = 0.0;
    } else {
      s.a = 0.0;
      s.c = 0.5 * C;
    }
    instance.weights[k] = k % 2 == 0 ? 0.5 / static_cast<double>(evens)
                                     : 0.5 / static_cast<double>(odds);
  }
  return instance;
}

bool check_theorem2_condition(const std::vector<FairnessStats>& stats_list,
                              double tol) {
  if (stats_list.empty()) return false;
  for (const auto& s : stats_list) {
    if (s.b <= 0.0 || s.d <= 0.0) return false;
  }
  const double common = stats_list.front().a / stats_list.front().b;
  for (const auto& s : stats_list) {
    if (std::abs(s.a / s.b - common) > tol) return false;
    if (std::abs(s.c / s.d - common) > tol) return false;
  }
  return true;
}

double sign_update(double signed_value, const PenaltyConfig& penalty) {
  if (!is_proper(penalty.metric)) {
    throw InvalidC("penalty target must be a proper metric");
  }
  if (penalty.regularizer == Regularizer::L2) return 2.0 * signed_value;
  if (signed_value > 0.0) return 1.0;
  if (signed_value < 0.0) return -1.0;
  return 0.0;  // subgradient choice at 0
}

std::vector<double> fairness_component_gradient(const ModelParams& params,
                                                const Dataset& data,
                                                const ClientShard& shard,
                                                MetricKind metric,
                                                double pooled_b,
                                                double pooled_d) {
  if (!is_proper(metric)) {
    throw InvalidC("component gradient needs a proper metric");
  }
  if (pooled_b <= 0.0 || pooled_d <= 0.0) {
    throw ZeroPooledDenominator("pooled denominators must be positive");
  }
  if (shard.rows.empty()) throw EmptyDataset("component gradient on empty shard");
  std::vector<double> grad(params.dim(), 0.0);
  for (std::size_t row : shard.rows) {
    if (metric == MetricKind::EqualOpportunity && data.labels[row] == 0) {
      continue;  // only the Y=1 slice enters either numerator
    }
    const double f = predict_proba(params, data, row);
    const double df = f * (1.0 - f);  // sigmoid derivative wrt the logit
    // group 0 rows feed grad a_k / b, group 1 rows -grad c_k / d
    const double scale = data.sensitive[row] == 0 ? df / pooled_b : -df / pooled_d;
    grad[0] += scale * data.sensitive[row];
    const double* x = &data.features[row * data.num_features];
    for (std::size_t j = 0; j < data.num_features; ++j) {
      grad[j + 1] += scale * x[j];
    }
    grad.back() += scale;
  }
  const double inv_n = 1.0 / static_cast<double>(shard.rows.size());
  for (auto& g : grad) g *= inv_n;
  return grad;
}

StatsInstance random_instance(std::mt19937_64& rng, std::size_t max_clients,
                              MetricKind metric) {
  std::uniform_int_distribution<std::size_t> pick_k(1, max_clients);
  // denominators bounded away from zero keep the identity checks meaningful
  // at 1e-12 in double precision
  std::uniform_real_distribution<double> denom(0.05, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t K = pick_k(rng);
  StatsInstance instance;
  instance.stats.resize(K);
  instance.weights.resize(K);
  double weight_total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    auto& s = instance.stats[k];
    s.metric = metric;
    s.b = denom(rng);
    s.d = denom(rng);
    s.a = s.b * unit(rng);
    s.c = s.d * unit(rng);
    instance.weights[k] = -std::log(std::max(unit(rng), 1e-300));
    weight_total += instance.weights[k];
  }
  for (auto& w : instance.weights) w /= weight_total;
  return instance;
}

}  // namespace fedfair
