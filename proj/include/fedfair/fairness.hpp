#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fedfair/data.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

enum class MetricKind { StatisticalParity, EqualOpportunity, WellCalibration };

// Proper metrics have model-independent denominators; only they can be
// decomposed across clients and used as a training target.
inline bool is_proper(MetricKind metric) {
  return metric != MetricKind::WellCalibration;
}

std::string metric_name(MetricKind metric);

enum class StatsMode { Hard, Surrogate };

// The quadruple behind a group-based metric value |a/b - c/d|; a, b condition
// on group A=0 and c, d on A=1.
struct FairnessStats {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  MetricKind metric = MetricKind::StatisticalParity;
  StatsMode mode = StatsMode::Hard;
};

struct FairnessReport {
  std::vector<std::optional<double>> local_values;  // nullopt where undefined
  std::vector<double> components;                   // F_k = a_k/b - c_k/d
  double pooled_value = 0.0;                        // |a/b - c/d| of pooled stats
  double signed_value = 0.0;                        // sum_k w_k F_k
  std::string to_json() const;
};

struct HeterogeneityReport {
  double coefficient = 0.0;  // max_k |ratio_k - 1|
  std::vector<std::optional<double>> ratios;  // (d/b)*(b_k/d_k) per client
  std::string to_json() const;
};

enum class Regularizer { L1, L2 };  // J(x)=x and J(x)=x^2

struct PenaltyConfig {
  double lambda = 0.0;
  Regularizer regularizer = Regularizer::L2;
  MetricKind metric = MetricKind::StatisticalParity;
};

// Empirical (a, b, c, d) of a shard under the given metric. Surrogate mode
// replaces each prediction indicator 1{Yhat=1} with the soft score f(X);
// true-label indicators stay hard. WellCalibration's denominators depend on
// the model, so they follow the mode as well.
FairnessStats fairness_stats(const ModelParams& params, const Dataset& data,
                             const ClientShard& shard, MetricKind metric,
                             StatsMode mode);

// |a/b - c/d|; empty when a denominator is zero (pure-group shard).
std::optional<double> local_fairness(const FairnessStats& stats);

FairnessStats pooled_stats(const std::vector<FairnessStats>& stats_list,
                           const std::vector<double>& weights);

// Pooled metric value computed directly and, for proper metrics, through the
// per-client decomposition F_k = a_k/b - c_k/d; the two paths agree to 1e-12.
FairnessReport global_fairness(const std::vector<FairnessStats>& stats_list,
                               const std::vector<double>& weights);

HeterogeneityReport dh_coefficient(const std::vector<FairnessStats>& stats_list,
                                   const std::vector<double>& weights);

struct Theorem3Check {
  double alpha = 0.0;  // max local value
  double beta = 0.0;   // heterogeneity coefficient
  double global = 0.0;
  bool holds = false;
};
Theorem3Check check_theorem3_bound(const std::vector<FairnessStats>& stats_list,
                                   const std::vector<double>& weights);

struct StatsInstance {
  std::vector<FairnessStats> stats;
  std::vector<double> weights;
};

// Witness families for the locality gap: the forward construction has every
// local value 0 with global approaching 1 > C; the converse has every local
// value C with global 0.
StatsInstance theorem1_forward_construction(double C, std::size_t K, double eps);
StatsInstance theorem1_converse_construction(double C, std::size_t K);

// True iff all clients share one common ratio a_k/b_k = c_k/d_k, the exact
// condition under which the global value vanishes for every weighting.
bool check_theorem2_condition(const std::vector<FairnessStats>& stats_list,
                              double tol = 1e-10);

// C_theta = sign(F_tilde) * J'(|F_tilde|): the per-round constant that scales
// every client's fairness gradient. L1 gives sign(F_tilde), L2 gives
// 2 * F_tilde; both are 0 at F_tilde = 0.
double sign_update(double signed_value, const PenaltyConfig& penalty);

// Gradient of F_k(theta) = a_k(theta)/b - c_k(theta)/d in surrogate mode,
// flat as weights then bias.
std::vector<double> fairness_component_gradient(const ModelParams& params,
                                                const Dataset& data,
                                                const ClientShard& shard,
                                                MetricKind metric,
                                                double pooled_b, double pooled_d);

// Uniformly random valid stats instance with denominators bounded away from
// zero; the workhorse of the property suites.
StatsInstance random_instance(std::mt19937_64& rng, std::size_t max_clients,
                              MetricKind metric = MetricKind::StatisticalParity);

}  // namespace fedfair
