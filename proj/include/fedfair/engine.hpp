#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/data.hpp"
#include "fedfair/fairness.hpp"
#include "fedfair/model.hpp"

namespace fedfair {

enum class Algorithm { FedAvg, LRW, FairFed, FedGFT };

std::string algorithm_name(Algorithm algorithm);

enum class Optimizer { Adam, GD };

struct TrainConfig {
  std::size_t rounds = 20;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 256;
  double learning_rate = 0.002;
  std::size_t num_clients = 10;
  double client_fraction = 1.0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::FedAvg;
  Optimizer optimizer = Optimizer::Adam;
  PenaltyConfig penalty;       // FedGFT only
  double fairfed_beta = 1.0;   // FairFed only

  void validate() const;  // throws InvalidC on bad fields
};

struct RoundRecord {
  std::size_t round = 0;
  double train_loss = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> sp;
  std::optional<double> eop;
  double gradient_norm = 0.0;
  double signed_fairness = 0.0;
};

struct TrainTrace {
  std::vector<RoundRecord> records;
  bool pure_shard_fallback_used = false;  // FairFed met an undefined local value
  std::string to_csv() const;
  std::string to_json() const;
};

struct ConstUpdate {
  double c_theta = 0.0;
  double pooled_b = 0.0;
  double pooled_d = 0.0;
  double signed_fairness = 0.0;
};

// Per-client inputs beyond the shared model: the FedGFT constant and pooled
// denominators, or LRW's per-sample weights. Exactly one of the two shapes is
// populated; FedAvg and FairFed clients get neither.
struct ClientExtras {
  std::optional<ConstUpdate> fairness;           // FedGFT
  const std::vector<double>* sample_weights = nullptr;  // LRW, parallel to shard rows
};

// E epochs of seeded mini-batch steps on L_k + lambda * C * F_k. The
// fairness term's gradient is computed over the whole shard each step; only
// the loss term is stochastic. Does not mutate the input params.
ModelParams client_update(const ModelParams& params, const Dataset& data,
                          const ClientShard& shard, const TrainConfig& config,
                          const ClientExtras& extras, std::mt19937_64& rng);

ModelParams aggregate(const std::vector<ModelParams>& params_list,
                      const std::vector<double>& weights);

// Server-side round preamble for FedGFT: collects per-client surrogate
// summary statistics (never raw samples), forms F_tilde and the penalty
// constant.
ConstUpdate const_update(const ModelParams& params, const Dataset& data,
                         const std::vector<ClientShard>& shards,
                         const std::vector<std::size_t>& selected,
                         const std::vector<double>& weights,
                         const PenaltyConfig& penalty);

// w_k^t = exp(-beta * |global_F - local_F_k|) * w_k, normalized. Clients with
// undefined local values keep their base weight (gap treated as 0).
std::vector<double> fairfed_weights(double global_f,
                                    const std::vector<std::optional<double>>& local_f,
                                    const std::vector<double>& base_weights,
                                    double fairfed_beta, bool* fallback_used = nullptr);

// Reweighing: weight(A=a, Y=y) = P(A=a) * P(Y=y) / P(A=a, Y=y) from shard
// cell frequencies, normalized to mean 1.
std::vector<double> lrw_weights(const Dataset& data, const ClientShard& shard);

struct TrainResult {
  ModelParams params;
  TrainTrace trace;
};

TrainResult run_training(const Dataset& train, const Dataset& test,
                         const std::vector<ClientShard>& shards,
                         const TrainConfig& config);

// || sum_k w_k grad L_k + lambda * grad J(F) ||_2 over full shards in
// surrogate mode, the quantity whose decay the convergence check tracks.
double gradient_norm_probe(const ModelParams& params, const Dataset& data,
                           const std::vector<ClientShard>& shards,
                           const std::vector<double>& weights,
                           const PenaltyConfig& penalty);

}  // namespace fedfair
