#include "fedfair/engine.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace fedfair {

namespace {

std::vector<double> shard_weights(const std::vector<ClientShard>& shards) {
  std::vector<double> weights(shards.size());
  for (std::size_t k = 0; k < shards.size(); ++k) weights[k] = shards[k].weight;
  return weights;
}

struct TestEvaluation {
  double accuracy = 0.0;  // percent
  std::optional<double> sp;
  std::optional<double> eop;
};

TestEvaluation evaluate_hard(const ModelParams& params, const Dataset& test) {
  TestEvaluation eval;
  double correct = 0.0;
  double pos[2] = {0.0, 0.0}, cnt[2] = {0.0, 0.0};
  double tp[2] = {0.0, 0.0}, cond[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < test.num_rows; ++i) {
    const bool pred = predict_hard(params, test, i);
    const int a = test.sensitive[i];
    const bool label = test.labels[i] != 0;
    if (pred == label) correct += 1.0;
    cnt[a] += 1.0;
    if (pred) pos[a] += 1.0;
    if (label) {
      cond[a] += 1.0;
      if (pred) tp[a] += 1.0;
    }
  }
  eval.accuracy = 100.0 * correct / static_cast<double>(test.num_rows);
  if (cnt[0] > 0.0 && cnt[1] > 0.0) {
    eval.sp = 100.0 * std::abs(pos[0] / cnt[0] - pos[1] / cnt[1]);
  }
  if (cond[0] > 0.0 && cond[1] > 0.0) {
    eval.eop = 100.0 * std::abs(tp[0] / cond[0] - tp[1] / cond[1]);
  }
  return eval;
}

void accumulate(std::vector<double>& into, const std::vector<double>& grad,
                double scale) {
  for (std::size_t i = 0; i < into.size(); ++i) into[i] += scale * grad[i];
}

}  // namespace

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::FedAvg: return "fedavg";
    case Algorithm::LRW: return "lrw";
    case Algorithm::FairFed: return "fairfed";
    case Algorithm::FedGFT: return "fedgft";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  if (rounds == 0 || local_epochs == 0 || batch_size == 0 || num_clients == 0) {
    throw InvalidC("rounds, epochs, batch size and clients must be positive");
  }
  if (learning_rate <= 0.0) throw InvalidC("learning rate must be positive");
  if (client_fraction <= 0.0 || client_fraction > 1.0) {
    throw InvalidC("client fraction must lie in (0, 1]");
  }
  if (penalty.lambda < 0.0) throw InvalidC("lambda must be nonnegative");
  if (fairfed_beta < 0.0) throw InvalidC("fairfed beta must be nonnegative");
  if (algorithm == Algorithm::FedGFT && !is_proper(penalty.metric)) {
    throw InvalidC("penalty target must be a proper metric");
  }
}

ModelParams client_update(const ModelParams& params, const Dataset& data,
                          const ClientShard& shard, const TrainConfig& config,
                          const ClientExtras& extras, std::mt19937_64& rng) {
  if (shard.rows.empty()) throw EmptyDataset("client_update on empty shard");
  const std::size_t n = shard.rows.size();
  if (extras.sample_weights && extras.sample_weights->size() != n) {
    throw DimensionMismatch("sample weights do not match shard size");
  }
  ModelParams updated = params;
  AdamState adam = fresh_adam_state(params.dim(), config.learning_rate);

  const bool penalized = extras.fairness && config.penalty.lambda > 0.0 &&
                         extras.fairness->c_theta != 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Batch batch;
  std::vector<double> batch_weights;
  for (std::size_t epoch = 0; epoch < config.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      batch.clear();
      batch_weights.clear();
      for (std::size_t i = start; i < stop; ++i) {
        batch.push_back(shard.rows[order[i]]);
        if (extras.sample_weights) {
          batch_weights.push_back((*extras.sample_weights)[order[i]]);
        }
      }
      auto grad = loss_gradient(updated, data, batch,
                                extras.sample_weights ? &batch_weights : nullptr);
      if (penalized) {
        // the loss term is stochastic; the fairness component is computed
        // over the whole shard at the current parameters
        const auto fairness_grad = fairness_component_gradient(
            updated, data, shard, config.penalty.metric,
            extras.fairness->pooled_b, extras.fairness->pooled_d);
        accumulate(grad, fairness_grad,
                   config.penalty.lambda * extras.fairness->c_theta);
      }
      if (config.optimizer == Optimizer::Adam) {
        adam_step(adam, updated, grad);
      } else {
        gd_step(adam, updated, grad);
      }
    }
  }
  return updated;
}

ModelParams aggregate(const std::vector<ModelParams>& params_list,
                      const std::vector<double>& weights) {
  if (params_list.empty()) throw EmptyDataset("aggregate of nothing");
  if (params_list.size() != weights.size()) {
    throw LengthMismatch("params count vs weight count");
  }
  double weight_sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw WeightSumMismatch("negative aggregation weight");
    weight_sum += w;
  }
  if (std::abs(weight_sum - 1.0) > 1e-9) {
    throw WeightSumMismatch("weights sum to " + std::to_string(weight_sum));
  }
  const std::size_t dim = params_list.front().weights.size();
  ModelParams out = zero_params(dim - 1);
  for (std::size_t k = 0; k < params_list.size(); ++k) {
    if (params_list[k].weights.size() != dim) {
      throw ShapeMismatch("client params have different dimensions");
    }
    for (std::size_t i = 0; i < dim; ++i) {
      out.weights[i] += weights[k] * params_list[k].weights[i];
    }
    out.bias += weights[k] * params_list[k].bias;
  }
  return out;
}

ConstUpdate const_update(const ModelParams& params, const Dataset& data,
                         const std::vector<ClientShard>& shards,
                         const std::vector<std::size_t>& selected,
                         const std::vector<double>& weights,
                         const PenaltyConfig& penalty) {
  if (!is_proper(penalty.metric)) {
    throw InvalidC("const_update needs a proper metric");
  }
  // Only the summary quadruples (a_k, b_k, c_k, d_k) reach the server here;
  // pooled denominators come from the full partition.
  std::vector<FairnessStats> all_stats(shards.size());
  parallel_for(shards.size(), [&](std::size_t k) {
    all_stats[k] =
        fairness_stats(params, data, shards[k], penalty.metric, StatsMode::Surrogate);
  });
  const FairnessStats pooled = pooled_stats(all_stats, weights);
  if (pooled.b <= 0.0 || pooled.d <= 0.0) {
    throw ZeroPooledDenominator("a sensitive group is absent from every shard");
  }
  ConstUpdate update;
  update.pooled_b = pooled.b;
  update.pooled_d = pooled.d;
  double signed_value = 0.0;
  for (std::size_t k : selected) {
    signed_value +=
        weights[k] * (all_stats[k].a / pooled.b - all_stats[k].c / pooled.d);
  }
  update.signed_fairness = signed_value;
  update.c_theta = sign_update(signed_value, penalty);
  return update;
}

std::vector<double> fairfed_weights(double global_f,
                                    const std::vector<std::optional<double>>& local_f,
                                    const std::vector<double>& base_weights,
                                    double fairfed_beta, bool* fallback_used) {
  if (local_f.size() != base_weights.size()) {
    throw LengthMismatch("local values vs base weights");
  }
  std::vector<double> weights(base_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < base_weights.size(); ++k) {
    double gap = 0.0;
    if (local_f[k]) {
      gap = std::abs(global_f - *local_f[k]);
    } else if (fallback_used) {
      *fallback_used = true;  // pure-group client keeps its base weight
    }
    weights[k] = std::exp(-fairfed_beta * gap) * base_weights[k];
    total += weights[k];
  }
  for (auto& w : weights) w /= total;
  return weights;
}

std::vector<double> lrw_weights(const Dataset& data, const ClientShard& shard) {
  const CellProbs probs = cell_probs(data, shard);
  const double p_a[2] = {probs.p[0][0] + probs.p[0][1],
                         probs.p[1][0] + probs.p[1][1]};
  const double p_y[2] = {probs.p[0][0] + probs.p[1][0],
                         probs.p[0][1] + probs.p[1][1]};
  std::vector<double> weights(shard.rows.size());
  double total = 0.0;
  for (std::size_t i = 0; i < shard.rows.size(); ++i) {
    const std::size_t row = shard.rows[i];
    const int a = data.sensitive[row];
    const int y = data.labels[row];
    weights[i] = p_a[a] * p_y[y] / probs.p[a][y];  // cell has this sample, so > 0
    total += weights[i];
  }
  const double scale = static_cast<double>(weights.size()) / total;
  for (auto& w : weights) w *= scale;  // mean 1
  return weights;
}

double gradient_norm_probe(const ModelParams& params, const Dataset& data,
                           const std::vector<ClientShard>& shards,
                           const std::vector<double>& weights,
                           const PenaltyConfig& penalty) {
  std::vector<double> total(params.dim(), 0.0);
  std::vector<std::vector<double>> per_client(shards.size());
  parallel_for(shards.size(), [&](std::size_t k) {
    per_client[k] = loss_gradient(params, data, shards[k].rows);
  });
  for (std::size_t k = 0; k < shards.size(); ++k) {
    accumulate(total, per_client[k], weights[k]);
  }
  if (penalty.lambda > 0.0) {
    const auto cu =
        const_update(params, data, shards,
                     [&] {
                       std::vector<std::size_t> all(shards.size());
                       std::iota(all.begin(), all.end(), 0);
                       return all;
                     }(),
                     weights, penalty);
    if (cu.c_theta != 0.0) {
      parallel_for(shards.size(), [&](std::size_t k) {
        per_client[k] = fairness_component_gradient(
            params, data, shards[k], penalty.metric, cu.pooled_b, cu.pooled_d);
      });
      for (std::size_t k = 0; k < shards.size(); ++k) {
        accumulate(total, per_client[k], penalty.lambda * cu.c_theta * weights[k]);
      }
    }
  }
  double norm_sq = 0.0;
  for (double v : total) norm_sq += v * v;
  return std::sqrt(norm_sq);
}

TrainResult run_training(const Dataset& train, const Dataset& test,
                         const std::vector<ClientShard>& shards,
                         const TrainConfig& config) {
  config.validate();
  if (shards.size() != config.num_clients) {
    throw LengthMismatch("partition has " + std::to_string(shards.size()) +
                         " shards for " + std::to_string(config.num_clients) +
                         " clients");
  }
  const std::vector<double> weights = shard_weights(shards);
  const bool uses_lrw = config.algorithm == Algorithm::LRW ||
                        config.algorithm == Algorithm::FairFed;

  // LRW weights are data-only, so one computation serves every round
  std::vector<std::vector<double>> lrw(shards.size());
  if (uses_lrw) {
    parallel_for(shards.size(), [&](std::size_t k) {
      lrw[k] = lrw_weights(train, shards[k]);
    });
  }

  TrainResult result;
  result.params = zero_params(train.num_features);
  const PenaltyConfig trace_penalty =
      config.algorithm == Algorithm::FedGFT ? config.penalty : PenaltyConfig{};

  Batch full_train(train.num_rows);
  std::iota(full_train.begin(), full_train.end(), 0);

  const std::size_t select_count = std::min<std::size_t>(
      config.num_clients,
      static_cast<std::size_t>(
          std::ceil(config.client_fraction * static_cast<double>(config.num_clients))));

  for (std::size_t round = 1; round <= config.rounds; ++round) {
    // server stream: client id one past the last real client
    auto server_rng = rng_stream(config.seed, round, config.num_clients);
    std::vector<std::size_t> selected(config.num_clients);
    std::iota(selected.begin(), selected.end(), 0);
    if (select_count < config.num_clients) {
      std::shuffle(selected.begin(), selected.end(), server_rng);
      selected.resize(select_count);
      std::sort(selected.begin(), selected.end());
    }

    ClientExtras extras;
    std::vector<std::optional<double>> fairfed_local;
    double fairfed_global = 0.0;
    if (config.algorithm == Algorithm::FedGFT) {
      extras.fairness = const_update(result.params, train, shards, selected,
                                     weights, config.penalty);
    } else if (config.algorithm == Algorithm::FairFed) {
      std::vector<FairnessStats> hard_stats(shards.size());
      parallel_for(shards.size(), [&](std::size_t k) {
        hard_stats[k] = fairness_stats(result.params, train, shards[k],
                                       config.penalty.metric, StatsMode::Hard);
      });
      const auto report = global_fairness(hard_stats, weights);
      fairfed_global = report.pooled_value;
      fairfed_local = report.local_values;
    }

    std::vector<ModelParams> updated(selected.size());
    parallel_for(selected.size(), [&](std::size_t i) {
      const std::size_t k = selected[i];
      ClientExtras client_extras = extras;
      if (uses_lrw) client_extras.sample_weights = &lrw[k];
      auto rng = rng_stream(config.seed, round, k);
      updated[i] =
          client_update(result.params, train, shards[k], config, client_extras, rng);
    });

    std::vector<double> agg_weights(selected.size());
    for (std::size_t i = 0; i < selected.size(); ++i) {
      agg_weights[i] = weights[selected[i]];
    }
    if (config.algorithm == Algorithm::FairFed) {
      std::vector<std::optional<double>> selected_local(selected.size());
      for (std::size_t i = 0; i < selected.size(); ++i) {
        selected_local[i] = fairfed_local[selected[i]];
      }
      bool fallback = false;
      agg_weights = fairfed_weights(fairfed_global, selected_local, agg_weights,
                                    config.fairfed_beta, &fallback);
      if (fallback) result.trace.pure_shard_fallback_used = true;
    } else {
      const double total = std::accumulate(agg_weights.begin(), agg_weights.end(), 0.0);
      for (auto& w : agg_weights) w /= total;
    }

    result.params = aggregate(updated, agg_weights);
    if (!result.params.finite()) {
      throw DivergedTraining("non-finite parameters at round " +
                             std::to_string(round));
    }

    RoundRecord record;
    record.round = round;
    record.train_loss = batch_loss(result.params, train, full_train);
    const auto eval = evaluate_hard(result.params, test);
    record.test_accuracy = eval.accuracy;
    record.sp = eval.sp;
    record.eop = eval.eop;
    record.gradient_norm =
        gradient_norm_probe(result.params, train, shards, weights, trace_penalty);
    if (is_proper(trace_penalty.metric)) {
      const auto cu = const_update(result.params, train, shards,
                                   [&] {
                                     std::vector<std::size_t> all(shards.size());
                                     std::iota(all.begin(), all.end(), 0);
                                     return all;
                                   }(),
                                   weights, trace_penalty);
      record.signed_fairness = cu.signed_fairness;
    }
    result.trace.records.push_back(record);
  }
  return result;
}

std::string TrainTrace::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "round,loss,acc,sp,eop,grad_norm,signed_f\n";
  for (const auto& r : records) {
    out << r.round << ',' << r.train_loss << ',' << r.test_accuracy << ',';
    if (r.sp) out << *r.sp;
    out << ',';
    if (r.eop) out << *r.eop;
    out << ',' << r.gradient_norm << ',' << r.signed_fairness << '\n';
  }
  return out.str();
}

std::string TrainTrace::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    nlohmann::json j;
    j["round"] = r.round;
    j["loss"] = r.train_loss;
    j["acc"] = r.test_accuracy;
    j["sp"] = r.sp ? nlohmann::json(*r.sp) : nlohmann::json(nullptr);
    j["eop"] = r.eop ? nlohmann::json(*r.eop) : nlohmann::json(nullptr);
    j["grad_norm"] = r.gradient_norm;
    j["signed_f"] = r.signed_fairness;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace fedfair
