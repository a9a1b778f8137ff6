#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/common.hpp"
#include "fedfair/data.hpp"

namespace fedfair {

// Logistic-regression parameters. weights[0] multiplies the sensitive
// attribute (the first predictor); the remaining entries multiply the
// non-sensitive features.
struct ModelParams {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t dim() const { return weights.size() + 1; }
  bool finite() const;
};

ModelParams zero_params(std::size_t num_features);

struct AdamState {
  std::vector<double> first_moment;   // weights then bias, flat
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  double learning_rate = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState fresh_adam_state(std::size_t dim, double learning_rate);

// A batch is a view of row indices into a dataset.
using Batch = std::vector<std::size_t>;

double predict_proba(const ModelParams& params, const Dataset& data,
                     std::size_t row);

inline bool predict_hard(const ModelParams& params, const Dataset& data,
                         std::size_t row) {
  // ties at 0.5 classify as 0 (strict inequality)
  return predict_proba(params, data, row) > 0.5;
}

// Mean cross-entropy over the batch, probabilities clamped to
// [1e-12, 1 - 1e-12] so the log never sees 0.
double batch_loss(const ModelParams& params, const Dataset& data,
                  const Batch& batch);

// Analytic gradient of the (optionally sample-weighted) mean cross-entropy.
// Returned flat as weights then bias.
std::vector<double> loss_gradient(
    const ModelParams& params, const Dataset& data, const Batch& batch,
    const std::vector<double>* sample_weights = nullptr);

// Central-difference gradient of an arbitrary objective, used as the test
// oracle for every analytic gradient in the project.
std::vector<double> finite_diff_gradient(
    const std::function<double(const ModelParams&)>& objective,
    const ModelParams& params, double h = 1e-6);

// One bias-corrected Adam step; mutates state and params in place.
void adam_step(AdamState& state, ModelParams& params,
               const std::vector<double>& gradient);

// Plain gradient-descent step at the Adam state's learning rate. Kept behind
// the same call shape so the trainer can swap optimizers.
void gd_step(const AdamState& state, ModelParams& params,
             const std::vector<double>& gradient);

// Checkpoint format: JSON {weights: [...], bias: x, feature_names: [...]}.
std::string checkpoint_to_json(const ModelParams& params,
                               const std::vector<std::string>& feature_names);
ModelParams checkpoint_from_json(const std::string& json_text,
                                 std::vector<std::string>* feature_names = nullptr);

}  // namespace fedfair
