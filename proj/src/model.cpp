#include "fedfair/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace fedfair {

namespace {

constexpr double kProbClamp = 1e-12;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double clamp_proba(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

void check_dim(const ModelParams& params, const Dataset& data) {
  if (params.weights.size() != data.num_features + 1) {
    throw DimensionMismatch("model expects " +
                            std::to_string(params.weights.size()) +
                            " predictors, dataset provides " +
                            std::to_string(data.num_features + 1));
  }
}

}  // namespace

bool ModelParams::finite() const {
  if (!std::isfinite(bias)) return false;
  return std::all_of(weights.begin(), weights.end(),
                     [](double w) { return std::isfinite(w); });
}

ModelParams zero_params(std::size_t num_features) {
  ModelParams params;
  params.weights.assign(num_features + 1, 0.0);  // sensitive slot + features
  params.bias = 0.0;
  return params;
}

AdamState fresh_adam_state(std::size_t dim, double learning_rate) {
  AdamState state;
  state.first_moment.assign(dim, 0.0);
  state.second_moment.assign(dim, 0.0);
  state.learning_rate = learning_rate;
  return state;
}

double predict_proba(const ModelParams& params, const Dataset& data,
                     std::size_t row) {
  check_dim(params, data);
  double z = params.bias + params.weights[0] * data.sensitive[row];
  const double* x = &data.features[row * data.num_features];
  for (std::size_t j = 0; j < data.num_features; ++j) {
    z += params.weights[j + 1] * x[j];
  }
  return sigmoid(z);
}

double batch_loss(const ModelParams& params, const Dataset& data,
                  const Batch& batch) {
  if (batch.empty()) throw EmptyDataset("batch_loss on empty batch");
  double total = 0.0;
  for (std::size_t row : batch) {
    const double f = clamp_proba(predict_proba(params, data, row));
    total += data.labels[row] ? -std::log(f) : -std::log(1.0 - f);
  }
  return total / static_cast<double>(batch.size());
}

std::vector<double> loss_gradient(const ModelParams& params,
                                  const Dataset& data, const Batch& batch,
                                  const std::vector<double>* sample_weights) {
  check_dim(params, data);
  if (batch.empty()) throw EmptyDataset("loss_gradient on empty batch");
  if (sample_weights && sample_weights->size() != batch.size()) {
    throw DimensionMismatch("sample weights length " +
                            std::to_string(sample_weights->size()) +
                            " vs batch size " + std::to_string(batch.size()));
  }
  std::vector<double> grad(params.dim(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t row = batch[i];
    const double w = sample_weights ? (*sample_weights)[i] : 1.0;
    const double g = w * (predict_proba(params, data, row) - data.labels[row]);
    grad[0] += g * data.sensitive[row];
    const double* x = &data.features[row * data.num_features];
    for (std::size_t j = 0; j < data.num_features; ++j) {
      grad[j + 1] += g * x[j];
    }
    grad.back() += g;
  }
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv_n;
  return grad;
}

std::vector<double> finite_diff_gradient(
    const std::function<double(const ModelParams&)>& objective,
    const ModelParams& params, double h) {
  std::vector<double> grad(params.dim(), 0.0);
  ModelParams probe = params;
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    probe.weights[i] = params.weights[i] + h;
    const double up = objective(probe);
    probe.weights[i] = params.weights[i] - h;
    const double down = objective(probe);
    probe.weights[i] = params.weights[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  probe.bias = params.bias + h;
  const double up = objective(probe);
  probe.bias = params.bias - h;
  const double down = objective(probe);
  grad.back() = (up - down) / (2.0 * h);
  return grad;
}

void adam_step(AdamState& state, ModelParams& params,
               const std::vector<double>& gradient) {
  const std::size_t dim = params.dim();
  if (gradient.size() != dim || state.first_moment.size() != dim) {
    throw ShapeMismatch("adam_step gradient/state/params sizes differ");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, state.step_count);
  const double bc2 = 1.0 - std::pow(state.beta2, state.step_count);
  for (std::size_t i = 0; i < dim; ++i) {
    const double g = gradient[i];
    state.first_moment[i] = state.beta1 * state.first_moment[i] + (1.0 - state.beta1) * g;
    state.second_moment[i] = state.beta2 * state.second_moment[i] + (1.0 - state.beta2) * g * g;
    const double m_hat = state.first_moment[i] / bc1;
    const double v_hat = state.second_moment[i] / bc2;
    const double delta = state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    if (i + 1 < dim) {
      params.weights[i] -= delta;
    } else {
      params.bias -= delta;
    }
  }
}

void gd_step(const AdamState& state, ModelParams& params,
             const std::vector<double>& gradient) {
  const std::size_t dim = params.dim();
  if (gradient.size() != dim) {
    throw ShapeMismatch("gd_step gradient/params sizes differ");
  }
  for (std::size_t i = 0; i + 1 < dim; ++i) {
    params.weights[i] -= state.learning_rate * gradient[i];
  }
  params.bias -= state.learning_rate * gradient.back();
}

std::string checkpoint_to_json(const ModelParams& params,
                               const std::vector<std::string>& feature_names) {
  nlohmann::json j;
  j["weights"] = params.weights;
  j["bias"] = params.bias;
  j["feature_names"] = feature_names;
  return j.dump(2) + "\n";
}

ModelParams checkpoint_from_json(const std::string& json_text,
                                 std::vector<std::string>* feature_names) {
  const auto j = nlohmann::json::parse(json_text);
  ModelParams params;
  params.weights = j.at("weights").get<std::vector<double>>();
  params.bias = j.at("bias").get<double>();
  if (feature_names) {
    *feature_names = j.at("feature_names").get<std::vector<std::string>>();
  }
  return params;
}

}  // namespace fedfair
