#include <cmath>
#include <random>

#include "doctest.h"
#include "fedfair/model.hpp"

using namespace fedfair;

namespace {

Dataset tiny_dataset(std::size_t rows, std::size_t features, std::uint64_t seed) {
  Dataset data;
  data.num_rows = rows;
  data.num_features = features;
  data.features.resize(rows * features);
  data.sensitive.resize(rows);
  data.labels.resize(rows);
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < features; ++j) data.features[i * features + j] = normal(rng);
    data.sensitive[i] = uniform(rng) < 0.5 ? 0 : 1;
    data.labels[i] = uniform(rng) < 0.5 ? 0 : 1;
  }
  for (std::size_t j = 0; j < features; ++j) {
    data.feature_names.push_back("f" + std::to_string(j));
  }
  return data;
}

ModelParams random_params(std::size_t features, std::uint64_t seed) {
  ModelParams params = zero_params(features);
  std::mt19937_64 rng(splitmix64(seed));
  std::normal_distribution<double> normal(0.0, 0.7);
  for (auto& w : params.weights) w = normal(rng);
  params.bias = normal(rng);
  return params;
}

Batch all_rows(const Dataset& data) {
  Batch batch(data.num_rows);
  for (std::size_t i = 0; i < data.num_rows; ++i) batch[i] = i;
  return batch;
}

}  // namespace

TEST_CASE("zero params predict one half everywhere") {
  const Dataset data = tiny_dataset(8, 3, 1);
  const ModelParams params = zero_params(3);
  for (std::size_t i = 0; i < data.num_rows; ++i) {
    CHECK(predict_proba(params, data, i) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_FALSE(predict_hard(params, data, i));  // ties classify as 0
  }
}

TEST_CASE("unit weight on ln 3 gives three quarters") {
  Dataset data;
  data.num_rows = 1;
  data.num_features = 1;
  data.features = {std::log(3.0)};
  data.sensitive = {0};
  data.labels = {1};
  data.feature_names = {"x"};
  ModelParams params = zero_params(1);
  params.weights[1] = 1.0;  // weights[0] multiplies the sensitive attribute
  CHECK(predict_proba(params, data, 0) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("large bias saturates the output") {
  const Dataset data = tiny_dataset(4, 2, 2);
  ModelParams params = zero_params(2);
  params.bias = 40.0;
  for (std::size_t i = 0; i < data.num_rows; ++i) {
    CHECK(predict_proba(params, data, i) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(predict_hard(params, data, i));
  }
}

TEST_CASE("wrong parameter dimension is rejected") {
  const Dataset data = tiny_dataset(4, 3, 3);
  const ModelParams params = zero_params(5);
  CHECK_THROWS_AS(predict_proba(params, data, 0), DimensionMismatch);
}

TEST_CASE("loss at one half is ln 2") {
  const Dataset data = tiny_dataset(16, 3, 4);
  const ModelParams params = zero_params(3);
  CHECK(batch_loss(params, data, all_rows(data)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("single sample loss hand value") {
  Dataset data;
  data.num_rows = 1;
  data.num_features = 1;
  data.features = {std::log(3.0)};
  data.sensitive = {0};
  data.labels = {1};
  data.feature_names = {"x"};
  ModelParams params = zero_params(1);
  params.weights[1] = 1.0;
  // f = 0.75, y = 1 -> loss = -ln 0.75
  CHECK(batch_loss(params, data, {0}) ==
        doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("confident correct predictions give near zero loss") {
  Dataset data = tiny_dataset(6, 2, 5);
  ModelParams params = zero_params(2);
  params.bias = 60.0;
  for (auto& y : data.labels) y = 1;
  CHECK(batch_loss(params, data, all_rows(data)) <= 1e-10);
}

TEST_CASE("loss stays within the clamp bounds") {
  Dataset data = tiny_dataset(6, 2, 6);
  ModelParams params = zero_params(2);
  params.bias = 1e6;  // confidently wrong on label-0 samples
  for (auto& y : data.labels) y = 0;
  const double loss = batch_loss(params, data, all_rows(data));
  CHECK(loss >= 0.0);
  // rounding 1 - 1e-12 near 1 costs about 1e-4 relative on the clamp
  CHECK(loss <= -std::log(1e-12) + 1e-3);
}

TEST_CASE("gradient vanishes at a perfect fit") {
  Dataset data = tiny_dataset(10, 2, 7);
  ModelParams params = zero_params(2);
  params.bias = 50.0;
  for (auto& y : data.labels) y = 1;
  const auto grad = loss_gradient(params, data, all_rows(data));
  for (double g : grad) CHECK(std::abs(g) <= 1e-8);
}

TEST_CASE("uniform sample weights equal the unweighted gradient") {
  const Dataset data = tiny_dataset(12, 3, 8);
  const ModelParams params = random_params(3, 9);
  const Batch batch = all_rows(data);
  const std::vector<double> uniform(batch.size(), 1.0);
  const auto g1 = loss_gradient(params, data, batch);
  const auto g2 = loss_gradient(params, data, batch, &uniform);
  REQUIRE(g1.size() == g2.size());
  for (std::size_t i = 0; i < g1.size(); ++i) {
    CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-15));
  }
}

TEST_CASE("loss gradient matches finite differences over random trials") {
  std::mt19937_64 seeds(splitmix64(10));
  for (int trial = 0; trial < 100; ++trial) {
    const Dataset data = tiny_dataset(6 + trial % 5, 2 + trial % 3, seeds());
    const ModelParams params = random_params(data.num_features, seeds());
    Batch batch = all_rows(data);
    std::vector<double> weights(batch.size());
    std::mt19937_64 wrng(seeds());
    std::uniform_real_distribution<double> uniform(0.1, 2.0);
    for (auto& w : weights) w = uniform(wrng);
    const bool weighted = trial % 2 == 0;
    const auto grad =
        loss_gradient(params, data, batch, weighted ? &weights : nullptr);
    const auto oracle = finite_diff_gradient(
        [&](const ModelParams& p) {
          if (!weighted) return batch_loss(p, data, batch);
          // weighted-mean loss matching loss_gradient's contract
          double total = 0.0;
          for (std::size_t i = 0; i < batch.size(); ++i) {
            total += weights[i] * batch_loss(p, data, {batch[i]});
          }
          return total / static_cast<double>(batch.size());
        },
        params, 1e-6);
    double scale = 1.0;
    for (double g : oracle) scale = std::max(scale, std::abs(g));
    for (std::size_t i = 0; i < grad.size(); ++i) {
      CHECK(std::abs(grad[i] - oracle[i]) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("finite differences recover a quadratic gradient") {
  ModelParams params = zero_params(1);
  params.weights = {3.0, -1.0};
  params.bias = 0.5;
  const auto grad = finite_diff_gradient(
      [](const ModelParams& p) {
        double s = p.bias * p.bias;
        for (double w : p.weights) s += w * w;
        return 0.5 * s;
      },
      params, 1e-6);
  CHECK(grad[0] == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(grad[1] == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(grad[2] == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("finite differences on a constant objective are zero") {
  const ModelParams params = random_params(3, 11);
  const auto grad =
      finite_diff_gradient([](const ModelParams&) { return 7.0; }, params, 1e-6);
  for (double g : grad) CHECK(g == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("adam ignores a zero gradient") {
  ModelParams params = random_params(2, 12);
  const ModelParams before = params;
  AdamState state = fresh_adam_state(params.dim(), 0.1);
  adam_step(state, params, std::vector<double>(params.dim(), 0.0));
  CHECK(state.step_count == 1);
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    CHECK(params.weights[i] == before.weights[i]);
  }
  CHECK(params.bias == before.bias);
}

TEST_CASE("adam first step moves by minus lr times sign") {
  ModelParams params = zero_params(1);
  AdamState state = fresh_adam_state(params.dim(), 0.002);
  const std::vector<double> grad = {0.5, -3.0, 1e-4};
  adam_step(state, params, grad);
  CHECK(std::abs(params.weights[0] + 0.002) <= 0.002 * 1e-3);
  CHECK(std::abs(params.weights[1] - 0.002) <= 0.002 * 1e-3);
  CHECK(std::abs(params.bias + 0.002) <= 0.002 * 1e-3);
}

TEST_CASE("adam solves a one dimensional quadratic") {
  ModelParams params = zero_params(0);  // bias plus one sensitive weight
  AdamState state = fresh_adam_state(params.dim(), 0.05);
  for (int step = 0; step < 1000; ++step) {
    adam_step(state, params, {0.0, params.bias - 2.0});
  }
  CHECK(std::abs(params.bias - 2.0) <= 0.01);
  CHECK(params.weights[0] == 0.0);
}

TEST_CASE("adam is deterministic") {
  const std::vector<double> grad = {0.3, -0.2, 0.9};
  ModelParams p1 = zero_params(1), p2 = zero_params(1);
  AdamState s1 = fresh_adam_state(3, 0.01), s2 = fresh_adam_state(3, 0.01);
  for (int i = 0; i < 5; ++i) {
    adam_step(s1, p1, grad);
    adam_step(s2, p2, grad);
  }
  CHECK(p1.weights == p2.weights);
  CHECK(p1.bias == p2.bias);
  CHECK(s1.step_count == s2.step_count);
}

TEST_CASE("gd step is exactly theta minus lr times gradient") {
  ModelParams params = random_params(2, 13);
  const ModelParams before = params;
  AdamState state = fresh_adam_state(params.dim(), 0.25);
  const std::vector<double> grad = {1.0, -2.0, 0.5, 4.0};
  gd_step(state, params, grad);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(params.weights[i] == before.weights[i] - 0.25 * grad[i]);
  }
  CHECK(params.bias == before.bias - 0.25 * grad[3]);
}

TEST_CASE("checkpoint json round trip preserves every bit") {
  const ModelParams params = random_params(4, 14);
  const std::vector<std::string> names = {"age", "hours", "edu=HS", "edu=BS"};
  const std::string text = checkpoint_to_json(params, names);
  std::vector<std::string> restored_names;
  const ModelParams restored = checkpoint_from_json(text, &restored_names);
  CHECK(restored.weights == params.weights);
  CHECK(restored.bias == params.bias);
  CHECK(restored_names == names);
}

TEST_CASE("finite flags non numeric parameters") {
  ModelParams params = zero_params(2);
  CHECK(params.finite());
  params.weights[1] = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(params.finite());
  params.weights[1] = std::numeric_limits<double>::infinity();
  CHECK_FALSE(params.finite());
}
