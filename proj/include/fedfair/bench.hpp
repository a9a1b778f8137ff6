#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fedfair/engine.hpp"

namespace fedfair {

enum class DatasetKind { Adult, Compas, Synthetic };

struct SyntheticConfig {
  std::size_t num_rows = 2000;
  std::size_t num_features = 5;
  std::uint64_t seed = 7;
  // Shift added to the logit for group A=1; larger means more group-label
  // correlation and a more biased ground truth.
  double group_shift = 1.0;
};

struct ExperimentConfig {
  DatasetKind dataset = DatasetKind::Synthetic;
  std::string data_dir = "data";
  SyntheticConfig synthetic;
  PartitionConfig partition;
  TrainConfig train;
  std::size_t replications = 1;
  std::uint64_t base_seed = 42;
  std::uint64_t split_seed = 777;  // COMPAS 80/20 split
  std::vector<MetricKind> metrics_to_report = {MetricKind::StatisticalParity,
                                               MetricKind::EqualOpportunity};
  // FairFed only: pick fairfed_beta from {0.1, 1, 10} on a held-out slice of
  // the training split (lowest bias subject to accuracy within 2 points of
  // the best) instead of using train.fairfed_beta directly.
  bool fairfed_beta_grid = true;
  std::string output_dir;

  static ExperimentConfig from_json(const std::string& json_text);
  std::string to_json() const;
  void validate() const;
};

struct Evaluation {
  double accuracy = 0.0;  // percent
  std::optional<double> sp;
  std::optional<double> eop;
  std::optional<double> calibration;
};

// Hard-mode fairness on the pooled test set, reported as percentages.
// Undefined metrics (an empty group) come back empty.
Evaluation evaluate(const ModelParams& params, const Dataset& test);

struct ResultsRow {
  std::size_t replications = 0;
  double accuracy_mean = 0.0, accuracy_stderr = 0.0;
  double sp_mean = 0.0, sp_stderr = 0.0;
  double eop_mean = 0.0, eop_stderr = 0.0;
};

struct ResultsTable {
  // keyed by (algorithm, concentration, target metric)
  std::map<std::string, ResultsRow> rows;
  std::string to_csv() const;
};

double sample_stderr(const std::vector<double>& values);

// Loads and preprocesses the configured dataset (canonical Adult split,
// seeded COMPAS split, or the synthetic generator).
DatasetSplits load_splits(const ExperimentConfig& config);

// Ground-truth logistic data with a controllable group shift, for fast tests
// and theorem-check smoke runs.
DatasetSplits synthetic_splits(const SyntheticConfig& config);

// The FairFed beta grid search described at ExperimentConfig::fairfed_beta_grid.
double select_fairfed_beta(const ExperimentConfig& config, const Dataset& train);

// Runs the replication loop: partition with seed base_seed + r, train,
// evaluate; persists per-replication traces and a summary when output_dir is
// set, skipping replications already on disk.
ResultsTable run_experiment(const ExperimentConfig& config);

struct TheoremChecks {
  bool decomposition_ok = false;
  double decomposition_max_error = 0.0;
  bool bound_ok = false;
  std::size_t bound_violations = 0;
  bool forward_ok = false;
  bool converse_ok = false;
  bool condition_ok = false;
  std::string failure_detail;
  bool all_ok() const {
    return decomposition_ok && bound_ok && forward_ok && converse_ok && condition_ok;
  }
  std::string to_json() const;
};

// Property suites over random instances at the requested scale.
TheoremChecks theorem_checks(std::uint64_t seed, std::size_t trials);

// One run_experiment per swept value with shared seeds; long-format CSV rows.
struct AblationResult {
  std::string parameter;
  std::vector<std::pair<std::string, ResultsTable>> runs;
  std::string to_csv() const;
};
AblationResult ablation(const ExperimentConfig& config,
                        const std::string& parameter,
                        const std::vector<std::string>& values);

}  // namespace fedfair
