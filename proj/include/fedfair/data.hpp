#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fedfair/common.hpp"

namespace fedfair {

enum class ColumnKind { Numeric, Categorical };
enum class ColumnRole { Feature, Sensitive, Label };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  ColumnRole role = ColumnRole::Feature;
  // value mapped to 1 for the sensitive and label columns
  std::string positive_value;
};

struct Schema {
  std::vector<ColumnSpec> columns;
};

Schema schema_from_json(const std::string& json_text);
Schema load_schema(const std::string& path);

// Raw rows after ingestion: string cells for exactly the schema's columns,
// with rows containing missing values already dropped.
struct RawDataset {
  Schema schema;
  std::vector<std::vector<std::string>> rows;
  std::size_t dropped_rows = 0;
};

RawDataset load_dataset(const std::string& path, const Schema& schema);

// Numeric encoding ready for training. The sensitive attribute is kept out
// of the feature block; the model treats it as the first predictor.
struct Dataset {
  std::size_t num_rows = 0;
  std::size_t num_features = 0;
  std::vector<double> features;  // num_rows x num_features, row-major
  std::vector<std::uint8_t> sensitive;
  std::vector<std::uint8_t> labels;
  std::vector<std::string> feature_names;

  double feature(std::size_t row, std::size_t j) const {
    return features[row * num_features + j];
  }
};

// Fitted encoding: one-hot for categoricals (reference level dropped),
// z-scores for numerics from the fitting split's statistics. Numeric columns
// with at most two distinct values pass through unscaled, which keeps the
// encoding idempotent; constant columns are dropped.
struct Preprocessor {
  struct NumericColumn {
    std::size_t schema_index;
    bool standardize;
    double mean = 0.0;
    double stddev = 1.0;
  };
  struct CategoricalColumn {
    std::size_t schema_index;
    std::vector<std::string> levels;  // sorted; levels[0] is the reference
  };

  std::size_t sensitive_index = 0;
  std::size_t label_index = 0;
  std::string sensitive_positive;
  std::string label_positive;
  // encoding steps in schema order
  std::vector<NumericColumn> numeric_columns;
  std::vector<CategoricalColumn> categorical_columns;
  std::vector<std::string> dropped_constant_columns;

  static Preprocessor fit(const RawDataset& train);
  Dataset transform(const RawDataset& data) const;
};

// Convenience: fit on train, transform both.
struct DatasetSplits {
  Dataset train;
  Dataset test;
  Preprocessor preprocessor;
};
DatasetSplits preprocess_splits(const RawDataset& train, const RawDataset& test);

// Seeded row split for datasets without a canonical train/test division.
std::pair<RawDataset, RawDataset> seeded_split(const RawDataset& data,
                                               double train_fraction,
                                               std::uint64_t seed);

// New dataset holding the selected rows, in the given order.
Dataset subset_dataset(const Dataset& data, const std::vector<std::size_t>& rows);

enum class PartitionMode { Dirichlet, PureGroup };

struct PartitionConfig {
  std::size_t num_clients = 10;
  double concentration = 100.0;  // Dirichlet alpha
  std::uint64_t seed = 0;
  PartitionMode mode = PartitionMode::Dirichlet;
};

struct ClientShard {
  std::vector<std::size_t> rows;  // indices into a Dataset, ascending
  double weight = 0.0;            // n_k / n
};

struct CellProbs {
  // joint empirical frequencies, indexed [sensitive][label]
  double p[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double sum() const { return p[0][0] + p[0][1] + p[1][0] + p[1][1]; }
};

// Assigns each (A, Y) cell's samples to clients by a Dirichlet(alpha * 1)
// proportion draw, rounding with the largest-remainder method. Resamples up
// to 100 times if any shard ends up empty.
std::vector<ClientShard> dirichlet_partition(const Dataset& data,
                                             const PartitionConfig& config);

// Half the shards hold only A=0 samples, half only A=1, each group spread
// uniformly at random across its shards.
std::vector<ClientShard> pure_group_partition(const Dataset& data,
                                              const PartitionConfig& config);

std::vector<ClientShard> make_partition(const Dataset& data,
                                        const PartitionConfig& config);

CellProbs cell_probs(const Dataset& data, const ClientShard& shard);

// JSON manifest {client_id: [row indices]} for --dump-partition.
std::string partition_to_json(const std::vector<ClientShard>& shards);

}  // namespace fedfair
