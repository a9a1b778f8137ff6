#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "fedfair/bench.hpp"

using namespace fedfair;

namespace {

ExperimentConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidC("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ExperimentConfig::from_json(buffer.str());
}

std::pair<std::string, std::vector<std::string>> parse_sweep(const std::string& sweep) {
  const auto eq = sweep.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= sweep.size()) {
    throw InvalidC("expected --sweep parameter=v1,v2,...");
  }
  std::vector<std::string> values;
  std::stringstream rest(sweep.substr(eq + 1));
  std::string item;
  while (std::getline(rest, item, ',')) {
    if (!item.empty()) values.push_back(item);
  }
  return {sweep.substr(0, eq), values};
}

int run_partition_stats(const ExperimentConfig& config, const std::string& dump_path) {
  const DatasetSplits splits = load_splits(config);
  PartitionConfig partition = config.partition;
  partition.seed = config.base_seed;
  const auto shards = make_partition(splits.train, partition);

  std::vector<double> weights(shards.size());
  std::vector<FairnessStats> stats(shards.size());
  const ModelParams origin = zero_params(splits.train.num_features);
  const MetricKind metric = is_proper(config.train.penalty.metric)
                                ? config.train.penalty.metric
                                : MetricKind::StatisticalParity;
  std::cout << "client,rows,weight,n00,n01,n10,n11\n";
  for (std::size_t k = 0; k < shards.size(); ++k) {
    weights[k] = shards[k].weight;
    stats[k] = fairness_stats(origin, splits.train, shards[k], metric, StatsMode::Hard);
    const CellProbs cells = cell_probs(splits.train, shards[k]);
    const double n_k = static_cast<double>(shards[k].rows.size());
    std::cout << k << ',' << shards[k].rows.size() << ',' << weights[k];
    for (int a = 0; a < 2; ++a) {
      for (int y = 0; y < 2; ++y) {
        std::cout << ',' << static_cast<long long>(std::lround(cells.p[a][y] * n_k));
      }
    }
    std::cout << '\n';
  }
  const auto report = dh_coefficient(stats, weights);
  std::cout << "\nheterogeneity (" << metric_name(metric) << "):\n"
            << report.to_json();
  if (!dump_path.empty()) {
    atomic_write(dump_path, partition_to_json(shards));
    std::cout << "partition manifest written to " << dump_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"federated group-fairness training benchmark"};
  app.require_subcommand(1);

  std::string config_path;
  std::string sweep;
  std::string dump_path;
  std::uint64_t seed = 1234;
  std::size_t trials = 1000;

  auto* run_cmd = app.add_subcommand("run", "train and summarize one configuration");
  run_cmd->add_option("--config", config_path, "experiment config JSON")->required();

  auto* ablation_cmd =
      app.add_subcommand("ablation", "sweep one parameter over a base configuration");
  ablation_cmd->add_option("--config", config_path, "experiment config JSON")->required();
  ablation_cmd
      ->add_option("--sweep", sweep,
                   "parameter=v1,v2,... (epochs, lambda, learning_rate, "
                   "num_clients, regularizer)")
      ->required();

  auto* theorems_cmd =
      app.add_subcommand("theorems", "run the decomposition property suites");
  theorems_cmd->add_option("--trials", trials, "random instances per suite");
  theorems_cmd->add_option("--seed", seed, "suite seed");

  auto* partition_cmd =
      app.add_subcommand("partition-stats", "partition a dataset and report heterogeneity");
  partition_cmd->add_option("--config", config_path, "experiment config JSON")->required();
  partition_cmd->add_option("--dump-partition", dump_path,
                            "write the {client: rows} manifest to this path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      const ResultsTable table = run_experiment(read_config(config_path));
      std::cout << table.to_csv();
    } else if (ablation_cmd->parsed()) {
      const auto [parameter, values] = parse_sweep(sweep);
      const AblationResult result = ablation(read_config(config_path), parameter, values);
      std::cout << result.to_csv();
    } else if (theorems_cmd->parsed()) {
      const TheoremChecks checks = theorem_checks(seed, trials);
      std::cout << checks.to_json();
      if (!checks.all_ok()) return 2;
    } else if (partition_cmd->parsed()) {
      return run_partition_stats(read_config(config_path), dump_path);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
