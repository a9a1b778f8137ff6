#include <algorithm>
#include <numeric>

#include "fedfair/data.hpp"
#include "json.hpp"

namespace fedfair {

namespace {

std::vector<ClientShard> finalize(std::vector<std::vector<std::size_t>> rows,
                                  std::size_t total) {
  std::vector<ClientShard> shards(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    std::sort(rows[k].begin(), rows[k].end());
    shards[k].rows = std::move(rows[k]);
    shards[k].weight =
        static_cast<double>(shards[k].rows.size()) / static_cast<double>(total);
  }
  return shards;
}

// largest-remainder rounding of proportions to integer counts summing to n
std::vector<std::size_t> apportion(const std::vector<double>& proportions,
                                   std::size_t n) {
  const std::size_t k = proportions.size();
  std::vector<std::size_t> counts(k);
  std::vector<std::pair<double, std::size_t>> fractions(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = proportions[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(exact);
    fractions[i] = {exact - static_cast<double>(counts[i]), i};
    assigned += counts[i];
  }
  std::sort(fractions.begin(), fractions.end(),
            [](const auto& x, const auto& y) {
              if (x.first != y.first) return x.first > y.first;
              return x.second < y.second;
            });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) {
    counts[fractions[i % k].second] += 1;
  }
  return counts;
}

}  // namespace

std::vector<ClientShard> dirichlet_partition(const Dataset& data,
                                             const PartitionConfig& config) {
  if (config.num_clients == 0) throw InvalidC("num_clients must be positive");
  if (config.concentration <= 0.0) throw InvalidC("concentration must be positive");
  const std::size_t K = config.num_clients;

  std::vector<std::size_t> cells[2][2];
  for (std::size_t i = 0; i < data.num_rows; ++i) {
    cells[data.sensitive[i]][data.labels[i]].push_back(i);
  }

  auto rng = rng_stream(config.seed, 0, 0);
  const int max_retries = 100;
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    std::vector<std::vector<std::size_t>> assigned(K);
    for (int a = 0; a < 2; ++a) {
      for (int y = 0; y < 2; ++y) {
        auto indices = cells[a][y];
        if (indices.empty()) continue;  // degenerate cell gets proportion 0
        std::shuffle(indices.begin(), indices.end(), rng);
        const auto proportions = dirichlet_draw(K, config.concentration, rng);
        const auto counts = apportion(proportions, indices.size());
        std::size_t pos = 0;
        for (std::size_t k = 0; k < K; ++k) {
          assigned[k].insert(assigned[k].end(), indices.begin() + pos,
                             indices.begin() + pos + counts[k]);
          pos += counts[k];
        }
      }
    }
    const bool any_empty = std::any_of(assigned.begin(), assigned.end(),
                                       [](const auto& s) { return s.empty(); });
    if (!any_empty) return finalize(std::move(assigned), data.num_rows);
  }
  throw EmptyShardAfterRetries("a client stayed empty after " +
                               std::to_string(max_retries) + " draws");
}

std::vector<ClientShard> pure_group_partition(const Dataset& data,
                                              const PartitionConfig& config) {
  if (config.num_clients < 2) {
    throw InvalidC("pure-group partition needs at least 2 clients");
  }
  const std::size_t K = config.num_clients;
  const std::size_t halves[2] = {K / 2, K - K / 2};

  std::vector<std::size_t> groups[2];
  for (std::size_t i = 0; i < data.num_rows; ++i) {
    groups[data.sensitive[i]].push_back(i);
  }
  for (int a = 0; a < 2; ++a) {
    if (groups[a].size() < halves[a]) {
      throw InsufficientGroupSamples("group " + std::to_string(a) + " has " +
                                     std::to_string(groups[a].size()) +
                                     " samples for " +
                                     std::to_string(halves[a]) + " shards");
    }
  }

  auto rng = rng_stream(config.seed, 0, 0);
  std::vector<std::vector<std::size_t>> assigned;
  for (int a = 0; a < 2; ++a) {
    auto indices = groups[a];
    std::shuffle(indices.begin(), indices.end(), rng);
    // spread as evenly as possible; the first (n mod shards) shards get one extra
    const std::size_t shards_here = halves[a];
    const std::size_t base = indices.size() / shards_here;
    const std::size_t extra = indices.size() % shards_here;
    std::size_t pos = 0;
    for (std::size_t s = 0; s < shards_here; ++s) {
      const std::size_t take = base + (s < extra ? 1 : 0);
      assigned.emplace_back(indices.begin() + pos, indices.begin() + pos + take);
      pos += take;
    }
  }
  return finalize(std::move(assigned), data.num_rows);
}

std::vector<ClientShard> make_partition(const Dataset& data,
                                        const PartitionConfig& config) {
  return config.mode == PartitionMode::Dirichlet
             ? dirichlet_partition(data, config)
             : pure_group_partition(data, config);
}

CellProbs cell_probs(const Dataset& data, const ClientShard& shard) {
  if (shard.rows.empty()) throw EmptyDataset("cell_probs on empty shard");
  CellProbs probs;
  for (std::size_t row : shard.rows) {
    probs.p[data.sensitive[row]][data.labels[row]] += 1.0;
  }
  const double n = static_cast<double>(shard.rows.size());
  for (auto& by_label : probs.p) {
    for (auto& cell : by_label) cell /= n;
  }
  return probs;
}

std::string partition_to_json(const std::vector<ClientShard>& shards) {
  nlohmann::json j;
  for (std::size_t k = 0; k < shards.size(); ++k) {
    j[std::to_string(k)] = shards[k].rows;
  }
  return j.dump() + "\n";
}

}  // namespace fedfair
