#include "fedfair/common.hpp"

#include <filesystem>
#include <fstream>

namespace fedfair {

std::vector<double> dirichlet_draw(std::size_t k, double alpha,
                                   std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> draw(k);
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    draw[i] = gamma(rng);
    total += draw[i];
  }
  if (total <= 0.0) {
    // all-zero gamma draws can happen for tiny alpha; fall back to uniform
    for (auto& v : draw) v = 1.0 / static_cast<double>(k);
    return draw;
  }
  for (auto& v : draw) v /= total;
  return draw;
}

void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace fedfair
