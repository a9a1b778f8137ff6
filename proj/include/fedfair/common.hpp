#pragma once

#include <algorithm>
#include <cstdint>
#include <future>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fedfair {

// Named error conditions surfaced by the library. Each is its own type so
// callers and tests can catch precisely.
#define FEDFAIR_ERROR(Name)                                    \
  struct Name : std::runtime_error {                           \
    explicit Name(const std::string& msg)                      \
        : std::runtime_error(std::string(#Name) + ": " + msg) {} \
  }

FEDFAIR_ERROR(DimensionMismatch);
FEDFAIR_ERROR(LengthMismatch);
FEDFAIR_ERROR(ShapeMismatch);
FEDFAIR_ERROR(WeightSumMismatch);
FEDFAIR_ERROR(ZeroDenominator);
FEDFAIR_ERROR(ZeroPooledDenominator);
FEDFAIR_ERROR(AllRatiosUndefined);
FEDFAIR_ERROR(InvalidC);
FEDFAIR_ERROR(MissingColumn);
FEDFAIR_ERROR(UnparseableRow);
FEDFAIR_ERROR(EmptyDataset);
FEDFAIR_ERROR(UnknownCategory);
FEDFAIR_ERROR(EmptyShardAfterRetries);
FEDFAIR_ERROR(InsufficientGroupSamples);
FEDFAIR_ERROR(DivergedTraining);

#undef FEDFAIR_ERROR

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic per-task RNG stream: results must not depend on the order in
// which client tasks are scheduled, so each (seed, round, client) triple owns
// an independent generator.
inline std::mt19937_64 rng_stream(std::uint64_t seed, std::uint64_t round,
                                  std::uint64_t client) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ round);
  h = splitmix64(h ^ client);
  return std::mt19937_64(h);
}

// K-dimensional Dirichlet(alpha * 1) draw via normalized gamma variates.
std::vector<double> dirichlet_draw(std::size_t k, double alpha,
                                   std::mt19937_64& rng);

// Deterministic parallel map over task indices: each task fills its own slot,
// so scheduling order cannot affect the result.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  unsigned workers = std::thread::hardware_concurrency();
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(count));
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&fn, w, workers, count] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    }));
  }
  for (auto& f : futures) f.get();
}

// Writes content to path via a temporary file and rename, so readers never
// observe a partial file.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace fedfair
