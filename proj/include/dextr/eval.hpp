#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dextr/proxy.hpp"

namespace dextr {

// Average ranks over tie blocks, 1-based: [10, 20, 20, 30] -> [1, 2.5,
// 2.5, 4].
std::vector<double> fractional_ranks(const std::vector<double>& xs);

// Spearman rank correlation: Pearson over fractional ranks. Throws
// std::invalid_argument for length mismatch or fewer than 2 points and
// std::domain_error when either list is constant.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

struct BenchmarkRow {
  std::string encoding;
  double accuracy = 0.0;
};

struct BenchmarkTable {
  std::vector<BenchmarkRow> rows;
};

// CSV with header "encoding,accuracy"; encodings must parse and be unique,
// accuracies must be finite in [0, 100]. Errors report the offending row.
BenchmarkTable load_benchmark(const std::string& path);

struct CorrelationReport {
  std::string variant;
  int runs = 0;
  int rows = 0;
  std::vector<double> rhos;
  double rho_mean = 0.0;
  double rho_std = 0.0;
  int invalid = 0;       // unscorable rows summed over runs
  double timing_ms = 0;  // never serialized: outputs must be seed-pure
};

// The seeds run `run` of a correlate call assigns to table row `row`.
// Scoring a row's cell with these seeds reproduces the score that entered
// the correlation, so any row can be re-examined standalone.
ScoreSeeds correlate_row_seeds(std::uint64_t seed, int run, int row,
                               double q = 1.0);

// Scores every table row with R independently seeded runs and correlates
// against accuracy. Within a run all rows share the same data sample and
// circular input so score differences reflect architectures alone. Rows
// scoring invalid are dropped from that run's correlation; a run losing more
// than half the table throws. Scoring fans out over `threads` workers;
// results are keyed by row index, so any thread count yields identical
// statistics.
CorrelationReport correlate(const BenchmarkTable& table,
                            const SpaceConfig& cfg, ProxyVariant variant,
                            int runs, std::uint64_t seed, int threads = 1,
                            int beta = 4, double q = 1.0, int kappa_grid = 1);

struct StabilityReport {
  std::string arch;
  int draws = 0;
  std::vector<double> scores;
  double mean = 0.0;
  double stddev = 0.0;  // sample std over valid scores
  int invalid = 0;
};

// Re-scores one architecture under `draws` paired (data sample, circular
// input) redraws with the weight init held fixed, isolating input
// randomness.
StabilityReport stability(const CellArch& arch, const SpaceConfig& cfg,
                          int draws, std::uint64_t seed, double q = 1.0);

// Per-layer inverse condition numbers of the qualifying layers, in forward
// order, as (layer_id, value) pairs.
std::vector<std::pair<int, double>> layer_profile(const NetworkSpec& net,
                                                  const TensorD& input);

}  // namespace dextr
