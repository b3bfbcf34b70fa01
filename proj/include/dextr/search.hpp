#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dextr/proxy.hpp"

namespace dextr {

enum class SearchMode { kRandom, kEvolution };

struct SearchConfig {
  SearchMode mode = SearchMode::kRandom;
  int budget = 200;      // candidates generated (scored or rejected)
  int population = 32;   // evolution only
  std::uint64_t seed = 0;
  // Candidate sampling stream; 0 reuses `seed`. Varying only this repeats a
  // search against the same frozen scoring, so runs stay comparable.
  std::uint64_t sample_seed = 0;
  ProxyVariant variant = ProxyVariant::kDextr;
  int beta = 4;
  double q = 1.0;
  std::int64_t max_params = 0;  // 0 disables the constraint
  std::int64_t max_flops = 0;
};

struct TraceRow {
  int step = 0;
  std::string encoding;
  double score = 0.0;  // NaN when not scored or invalid
  std::int64_t params = 0;
  std::int64_t flops = 0;
  bool accepted = false;  // passed constraints and scored valid
};

struct SearchResult {
  std::string best_encoding;
  double best_score = 0.0;
  int evaluated = 0;   // scored candidates
  int rejected = 0;    // constraint failures
  int invalid = 0;     // scored but invalid
  std::vector<TraceRow> trace;
};

// The frozen per-candidate scoring seeds a search run derives from its seed.
// Scoring any cell with these seeds reproduces the score the search saw.
ScoreSeeds search_score_seeds(const SearchConfig& cfg);

// Zero-shot search over the cell space. All candidates in one run share the
// same data sample, circular input and weight seed, so scores are comparable
// across candidates. Random mode draws `budget` independent cells.
// Evolution mode keeps an aging population: seed it with random cells, then
// repeat { tournament of 2, mutate one edge of the winner, drop the oldest }
// until the budget is spent. Throws when no candidate scores valid.
SearchResult run_search(const SpaceConfig& space, const SearchConfig& cfg);

}  // namespace dextr
