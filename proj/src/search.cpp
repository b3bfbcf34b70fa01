#include "dextr/search.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace dextr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

struct Member {
  CellArch arch;
  double score;
};

struct Evaluator {
  const SpaceConfig& space;
  const SearchConfig& cfg;
  ScoreSeeds seeds;
  SearchResult* out;

  Evaluator(const SpaceConfig& space_, const SearchConfig& cfg_,
            SearchResult* out_)
      : space(space_), cfg(cfg_), out(out_) {
    seeds = search_score_seeds(cfg);
  }

  // Constraint-checks and scores one candidate, appending its trace row.
  // Returns the score when the candidate is accepted.
  std::optional<double> consider(int step, const CellArch& arch) {
    TraceRow row;
    row.step = step;
    row.encoding = encode(arch);
    row.score = kNan;
    const NetworkSpec net = instantiate(arch, space, seeds.init);
    row.params = count_params(net);
    row.flops = count_flops(net);
    if ((cfg.max_params > 0 && row.params > cfg.max_params) ||
        (cfg.max_flops > 0 && row.flops > cfg.max_flops)) {
      ++out->rejected;
      out->trace.push_back(std::move(row));
      return std::nullopt;
    }
    const ProxyReport rep =
        score_arch(arch, space, cfg.variant, seeds, cfg.beta);
    ++out->evaluated;
    const double score = variant_value(rep, cfg.variant);
    if (!rep.valid || !std::isfinite(score)) {
      ++out->invalid;
      out->trace.push_back(std::move(row));
      return std::nullopt;
    }
    row.score = score;
    row.accepted = true;
    if (out->best_encoding.empty() || score > out->best_score) {
      out->best_score = score;
      out->best_encoding = row.encoding;
    }
    out->trace.push_back(std::move(row));
    return score;
  }
};

}  // namespace

ScoreSeeds search_score_seeds(const SearchConfig& cfg) {
  ScoreSeeds seeds;
  seeds.init = mix_seed(cfg.seed, 1);
  seeds.data = mix_seed(cfg.seed, 2);
  seeds.circular = mix_seed(cfg.seed, 3);
  Rng theta_rng(mix_seed(cfg.seed, 4));
  seeds.theta = theta_rng.uniform() * 6.283185307179586476925286766559;
  seeds.q = cfg.q;
  return seeds;
}

SearchResult run_search(const SpaceConfig& space, const SearchConfig& cfg) {
  if (cfg.budget < 1) throw std::invalid_argument("search: budget < 1");
  if (cfg.mode == SearchMode::kEvolution && cfg.population < 2)
    throw std::invalid_argument("search: population < 2");

  SearchResult res;
  res.best_score = kNan;
  Evaluator eval(space, cfg, &res);
  Rng rng(mix_seed(cfg.sample_seed ? cfg.sample_seed : cfg.seed, 0));

  int step = 0;
  if (cfg.mode == SearchMode::kRandom) {
    for (; step < cfg.budget; ++step)
      eval.consider(step, sample_arch(rng.next_u64()));
  } else {
    std::deque<Member> population;
    // Seed the population; constraint rejections burn budget like any other
    // candidate so random and evolution runs are comparable at equal budget.
    while (step < cfg.budget &&
           static_cast<int>(population.size()) < cfg.population) {
      const CellArch arch = sample_arch(rng.next_u64());
      const std::optional<double> score = eval.consider(step++, arch);
      if (score) population.push_back({arch, *score});
    }
    while (step < cfg.budget) {
      if (population.size() < 2) {
        // Population collapsed (everything rejected); refill randomly.
        const CellArch arch = sample_arch(rng.next_u64());
        const std::optional<double> score = eval.consider(step++, arch);
        if (score) population.push_back({arch, *score});
        continue;
      }
      const std::size_t i = static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(population.size())));
      const std::size_t j = static_cast<std::size_t>(
          rng.below(static_cast<std::uint64_t>(population.size())));
      const Member& parent = population[i].score >= population[j].score
                                 ? population[i]
                                 : population[j];
      const CellArch child = mutate(parent.arch, rng.next_u64());
      const std::optional<double> score = eval.consider(step++, child);
      if (score) {
        population.push_back({child, *score});
        if (static_cast<int>(population.size()) > cfg.population)
          population.pop_front();  // aging: retire the oldest
      }
    }
  }

  if (res.best_encoding.empty())
    throw std::runtime_error("search: no candidate scored valid");
  return res;
}

}  // namespace dextr
