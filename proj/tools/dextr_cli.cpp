#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dextr/report_json.hpp"

using namespace dextr;

namespace {

// Exit codes: 0 success, 1 usage, 2 the requested score was invalid,
// 3 input/output data problems.
constexpr int kExitUsage = 1;
constexpr int kExitInvalidScore = 2;
constexpr int kExitData = 3;

using Clock = std::chrono::steady_clock;

struct Timer {
  Clock::time_point t0 = Clock::now();
  // Wall time goes to stderr only; stdout stays seed-pure.
  ~Timer() {
    const double ms = std::chrono::duration_cast<std::chrono::microseconds>(
                          Clock::now() - t0)
                          .count() /
                      1000.0;
    std::fprintf(stderr, "timing_ms=%.1f\n", ms);
  }
};

void add_space_options(CLI::App* cmd, SpaceConfig* cfg) {
  cmd->add_option("--stem-channels", cfg->stem_channels,
                  "Channels out of the stem conv")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--cells-per-stage", cfg->cells_per_stage,
                  "Cell repeats per stage")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--stages", cfg->num_stages, "Number of stages")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--classes", cfg->num_classes, "Classifier outputs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--in-channels", cfg->in_channels, "Input channels")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--in-h", cfg->in_h, "Input height")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--in-w", cfg->in_w, "Input width")
      ->check(CLI::PositiveNumber);
}

void emit(const ordered_json& j, const std::string& output) {
  const std::string text = j.dump(2) + "\n";
  if (output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(output);
  if (!out) throw std::runtime_error("cannot write output file: " + output);
  out << text;
}

// Raw tensor file: u32 ndim, u32 extents[ndim], float64 payload, all
// little-endian. ndim 3 reads as [c,h,w]; ndim 4 requires a leading 1.
TensorD read_raw_tensor(const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "raw tensor reader assumes a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open tensor file: " + path);
  std::uint32_t ndim = 0;
  in.read(reinterpret_cast<char*>(&ndim), sizeof(ndim));
  if (!in || ndim < 3 || ndim > 4)
    throw std::runtime_error("tensor file must have 3 or 4 dimensions: " +
                             path);
  std::uint32_t ext[4] = {1, 1, 1, 1};
  const int skip = 4 - static_cast<int>(ndim);
  in.read(reinterpret_cast<char*>(ext + skip),
          static_cast<std::streamsize>(ndim * sizeof(std::uint32_t)));
  if (!in) throw std::runtime_error("truncated tensor header: " + path);
  if (ext[0] != 1)
    throw std::runtime_error("tensor batch dimension must be 1: " + path);
  for (std::uint32_t e : ext)
    if (e == 0 || e > (1u << 20))
      throw std::runtime_error("tensor extent out of range: " + path);
  TensorD t(static_cast<int>(ext[0]), static_cast<int>(ext[1]),
            static_cast<int>(ext[2]), static_cast<int>(ext[3]));
  in.read(reinterpret_cast<char*>(t.data.data()),
          static_cast<std::streamsize>(t.data.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated tensor payload: " + path);
  in.peek();
  if (!in.eof())
    throw std::runtime_error("trailing bytes after tensor payload: " + path);
  for (double v : t.data)
    if (!std::isfinite(v))
      throw std::runtime_error("tensor payload must be finite: " + path);
  return t;
}

double resolve_theta(const std::string& theta, std::uint64_t seed) {
  if (theta == "random") {
    Rng rng(mix_seed(seed, 4));
    return rng.uniform() * 6.283185307179586476925286766559;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(theta, &used);
    if (used == theta.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw CLI::ValidationError("--theta", "expected a number or 'random'");
}

ProxyVariant resolve_variant(const std::string& name) {
  ProxyVariant v;
  if (!variant_from_name(name, &v))
    throw CLI::ValidationError(
        "--variant",
        "one of dextr, dextr_opt, cond_only, curv_only, params, flops");
  return v;
}

struct ScoreArgs {
  std::string arch;
  std::string variant = "dextr";
  std::string theta = "random";
  std::string input = "random";
  std::string output;
  std::uint64_t seed = 42;
  int beta = 4;
  int kappa_grid = 1;
  double q = 1.0;
  bool layers = false;
  SpaceConfig space;
};

int run_score(const ScoreArgs& a) {
  const CellArch arch = parse_encoding(a.arch);
  const ProxyVariant variant = resolve_variant(a.variant);

  SearchConfig seed_cfg;
  seed_cfg.seed = a.seed;
  seed_cfg.q = a.q;
  ScoreSeeds seeds = search_score_seeds(seed_cfg);
  seeds.theta = resolve_theta(a.theta, a.seed);

  Timer timer;
  ProxyReport rep;
  if (a.input == "random") {
    rep = score_arch(arch, a.space, variant, seeds, a.beta, a.kappa_grid);
  } else {
    const TensorD data = read_raw_tensor(a.input);
    if (data.c != a.space.in_channels || data.h != a.space.in_h ||
        data.w != a.space.in_w)
      throw std::runtime_error("tensor shape does not match the network input");
    CircularInputConfig circ;
    circ.n1 = a.space.in_channels * a.space.in_h * a.space.in_w;
    circ.q = a.q;
    circ.theta = seeds.theta;
    circ.seed = seeds.circular;
    if (variant == ProxyVariant::kDextrOpt)
      rep = dextr_opt_score(arch, a.space, data, circ, seeds.init, a.beta,
                            mix_seed(seeds.data, seeds.circular),
                            a.kappa_grid);
    else
      rep = dextr_score(arch, a.space, data, circ, seeds.init, a.kappa_grid);
    rep.seeds = seeds;
  }

  ordered_json j = report_json(rep);
  j["score"] = variant_value(rep, variant);
  j["variant"] = variant_name(variant);
  if (!a.layers) j.erase("layers");
  emit(j, a.output);
  return rep.valid ? 0 : kExitInvalidScore;
}

struct CorrelateArgs {
  std::string table;
  std::string variant = "dextr";
  std::string output;
  std::uint64_t seed = 42;
  int runs = 3;
  int threads = 1;
  int beta = 4;
  int kappa_grid = 1;
  double q = 1.0;
  SpaceConfig space;
};

int run_correlate(const CorrelateArgs& a) {
  const BenchmarkTable table = load_benchmark(a.table);
  const ProxyVariant variant = resolve_variant(a.variant);
  Timer timer;
  const CorrelationReport rep =
      correlate(table, a.space, variant, a.runs, a.seed, a.threads, a.beta,
                a.q, a.kappa_grid);
  emit(report_json(rep), a.output);
  return 0;
}

struct SearchArgs {
  std::string mode = "random";
  std::string variant = "dextr";
  std::string output;
  std::string trace;
  std::uint64_t seed = 42;
  std::uint64_t sample_seed = 0;
  int budget = 200;
  int population = 32;
  int beta = 4;
  double q = 1.0;
  std::int64_t max_params = 0;
  std::int64_t max_flops = 0;
  SpaceConfig space;
};

int run_search_cmd(const SearchArgs& a) {
  SearchConfig cfg;
  if (a.mode == "random") {
    cfg.mode = SearchMode::kRandom;
  } else if (a.mode == "evolution") {
    cfg.mode = SearchMode::kEvolution;
  } else {
    throw CLI::ValidationError("--mode", "one of random, evolution");
  }
  cfg.budget = a.budget;
  cfg.population = a.population;
  cfg.seed = a.seed;
  cfg.sample_seed = a.sample_seed;
  cfg.variant = resolve_variant(a.variant);
  cfg.beta = a.beta;
  cfg.q = a.q;
  cfg.max_params = a.max_params;
  cfg.max_flops = a.max_flops;

  Timer timer;
  const SearchResult res = run_search(a.space, cfg);
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw std::runtime_error("cannot write trace file: " + a.trace);
    out << "step,encoding,score,params,flops,accepted\n";
    for (const TraceRow& row : res.trace) {
      char score_buf[32];
      std::snprintf(score_buf, sizeof(score_buf), "%.17g", row.score);
      out << row.step << ',' << row.encoding << ',' << score_buf << ','
          << row.params << ',' << row.flops << ',' << (row.accepted ? 1 : 0)
          << '\n';
    }
  }
  emit(report_json(res), a.output);
  return 0;
}

struct StabilityArgs {
  std::string arch;
  std::string output;
  std::uint64_t seed = 42;
  int draws = 10;
  double q = 1.0;
  SpaceConfig space;
};

int run_stability(const StabilityArgs& a) {
  const CellArch arch = parse_encoding(a.arch);
  Timer timer;
  const StabilityReport rep = stability(arch, a.space, a.draws, a.seed, a.q);
  emit(report_json(rep), a.output);
  return 0;
}

struct ProfileArgs {
  std::string arch;
  std::string input = "random";
  std::string output;
  std::uint64_t seed = 42;
  SpaceConfig space;
};

int run_profile(const ProfileArgs& a) {
  const CellArch arch = parse_encoding(a.arch);
  const NetworkSpec net = instantiate(arch, a.space, mix_seed(a.seed, 1));
  TensorD data;
  if (a.input == "random") {
    data = make_data_sample(a.space, mix_seed(a.seed, 2));
  } else {
    data = read_raw_tensor(a.input);
    if (data.c != a.space.in_channels || data.h != a.space.in_h ||
        data.w != a.space.in_w)
      throw std::runtime_error("tensor shape does not match the network input");
  }
  Timer timer;
  const auto profile = layer_profile(net, data);
  std::string text = "layer_id,inv_cond\n";
  for (const auto& [id, inv_cond] : profile) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%d,%.17g\n", id, inv_cond);
    text += buf;
  }
  if (a.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(a.output);
    if (!out)
      throw std::runtime_error("cannot write output file: " + a.output);
    out << text;
  }
  return 0;
}

struct TheoryArgs {
  std::string experiment = "convergence";
  std::string output;
  std::uint64_t seed = 2024;
  int sets = 30;
  int width = 256;
  int samples = 16;
  int dim = 20;
  int test_samples = 128;
  double gamma = 0.1;
  int steps = 4000;
  double tau = 0.01;
};

int run_theory(const TheoryArgs& a) {
  Timer timer;
  if (a.experiment == "convergence") {
    const CohortReport rep = convergence_experiment(
        a.sets, a.width, a.samples, a.dim, a.gamma, a.steps, a.tau, a.seed);
    emit(report_json(rep, "rho_speed"), a.output);
    return 0;
  }
  if (a.experiment == "generalisation") {
    const CohortReport rep =
        generalisation_experiment(a.sets, a.width, a.samples, a.dim,
                                  a.test_samples, a.gamma, a.steps, a.seed);
    emit(report_json(rep, "rho_generalisation"), a.output);
    return 0;
  }
  throw CLI::ValidationError("--experiment",
                             "one of convergence, generalisation");
}

struct LemmaArgs {
  std::string output;
  std::uint64_t seed = 1234;
  int nets = 100;
  SpaceConfig space;
};

int run_lemma(const LemmaArgs& a) {
  Timer timer;
  const LemmaReport rep = lemma1_check(a.space, a.nets, a.seed);
  emit(report_json(rep), a.output);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Training-free architecture scoring over a cell search space"};
  app.require_subcommand(1);

  ScoreArgs score_args;
  CLI::App* score = app.add_subcommand(
      "score", "Score one architecture from its cell encoding");
  score->add_option("--arch", score_args.arch, "Cell encoding string")
      ->required();
  score->add_option("--variant", score_args.variant,
                    "dextr, dextr_opt, cond_only, curv_only, params, flops");
  score->add_option("--seed", score_args.seed, "Master seed");
  score->add_option("--beta", score_args.beta,
                    "Channel sample size for dextr_opt");
  score->add_option("--q", score_args.q, "Per-dimension input energy");
  score->add_option("--theta", score_args.theta,
                    "Curve position: a number or 'random'");
  score->add_option("--kappa-grid", score_args.kappa_grid,
                    "Average curvature over this many curve positions")
      ->check(CLI::PositiveNumber);
  score->add_option("--input", score_args.input,
                    "'random' or a raw tensor file for the data pass");
  score->add_flag("--layers", score_args.layers,
                  "Include per-layer records in the report");
  score->add_option("--output", score_args.output,
                    "Write JSON here instead of stdout");
  add_space_options(score, &score_args.space);

  CorrelateArgs corr_args;
  CLI::App* corr = app.add_subcommand(
      "correlate", "Rank-correlate scores against a benchmark table");
  corr->add_option("--table", corr_args.table, "CSV of encoding,accuracy")
      ->required();
  corr->add_option("--variant", corr_args.variant, "Scoring variant");
  corr->add_option("--runs", corr_args.runs, "Independently seeded runs")
      ->check(CLI::PositiveNumber);
  corr->add_option("--seed", corr_args.seed, "Master seed");
  corr->add_option("--threads", corr_args.threads,
                   "Worker threads (statistics are thread-count invariant)")
      ->check(CLI::PositiveNumber);
  corr->add_option("--beta", corr_args.beta,
                   "Channel sample size for dextr_opt");
  corr->add_option("--q", corr_args.q, "Per-dimension input energy");
  corr->add_option("--kappa-grid", corr_args.kappa_grid,
                   "Curvature grid size")
      ->check(CLI::PositiveNumber);
  corr->add_option("--output", corr_args.output,
                   "Write JSON here instead of stdout");
  add_space_options(corr, &corr_args.space);

  SearchArgs search_args;
  CLI::App* search = app.add_subcommand(
      "search", "Zero-shot search over the full cell space");
  search->add_option("--mode", search_args.mode, "random or evolution");
  search->add_option("--budget", search_args.budget,
                     "Candidates generated, scored or not")
      ->check(CLI::PositiveNumber);
  search->add_option("--population", search_args.population,
                     "Evolution population size");
  search->add_option("--seed", search_args.seed,
                     "Master seed (freezes the scoring)");
  search->add_option("--sample-seed", search_args.sample_seed,
                     "Candidate stream seed; 0 reuses --seed");
  search->add_option("--variant", search_args.variant, "Scoring variant");
  search->add_option("--beta", search_args.beta,
                     "Channel sample size for dextr_opt");
  search->add_option("--q", search_args.q, "Per-dimension input energy");
  search->add_option("--max-params", search_args.max_params,
                     "Reject candidates above this parameter count");
  search->add_option("--max-flops", search_args.max_flops,
                     "Reject candidates above this FLOP count");
  search->add_option("--trace", search_args.trace,
                     "Write the per-candidate trace CSV here");
  search->add_option("--output", search_args.output,
                     "Write JSON here instead of stdout");
  add_space_options(search, &search_args.space);

  StabilityArgs stab_args;
  CLI::App* stab = app.add_subcommand(
      "stability", "Re-score one cell under paired input redraws");
  stab->add_option("--arch", stab_args.arch, "Cell encoding string")
      ->required();
  stab->add_option("--draws", stab_args.draws, "Paired redraws")
      ->check(CLI::Range(2, 1000000));
  stab->add_option("--seed", stab_args.seed, "Master seed");
  stab->add_option("--q", stab_args.q, "Per-dimension input energy");
  stab->add_option("--output", stab_args.output,
                   "Write JSON here instead of stdout");
  add_space_options(stab, &stab_args.space);

  ProfileArgs prof_args;
  CLI::App* prof = app.add_subcommand(
      "profile", "Per-layer conditioning of one cell network");
  prof->add_option("--arch", prof_args.arch, "Cell encoding string")
      ->required();
  prof->add_option("--seed", prof_args.seed, "Master seed");
  prof->add_option("--input", prof_args.input,
                   "'random' or a raw tensor file");
  prof->add_option("--output", prof_args.output,
                   "Write CSV here instead of stdout");
  add_space_options(prof, &prof_args.space);

  TheoryArgs theory_args;
  CLI::App* theory = app.add_subcommand(
      "theory", "Two-layer cohort experiments on conditioning");
  theory->add_option("--experiment", theory_args.experiment,
                     "convergence or generalisation");
  theory->add_option("--sets", theory_args.sets, "Cohorts to train")
      ->check(CLI::Range(5, 1000000));
  theory->add_option("--width", theory_args.width, "Hidden width")
      ->check(CLI::PositiveNumber);
  theory->add_option("--samples", theory_args.samples,
                     "Training points per cohort")
      ->check(CLI::PositiveNumber);
  theory->add_option("--dim", theory_args.dim, "Input dimension")
      ->check(CLI::PositiveNumber);
  theory->add_option("--test-samples", theory_args.test_samples,
                     "Held-out points (generalisation)")
      ->check(CLI::PositiveNumber);
  theory->add_option("--gamma", theory_args.gamma, "Step size");
  theory->add_option("--steps", theory_args.steps, "Training steps")
      ->check(CLI::PositiveNumber);
  theory->add_option("--tau", theory_args.tau,
                     "Loss fraction defining convergence");
  theory->add_option("--seed", theory_args.seed, "Master seed");
  theory->add_option("--output", theory_args.output,
                     "Write JSON here instead of stdout");

  LemmaArgs lemma_args;
  CLI::App* lemma = app.add_subcommand(
      "lemma-check", "Audit dominant singular values across sampled nets");
  lemma->add_option("--nets", lemma_args.nets, "Networks to sample")
      ->check(CLI::PositiveNumber);
  lemma->add_option("--seed", lemma_args.seed, "Master seed");
  lemma->add_option("--output", lemma_args.output,
                    "Write JSON here instead of stdout");
  add_space_options(lemma, &lemma_args.space);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (score->parsed()) return run_score(score_args);
    if (corr->parsed()) return run_correlate(corr_args);
    if (search->parsed()) return run_search_cmd(search_args);
    if (stab->parsed()) return run_stability(stab_args);
    if (prof->parsed()) return run_profile(prof_args);
    if (theory->parsed()) return run_theory(theory_args);
    if (lemma->parsed()) return run_lemma(lemma_args);
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
