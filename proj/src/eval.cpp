#include "dextr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <mutex>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

namespace dextr {

std::vector<double> fractional_ranks(const std::vector<double>& xs) {
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
    // Tie block spans sorted positions [i, j]; everyone gets the mean rank.
    const double r = 1.0 + 0.5 * (static_cast<double>(i) + j);
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("spearman: length mismatch");
  if (xs.size() < 2)
    throw std::invalid_argument("spearman: need at least 2 points");
  const std::vector<double> rx = fractional_ranks(xs);
  const std::vector<double> ry = fractional_ranks(ys);
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mx, dy = ry[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::domain_error("spearman: constant input, undefined correlation");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::min(1.0, std::max(-1.0, r));
}

BenchmarkTable load_benchmark(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open benchmark table: " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("benchmark table is empty: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "encoding,accuracy")
    throw std::runtime_error(
        "benchmark table must start with header 'encoding,accuracy'");
  BenchmarkTable table;
  std::set<std::string> seen;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error("row " + std::to_string(row) +
                               ": missing comma");
    BenchmarkRow r;
    r.encoding = line.substr(0, comma);
    const std::string acc = line.substr(comma + 1);
    try {
      std::size_t used = 0;
      r.accuracy = std::stod(acc, &used);
      if (used != acc.size()) throw std::invalid_argument(acc);
    } catch (const std::exception&) {
      throw std::runtime_error("row " + std::to_string(row) +
                               ": bad accuracy '" + acc + "'");
    }
    if (!std::isfinite(r.accuracy) || r.accuracy < 0.0 || r.accuracy > 100.0)
      throw std::runtime_error("row " + std::to_string(row) +
                               ": accuracy out of [0,100]");
    try {
      parse_encoding(r.encoding);
    } catch (const std::exception& e) {
      throw std::runtime_error("row " + std::to_string(row) + ": " + e.what());
    }
    if (!seen.insert(r.encoding).second)
      throw std::runtime_error("row " + std::to_string(row) +
                               ": duplicate encoding");
    table.rows.push_back(std::move(r));
  }
  return table;
}

namespace {

// Runs fn(i) for i in [0, n) over `threads` workers; exceptions are
// re-thrown on the caller thread.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return std::sqrt(s / (static_cast<double>(xs.size()) - 1.0));
}

}  // namespace

ScoreSeeds correlate_row_seeds(std::uint64_t seed, int run, int row,
                               double q) {
  const std::uint64_t run_seed = mix_seed(seed, static_cast<unsigned>(run));
  ScoreSeeds s;
  s.data = mix_seed(run_seed, 1);
  s.circular = mix_seed(run_seed, 2);
  s.q = q;
  Rng theta_rng(mix_seed(run_seed, 3));
  s.theta = theta_rng.uniform() * 6.283185307179586476925286766559;
  s.init = mix_seed(run_seed, 100 + static_cast<std::uint64_t>(row));
  return s;
}

CorrelationReport correlate(const BenchmarkTable& table,
                            const SpaceConfig& cfg, ProxyVariant variant,
                            int runs, std::uint64_t seed, int threads,
                            int beta, double q, int kappa_grid) {
  if (runs < 1) throw std::invalid_argument("correlate: runs < 1");
  const int n = static_cast<int>(table.rows.size());
  if (n < 2) throw std::invalid_argument("correlate: need at least 2 rows");

  std::vector<CellArch> archs;
  archs.reserve(static_cast<std::size_t>(n));
  std::vector<double> accuracy(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    archs.push_back(parse_encoding(table.rows[i].encoding));
    accuracy[static_cast<std::size_t>(i)] = table.rows[i].accuracy;
  }

  CorrelationReport rep;
  rep.variant = variant_name(variant);
  rep.runs = runs;
  rep.rows = n;
  const auto t0 = std::chrono::steady_clock::now();
  for (int run = 0; run < runs; ++run) {
    std::vector<double> score(static_cast<std::size_t>(n));
    std::vector<char> ok(static_cast<std::size_t>(n), 0);
    parallel_for(n, threads, [&](int i) {
      const ScoreSeeds s = correlate_row_seeds(seed, run, i, q);
      const ProxyReport r =
          score_arch(archs[static_cast<std::size_t>(i)], cfg, variant, s,
                     beta, kappa_grid);
      score[static_cast<std::size_t>(i)] = variant_value(r, variant);
      ok[static_cast<std::size_t>(i)] =
          r.valid && std::isfinite(score[static_cast<std::size_t>(i)]) ? 1 : 0;
    });
    std::vector<double> xs, ys;
    for (int i = 0; i < n; ++i) {
      if (ok[static_cast<std::size_t>(i)]) {
        xs.push_back(score[static_cast<std::size_t>(i)]);
        ys.push_back(accuracy[static_cast<std::size_t>(i)]);
      } else {
        ++rep.invalid;
      }
    }
    if (static_cast<int>(xs.size()) * 2 < n)
      throw std::runtime_error(
          "correlate: more than half the table was unscorable");
    rep.rhos.push_back(spearman(xs, ys));
  }
  const auto t1 = std::chrono::steady_clock::now();
  rep.timing_ms =
      std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count() /
      1000.0;
  double sum = 0.0;
  for (double r : rep.rhos) sum += r;
  rep.rho_mean = sum / static_cast<double>(rep.rhos.size());
  rep.rho_std = sample_std(rep.rhos, rep.rho_mean);
  return rep;
}

StabilityReport stability(const CellArch& arch, const SpaceConfig& cfg,
                          int draws, std::uint64_t seed, double q) {
  if (draws < 2) throw std::invalid_argument("stability: draws < 2");
  StabilityReport rep;
  rep.arch = encode(arch);
  rep.draws = draws;
  const std::uint64_t init_seed = mix_seed(seed, 0);
  for (int k = 0; k < draws; ++k) {
    ScoreSeeds s;
    s.init = init_seed;
    s.data = mix_seed(seed, 2 * static_cast<std::uint64_t>(k) + 1);
    s.circular = mix_seed(seed, 2 * static_cast<std::uint64_t>(k) + 2);
    Rng theta_rng(mix_seed(s.circular, 7));
    s.theta = theta_rng.uniform() * 6.283185307179586476925286766559;
    s.q = q;
    const ProxyReport r = score_arch(arch, cfg, ProxyVariant::kDextr, s, 0);
    if (r.valid)
      rep.scores.push_back(r.dextr);
    else
      ++rep.invalid;
  }
  if (rep.scores.size() < 2)
    throw std::runtime_error("stability: too few valid scores");
  double sum = 0.0;
  for (double x : rep.scores) sum += x;
  rep.mean = sum / static_cast<double>(rep.scores.size());
  rep.stddev = sample_std(rep.scores, rep.mean);
  return rep;
}

std::vector<std::pair<int, double>> layer_profile(const NetworkSpec& net,
                                                  const TensorD& input) {
  const ForwardResult<double> res = forward(net, input);
  if (!res.finite || !res.spectra_ok)
    throw std::runtime_error("layer_profile: forward pass was not finite");
  std::vector<std::pair<int, double>> out;
  for (const LayerRecord& r : res.records)
    if (r.qualifying) out.emplace_back(r.layer_id, r.inv_cond);
  return out;
}

}  // namespace dextr
