#include "dextr/proxy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dextr {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

TensorJ circular_input(const CircularInputConfig& cfg, int c, int h, int w) {
  const std::int64_t n1 = std::int64_t(c) * h * w;
  if (cfg.n1 < 2) throw std::invalid_argument("circular_input: n1 < 2");
  if (cfg.q <= 0.0) throw std::invalid_argument("circular_input: q <= 0");
  if (n1 != cfg.n1)
    throw std::invalid_argument("circular_input: shape does not match n1");

  Rng rng(cfg.seed);
  std::vector<double> o0(static_cast<std::size_t>(n1));
  std::vector<double> o1(static_cast<std::size_t>(n1));
  // Gram-Schmidt on two Gaussian draws; retry the (measure-zero) degenerate
  // draws so the plane is always well defined.
  for (;;) {
    for (double& v : o0) v = rng.normal();
    for (double& v : o1) v = rng.normal();
    double n0 = 0.0;
    for (double v : o0) n0 += v * v;
    n0 = std::sqrt(n0);
    if (n0 < 1e-12) continue;
    for (double& v : o0) v /= n0;
    double dot = 0.0;
    for (std::int64_t i = 0; i < n1; ++i) dot += o0[i] * o1[i];
    double nrm = 0.0;
    for (std::int64_t i = 0; i < n1; ++i) {
      o1[i] -= dot * o0[i];
      nrm += o1[i] * o1[i];
    }
    nrm = std::sqrt(nrm);
    if (nrm < 1e-12) continue;
    for (double& v : o1) v /= nrm;
    break;
  }

  const double radius = std::sqrt(static_cast<double>(cfg.n1) * cfg.q);
  const double ct = std::cos(cfg.theta);
  const double st = std::sin(cfg.theta);
  TensorJ out(1, c, h, w);
  for (std::int64_t i = 0; i < n1; ++i) {
    Jet2& j = out.data[static_cast<std::size_t>(i)];
    j.v = radius * (o0[i] * ct + o1[i] * st);
    j.d1 = radius * (-o0[i] * st + o1[i] * ct);
    j.d2 = -j.v;
  }
  return out;
}

double curvature(const TensorJ& output) {
  if (output.numel() < 2)
    throw std::invalid_argument("curvature: need at least 2 output elements");
  double vv = 0.0, aa = 0.0, va = 0.0;
  for (const Jet2& j : output.data) {
    if (!scalar_finite(j)) return kNan;
    vv += j.d1 * j.d1;
    aa += j.d2 * j.d2;
    va += j.d1 * j.d2;
  }
  if (vv < 1e-18) return 0.0;
  const double radicand = vv * aa - va * va;
  if (radicand <= 0.0) return 0.0;  // clamp round-off on straight segments
  return std::sqrt(radicand) / (vv * std::sqrt(vv));
}

TensorD make_data_sample(const SpaceConfig& cfg, std::uint64_t seed) {
  TensorD t(1, cfg.in_channels, cfg.in_h, cfg.in_w);
  Rng rng(seed);
  for (double& v : t.data) v = rng.uniform();
  return t;
}

double combine_terms(double cond_term, double curv_term) {
  if (!(cond_term > 0.0) || !(curv_term > 0.0)) return 0.0;
  return cond_term * curv_term / (cond_term + curv_term);
}

namespace {

void mark_invalid(ProxyReport* rep) {
  rep->valid = false;
  rep->dextr = kNan;
}

// Shared body of dextr_score and dextr_opt_score; beta <= 0 disables channel
// subsampling.
ProxyReport score_impl(const CellArch& arch, const SpaceConfig& cfg,
                       const TensorD& data_sample,
                       const CircularInputConfig& circ,
                       std::uint64_t init_seed, int beta,
                       std::uint64_t sample_seed, int kappa_grid) {
  if (kappa_grid < 1) throw std::invalid_argument("kappa_grid < 1");
  const NetworkSpec net = instantiate(arch, cfg, init_seed);

  ProxyReport rep;
  rep.arch = net.arch;
  rep.params = count_params(net);
  rep.flops = count_flops(net);
  rep.seeds = ScoreSeeds{init_seed, 0, circ.seed, circ.theta, circ.q};
  rep.cond_sum = rep.cond_term = rep.kappa = rep.curv_term = kNan;

  ForwardOptions opt;
  opt.record = true;
  if (beta > 0) {
    opt.subsample_beta = beta;
    opt.subsample_seed = sample_seed;
  }
  ForwardResult<double> pass1 = forward(net, data_sample, opt);
  if (!pass1.finite || !pass1.spectra_ok) {
    mark_invalid(&rep);
    return rep;
  }
  rep.layers = pass1.records;
  double cond_sum = 0.0;
  for (const LayerRecord& r : rep.layers) {
    if (!r.qualifying) continue;
    if (beta > 0)
      cond_sum += static_cast<double>(r.channels) / beta * r.inv_cond;
    else
      cond_sum += r.inv_cond;
  }
  rep.cond_sum = cond_sum;
  rep.cond_term = std::log1p(cond_sum);

  ForwardOptions no_record;
  no_record.record = false;
  double kappa_acc = 0.0;
  for (int g = 0; g < kappa_grid; ++g) {
    CircularInputConfig cg = circ;
    cg.theta = circ.theta + kTwoPi * g / kappa_grid;
    const TensorJ input =
        circular_input(cg, cfg.in_channels, cfg.in_h, cfg.in_w);
    ForwardResult<Jet2> pass2 = run_program(net.program, net.weights, input,
                                            no_record);
    if (!pass2.finite) {
      mark_invalid(&rep);
      return rep;
    }
    const double k = curvature(pass2.output);
    if (std::isnan(k)) {
      mark_invalid(&rep);
      return rep;
    }
    kappa_acc += k;
  }
  rep.kappa = kappa_acc / kappa_grid;
  rep.curv_term = std::log1p(rep.kappa);
  rep.dextr = combine_terms(rep.cond_term, rep.curv_term);
  rep.valid = true;
  return rep;
}

}  // namespace

ProxyReport dextr_score(const CellArch& arch, const SpaceConfig& cfg,
                        const TensorD& data_sample,
                        const CircularInputConfig& circ,
                        std::uint64_t init_seed, int kappa_grid) {
  return score_impl(arch, cfg, data_sample, circ, init_seed, 0, 0, kappa_grid);
}

ProxyReport dextr_opt_score(const CellArch& arch, const SpaceConfig& cfg,
                            const TensorD& data_sample,
                            const CircularInputConfig& circ,
                            std::uint64_t init_seed, int beta,
                            std::uint64_t sample_seed, int kappa_grid) {
  if (beta < 2) throw std::invalid_argument("dextr_opt_score: beta < 2");
  return score_impl(arch, cfg, data_sample, circ, init_seed, beta, sample_seed,
                    kappa_grid);
}

AblationScores ablation_scores(const CellArch& arch, const SpaceConfig& cfg,
                               const TensorD& data_sample,
                               const CircularInputConfig& circ,
                               std::uint64_t init_seed) {
  const ProxyReport rep =
      dextr_score(arch, cfg, data_sample, circ, init_seed);
  AblationScores ab;
  ab.cond_only = rep.cond_term;
  ab.curv_only = rep.curv_term;
  ab.n_params = rep.params;
  ab.flops = rep.flops;
  ab.valid = rep.valid;
  return ab;
}

const char* variant_name(ProxyVariant v) {
  switch (v) {
    case ProxyVariant::kDextr: return "dextr";
    case ProxyVariant::kDextrOpt: return "dextr_opt";
    case ProxyVariant::kCondOnly: return "cond_only";
    case ProxyVariant::kCurvOnly: return "curv_only";
    case ProxyVariant::kParams: return "params";
    case ProxyVariant::kFlops: return "flops";
  }
  return "?";
}

bool variant_from_name(const std::string& name, ProxyVariant* out) {
  for (ProxyVariant v :
       {ProxyVariant::kDextr, ProxyVariant::kDextrOpt, ProxyVariant::kCondOnly,
        ProxyVariant::kCurvOnly, ProxyVariant::kParams, ProxyVariant::kFlops})
    if (name == variant_name(v)) {
      *out = v;
      return true;
    }
  return false;
}

double variant_value(const ProxyReport& rep, ProxyVariant v) {
  switch (v) {
    case ProxyVariant::kDextr:
    case ProxyVariant::kDextrOpt:
      return rep.dextr;
    case ProxyVariant::kCondOnly:
      return rep.cond_term;
    case ProxyVariant::kCurvOnly:
      return rep.curv_term;
    case ProxyVariant::kParams:
      return static_cast<double>(rep.params);
    case ProxyVariant::kFlops:
      return static_cast<double>(rep.flops);
  }
  return kNan;
}

ProxyReport score_arch(const CellArch& arch, const SpaceConfig& cfg,
                       ProxyVariant v, const ScoreSeeds& seeds, int beta,
                       int kappa_grid) {
  CircularInputConfig circ;
  circ.n1 = cfg.in_channels * cfg.in_h * cfg.in_w;
  circ.q = seeds.q;
  circ.theta = seeds.theta;
  circ.seed = seeds.circular;

  if (v == ProxyVariant::kParams || v == ProxyVariant::kFlops) {
    // Counting needs no forward passes.
    const NetworkSpec net = instantiate(arch, cfg, seeds.init);
    ProxyReport rep;
    rep.arch = net.arch;
    rep.params = count_params(net);
    rep.flops = count_flops(net);
    rep.cond_sum = rep.cond_term = rep.kappa = rep.curv_term = kNan;
    rep.dextr = kNan;
    rep.valid = true;
    rep.seeds = seeds;
    return rep;
  }

  const TensorD data = make_data_sample(cfg, seeds.data);
  ProxyReport rep;
  if (v == ProxyVariant::kDextrOpt)
    rep = dextr_opt_score(arch, cfg, data, circ, seeds.init, beta,
                          mix_seed(seeds.data, circ.seed), kappa_grid);
  else
    rep = dextr_score(arch, cfg, data, circ, seeds.init, kappa_grid);
  rep.seeds = seeds;
  return rep;
}

}  // namespace dextr
