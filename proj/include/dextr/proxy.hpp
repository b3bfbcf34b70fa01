#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dextr/archspace.hpp"

namespace dextr {

// A one-parameter closed curve of network inputs: theta traces a great
// circle of radius sqrt(n1*q) inside a random 2-plane, so every point has
// squared norm n1*q and the second derivative slot is exactly minus the
// value slot.
struct CircularInputConfig {
  int n1 = 0;        // flattened input dimension
  double q = 1.0;    // per-dimension energy
  double theta = 0.0;
  std::uint64_t seed = 0;
};

// The curve point as a jet tensor of shape [1, c, h, w] (c*h*w must equal
// n1). Throws for n1 < 2 or q <= 0.
TensorJ circular_input(const CircularInputConfig& cfg, int c, int h, int w);

// Extrinsic curvature of the output curve from its velocity (d1) and
// acceleration (d2): ||v||^-3 * sqrt(||v||^2 ||a||^2 - (v.a)^2). Returns 0
// when ||v||^2 < 1e-18 (stationary point) and NaN when any jet is
// non-finite. Throws if the output has fewer than 2 elements.
double curvature(const TensorJ& output);

// Seeded uniform [0,1) noise shaped like the configured network input.
TensorD make_data_sample(const SpaceConfig& cfg, std::uint64_t seed);

// log(1+a)*log(1+b) harmonic-style combination: a*b/(a+b), 0 when either
// term is 0. Symmetric, bounded by min(a, b).
double combine_terms(double cond_term, double curv_term);

struct ScoreSeeds {
  std::uint64_t init = 0;
  std::uint64_t data = 0;
  std::uint64_t circular = 0;
  double theta = 0.0;
  double q = 1.0;
};

struct ProxyReport {
  std::string arch;
  std::vector<LayerRecord> layers;
  double cond_sum = 0.0;
  double cond_term = 0.0;
  double kappa = 0.0;
  double curv_term = 0.0;
  double dextr = 0.0;
  std::int64_t params = 0;
  std::int64_t flops = 0;
  bool valid = false;
  ScoreSeeds seeds;
};

// Two passes over one instantiation: a plain-value forward of the data
// sample collects per-layer inverse condition numbers, then a jet forward of
// the circular input yields output curvature. dextr combines
// log(1 + sum_l inv_cond_l) with log(1 + kappa). kappa_grid > 1 averages
// kappa over an evenly spaced theta grid instead of the single theta.
// Invalid runs (non-finite activations, failed eigensolves, degenerate
// curvature) return valid=false with dextr = NaN.
ProxyReport dextr_score(const CellArch& arch, const SpaceConfig& cfg,
                        const TensorD& data_sample,
                        const CircularInputConfig& circ,
                        std::uint64_t init_seed, int kappa_grid = 1);

// Cheaper conditioning term: each layer's spectrum is taken over min(beta,
// channels) sampled channels and its inverse condition number is weighted by
// channels/beta. Coincides with dextr_score when every layer has exactly
// beta channels.
ProxyReport dextr_opt_score(const CellArch& arch, const SpaceConfig& cfg,
                            const TensorD& data_sample,
                            const CircularInputConfig& circ,
                            std::uint64_t init_seed, int beta,
                            std::uint64_t sample_seed, int kappa_grid = 1);

struct AblationScores {
  double cond_only = 0.0;
  double curv_only = 0.0;
  std::int64_t n_params = 0;
  std::int64_t flops = 0;
  bool valid = false;
};

// The two dextr sub-terms plus the trivial baselines, extracted from the
// same two passes.
AblationScores ablation_scores(const CellArch& arch, const SpaceConfig& cfg,
                               const TensorD& data_sample,
                               const CircularInputConfig& circ,
                               std::uint64_t init_seed);

enum class ProxyVariant {
  kDextr,
  kDextrOpt,
  kCondOnly,
  kCurvOnly,
  kParams,
  kFlops,
};

const char* variant_name(ProxyVariant v);
bool variant_from_name(const std::string& name, ProxyVariant* out);

// Reads the variant's scalar out of a report computed with the matching
// scorer (dextr_opt uses its own report; all others come from dextr_score).
double variant_value(const ProxyReport& rep, ProxyVariant v);

// One-call scorer used by the evaluation and search harnesses.
ProxyReport score_arch(const CellArch& arch, const SpaceConfig& cfg,
                       ProxyVariant v, const ScoreSeeds& seeds, int beta,
                       int kappa_grid = 1);

}  // namespace dextr
