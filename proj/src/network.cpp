#include "dextr/network.hpp"

#include <algorithm>
#include <numeric>

namespace dextr {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kNorm: return "norm";
    case LayerKind::kRelu: return "relu";
    case LayerKind::kAvgPool3x3: return "avg_pool";
    case LayerKind::kAvgPool2x2: return "avg_pool_2x2";
    case LayerKind::kGlobalPool: return "global_pool";
    case LayerKind::kLinear: return "linear";
    case LayerKind::kAdd: return "add";
    case LayerKind::kZero: return "zero";
  }
  return "?";
}

std::vector<int> subsample_channels(int channels, int beta,
                                    std::uint64_t seed) {
  const int take = std::min(beta, channels);
  std::vector<int> idx(static_cast<std::size_t>(channels));
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(seed);
  for (int i = 0; i < take; ++i) {
    const int j = i + static_cast<int>(rng.below(
                          static_cast<std::uint64_t>(channels - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(static_cast<std::size_t>(take));
  std::sort(idx.begin(), idx.end());
  return idx;
}

LayerRecord make_record(int layer_id, LayerKind kind, const Matrix& feat,
                        int full_channels, bool* spectra_ok) {
  LayerRecord rec;
  rec.layer_id = layer_id;
  rec.kind = kind;
  rec.channels = full_channels;
  rec.spatial = feat.cols;
  rec.qualifying = full_channels >= 2 && feat.cols >= 2;
  SpectrumResult sp = spectrum(feat);
  if (!sp.converged) {
    *spectra_ok = false;
    return rec;
  }
  rec.inv_cond = sp.inv_cond;
  rec.sigma_max = sp.sigma_max;
  return rec;
}

}  // namespace dextr
