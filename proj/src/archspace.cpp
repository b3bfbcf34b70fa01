#include "dextr/archspace.hpp"

#include <cmath>
#include <stdexcept>

namespace dextr {

namespace {

const char* const kOpNames[kNumCellOps] = {
    "none", "skip_connect", "nor_conv_1x1", "nor_conv_3x3", "avg_pool_3x3"};

// Edge order (0->1), (0->2), (1->2), (0->3), (1->3), (2->3): group g holds
// the edges targeting node g+1, sources ascending.
constexpr int kEdgeSource[kNumEdges] = {0, 0, 1, 0, 1, 2};

[[noreturn]] void parse_fail(const std::string& what, std::size_t offset) {
  throw std::invalid_argument("bad cell encoding: " + what + " at byte " +
                              std::to_string(offset));
}

}  // namespace

const char* cell_op_name(CellOp op) {
  return kOpNames[static_cast<int>(op)];
}

std::string encode(const CellArch& arch) {
  std::string s;
  int e = 0;
  for (int group = 0; group < 3; ++group) {
    if (group > 0) s += '+';
    s += '|';
    for (int src = 0; src <= group; ++src, ++e) {
      s += kOpNames[static_cast<int>(arch.edges[e])];
      s += '~';
      s += static_cast<char>('0' + kEdgeSource[e]);
      s += '|';
    }
  }
  return s;
}

CellArch parse_encoding(const std::string& s) {
  CellArch arch;
  std::size_t pos = 0;
  int e = 0;
  for (int group = 0; group < 3; ++group) {
    if (group > 0) {
      if (pos >= s.size() || s[pos] != '+') parse_fail("expected '+'", pos);
      ++pos;
    }
    if (pos >= s.size() || s[pos] != '|') parse_fail("expected '|'", pos);
    ++pos;
    for (int src = 0; src <= group; ++src, ++e) {
      const std::size_t tag_start = pos;
      const std::size_t tilde = s.find('~', pos);
      if (tilde == std::string::npos) parse_fail("expected '~'", pos);
      const std::string tag = s.substr(tag_start, tilde - tag_start);
      int op = -1;
      for (int k = 0; k < kNumCellOps; ++k)
        if (tag == kOpNames[k]) op = k;
      if (op < 0)
        throw std::invalid_argument("bad cell encoding: unknown op tag '" +
                                    tag + "' at byte " +
                                    std::to_string(tag_start));
      pos = tilde + 1;
      if (pos >= s.size() || s[pos] != static_cast<char>('0' + src))
        parse_fail("expected source " + std::to_string(src), pos);
      ++pos;
      if (pos >= s.size() || s[pos] != '|') parse_fail("expected '|'", pos);
      ++pos;
      arch.edges[e] = static_cast<CellOp>(op);
    }
  }
  if (pos != s.size()) parse_fail("trailing characters", pos);
  return arch;
}

CellArch sample_arch(std::uint64_t seed) {
  Rng rng(seed);
  CellArch arch;
  for (int e = 0; e < kNumEdges; ++e)
    arch.edges[e] = static_cast<CellOp>(rng.below(kNumCellOps));
  return arch;
}

CellArch mutate(const CellArch& arch, std::uint64_t seed) {
  Rng rng(seed);
  CellArch out = arch;
  const int e = static_cast<int>(rng.below(kNumEdges));
  const int shift = 1 + static_cast<int>(rng.below(kNumCellOps - 1));
  out.edges[e] = static_cast<CellOp>(
      (static_cast<int>(arch.edges[e]) + shift) % kNumCellOps);
  return out;
}

std::vector<CellArch> enumerate_space(int max) {
  if (max < 0 || max > kSpaceSize)
    throw std::invalid_argument("enumerate_space: max out of range");
  std::vector<CellArch> out;
  out.reserve(static_cast<std::size_t>(max));
  for (int i = 0; i < max; ++i) {
    CellArch arch;
    int rem = i;
    for (int e = 0; e < kNumEdges; ++e) {
      arch.edges[e] = static_cast<CellOp>(rem % kNumCellOps);
      rem /= kNumCellOps;
    }
    out.push_back(arch);
  }
  return out;
}

namespace {

// Incremental program builder: tracks register shapes and the weight shapes
// to draw later, so compilation never touches an RNG.
struct Builder {
  Program prog;
  std::vector<std::array<int, 3>> shape;  // per register: c, h, w
  std::vector<std::array<int, 4>> weight_shape;
  std::vector<bool> weight_is_bias;

  explicit Builder(const SpaceConfig& cfg) {
    prog.in_c = cfg.in_channels;
    prog.in_h = cfg.in_h;
    prog.in_w = cfg.in_w;
    shape.push_back({cfg.in_channels, cfg.in_h, cfg.in_w});
    prog.num_registers = 1;
  }

  int fresh(int c, int h, int w) {
    shape.push_back({c, h, w});
    return prog.num_registers++;
  }

  int emit(Instr op, int c, int h, int w) {
    op.out = fresh(c, h, w);
    op.out_c = c;
    op.out_h = h;
    op.out_w = w;
    prog.instrs.push_back(op);
    return op.out;
  }

  int conv(int in, int cout, int k, int stride) {
    const auto [c, h, w] = shape[in];
    const int pad = (k - 1) / 2;
    const int oh = (h + 2 * pad - k) / stride + 1;
    const int ow = (w + 2 * pad - k) / stride + 1;
    Instr op{LayerKind::kConv, -1, {in}};
    op.weight = static_cast<int>(weight_shape.size());
    weight_shape.push_back({cout, c, k, k});
    weight_is_bias.push_back(false);
    op.stride = stride;
    op.pad = pad;
    op.record = true;
    op.macs = std::int64_t(cout) * c * k * k * oh * ow;
    return emit(op, cout, oh, ow);
  }

  int unary(LayerKind kind, int in, bool record = true) {
    auto [c, h, w] = shape[in];
    if (kind == LayerKind::kAvgPool2x2) {
      h /= 2;
      w /= 2;
    } else if (kind == LayerKind::kGlobalPool) {
      h = 1;
      w = 1;
    }
    Instr op{kind, -1, {in}};
    op.record = record;
    return emit(op, c, h, w);
  }

  int relu_conv_norm(int in, int cout, int k, int stride) {
    const int r = unary(LayerKind::kRelu, in);
    const int c = conv(r, cout, k, stride);
    return unary(LayerKind::kNorm, c);
  }

  int zero_like(int c, int h, int w) {
    Instr op{LayerKind::kZero, -1, {}};
    op.record = false;
    return emit(op, c, h, w);
  }

  int sum(std::vector<int> regs) {
    const auto [c, h, w] = shape[regs[0]];
    Instr op{LayerKind::kAdd, -1, std::move(regs)};
    op.record = true;
    return emit(op, c, h, w);
  }

  int cell(int in, int channels, const CellArch& arch) {
    const auto [c, h, w] = shape[in];
    (void)c;
    int node[4] = {in, -1, -1, -1};
    int e = 0;
    for (int i = 1; i < 4; ++i) {
      std::vector<int> parts;
      for (int j = 0; j < i; ++j, ++e) {
        switch (arch.edges[e]) {
          case CellOp::kNone:
            break;
          case CellOp::kSkip:
            parts.push_back(node[j]);
            break;
          case CellOp::kConv1x1:
            parts.push_back(relu_conv_norm(node[j], channels, 1, 1));
            break;
          case CellOp::kConv3x3:
            parts.push_back(relu_conv_norm(node[j], channels, 3, 1));
            break;
          case CellOp::kAvgPool:
            parts.push_back(unary(LayerKind::kAvgPool3x3, node[j]));
            break;
        }
      }
      if (parts.empty())
        node[i] = zero_like(channels, h, w);
      else if (parts.size() == 1)
        node[i] = parts[0];
      else
        node[i] = sum(std::move(parts));
    }
    return node[3];
  }

  // Residual reduction: 3x3 stride-2 conv path plus pooled 1x1 shortcut.
  int reduction(int in, int cout) {
    const int a = relu_conv_norm(in, cout, 3, 2);
    const int b = relu_conv_norm(a, cout, 3, 1);
    const int pooled = unary(LayerKind::kAvgPool2x2, in);
    const int sc = conv(pooled, cout, 1, 1);
    return sum({b, sc});
  }

  int classifier(int in, int num_classes) {
    const int pooled = unary(LayerKind::kGlobalPool, in);
    const auto [c, h, w] = shape[pooled];
    (void)h;
    (void)w;
    Instr op{LayerKind::kLinear, -1, {pooled}};
    op.weight = static_cast<int>(weight_shape.size());
    weight_shape.push_back({num_classes, c, 1, 1});
    weight_is_bias.push_back(false);
    op.bias = static_cast<int>(weight_shape.size());
    weight_shape.push_back({num_classes, 1, 1, 1});
    weight_is_bias.push_back(true);
    op.record = true;
    op.macs = std::int64_t(num_classes) * c;
    return emit(op, num_classes, 1, 1);
  }
};

}  // namespace

NetworkSpec instantiate(const CellArch& arch, const SpaceConfig& cfg,
                        std::uint64_t init_seed) {
  if (cfg.stem_channels < 1 || cfg.cells_per_stage < 1 || cfg.num_stages < 1 ||
      cfg.num_classes < 1)
    throw std::invalid_argument("instantiate: bad config");
  Builder b(cfg);
  int x = b.conv(0, cfg.stem_channels, 3, 1);
  x = b.unary(LayerKind::kNorm, x);
  int channels = cfg.stem_channels;
  for (int stage = 0; stage < cfg.num_stages; ++stage) {
    if (stage > 0) {
      channels *= 2;
      x = b.reduction(x, channels);
    }
    for (int i = 0; i < cfg.cells_per_stage; ++i)
      x = b.cell(x, channels, arch);
  }
  x = b.unary(LayerKind::kNorm, x);
  x = b.unary(LayerKind::kRelu, x);
  b.classifier(x, cfg.num_classes);

  NetworkSpec net;
  net.arch = encode(arch);
  net.cell = arch;
  net.cfg = cfg;
  net.init_seed = init_seed;
  net.program = std::move(b.prog);

  Rng rng(init_seed);
  net.weights.reserve(b.weight_shape.size());
  for (std::size_t wi = 0; wi < b.weight_shape.size(); ++wi) {
    const auto [n, c, h, w] = b.weight_shape[wi];
    TensorD t(n, c, h, w);
    if (!b.weight_is_bias[wi]) {
      const double fan_in = static_cast<double>(c) * h * w;
      const double std_dev = std::sqrt(2.0 / fan_in);
      for (double& v : t.data) v = rng.normal() * std_dev;
    }
    net.weights.push_back(std::move(t));
  }
  return net;
}

std::int64_t count_params(const NetworkSpec& net) {
  std::int64_t total = 0;
  for (const TensorD& w : net.weights) total += w.numel();
  return total;
}

std::int64_t count_flops(const NetworkSpec& net) {
  std::int64_t total = 0;
  for (const Instr& op : net.program.instrs) total += 2 * op.macs;
  return total;
}

}  // namespace dextr
