#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dextr/linalg.hpp"
#include "dextr/ops.hpp"
#include "dextr/rng.hpp"

namespace dextr {

enum class LayerKind {
  kConv,
  kNorm,
  kRelu,
  kAvgPool3x3,
  kAvgPool2x2,
  kGlobalPool,
  kLinear,
  kAdd,
  kZero,
};

const char* layer_kind_name(LayerKind k);

// One step of a compiled network: read input registers, write one output
// register. Compile-time shape and cost metadata ride along so parameter and
// FLOP counts never need a forward pass.
struct Instr {
  LayerKind kind;
  int out = -1;
  std::vector<int> ins;  // kAdd sums any number; others take one
  int weight = -1;       // index into NetworkSpec weights (conv, linear)
  int bias = -1;         // linear only
  int stride = 1;
  int pad = 0;
  bool record = false;
  int out_c = 0, out_h = 0, out_w = 0;
  std::int64_t macs = 0;  // conv/linear multiply-accumulates
};

struct Program {
  std::vector<Instr> instrs;
  int num_registers = 0;
  int in_c = 0, in_h = 0, in_w = 0;
};

// Spectrum summary of one recorded layer output, flattened to
// (channels x spatial). Only layers with both dims >= 2 qualify for the
// conditioning sum; flat outputs (classifier logits, pooled vectors) are
// recorded but never qualify.
struct LayerRecord {
  int layer_id = 0;
  LayerKind kind = LayerKind::kConv;
  int channels = 0;
  int spatial = 0;
  double inv_cond = 0.0;
  double sigma_max = 0.0;
  bool qualifying = false;
};

struct ForwardOptions {
  bool record = true;
  // When positive, each recorded spectrum is taken over min(beta, channels)
  // channels sampled without replacement (seeded per layer).
  int subsample_beta = 0;
  std::uint64_t subsample_seed = 0;
};

template <class T>
struct ForwardResult {
  Tensor<T> output;
  std::vector<LayerRecord> records;
  bool finite = true;       // false as soon as any op output is non-finite
  bool spectra_ok = true;   // false if any recorded eigensolve failed
};

// Distinct channel indices for a layer's subsampled spectrum, sorted.
std::vector<int> subsample_channels(int channels, int beta,
                                    std::uint64_t seed);

LayerRecord make_record(int layer_id, LayerKind kind, const Matrix& feat,
                        int full_channels, bool* spectra_ok);

// Executes the program on one input. Recording flattens each listed layer
// output to (channels x spatial) and takes its singular spectrum. A
// non-finite op output stops execution and flags the result instead of
// throwing: degenerate nets are data, not bugs.
template <class T>
ForwardResult<T> run_program(const Program& prog,
                             const std::vector<TensorD>& weights,
                             const Tensor<T>& input,
                             const ForwardOptions& opt = {}) {
  if (input.c != prog.in_c || input.h != prog.in_h || input.w != prog.in_w)
    throw std::invalid_argument("run_program: input shape mismatch");
  std::vector<Tensor<T>> regs(static_cast<std::size_t>(prog.num_registers));
  regs[0] = input;
  ForwardResult<T> res;
  int layer_id = 0;
  for (const Instr& op : prog.instrs) {
    Tensor<T>& dst = regs[op.out];
    switch (op.kind) {
      case LayerKind::kConv:
        dst = conv2d(regs[op.ins[0]], weights[op.weight], op.stride, op.pad);
        break;
      case LayerKind::kNorm:
        dst = instance_norm(regs[op.ins[0]]);
        break;
      case LayerKind::kRelu:
        dst = relu(regs[op.ins[0]]);
        break;
      case LayerKind::kAvgPool3x3:
        dst = avg_pool3x3(regs[op.ins[0]]);
        break;
      case LayerKind::kAvgPool2x2:
        dst = avg_pool2x2s2(regs[op.ins[0]]);
        break;
      case LayerKind::kGlobalPool:
        dst = global_avg_pool(regs[op.ins[0]]);
        break;
      case LayerKind::kLinear:
        dst = linear(regs[op.ins[0]], weights[op.weight], weights[op.bias]);
        break;
      case LayerKind::kAdd: {
        dst = regs[op.ins[0]];
        for (std::size_t i = 1; i < op.ins.size(); ++i)
          dst = add(dst, regs[op.ins[i]]);
        break;
      }
      case LayerKind::kZero:
        dst = Tensor<T>(1, op.out_c, op.out_h, op.out_w);
        break;
    }
    if (!all_finite(dst)) {
      res.finite = false;
      res.output = dst;
      return res;
    }
    if (op.record && opt.record) {
      Matrix feat = feature_matrix(dst);
      if (opt.subsample_beta > 0 && feat.rows > opt.subsample_beta) {
        std::vector<int> rows = subsample_channels(
            feat.rows, opt.subsample_beta,
            mix_seed(opt.subsample_seed, static_cast<std::uint64_t>(layer_id)));
        Matrix sub = take_rows(feat, rows);
        res.records.push_back(make_record(layer_id, op.kind, sub, feat.rows,
                                          &res.spectra_ok));
      } else {
        res.records.push_back(make_record(layer_id, op.kind, feat, feat.rows,
                                          &res.spectra_ok));
      }
      ++layer_id;
    }
  }
  res.output = regs[prog.instrs.back().out];
  return res;
}

}  // namespace dextr
