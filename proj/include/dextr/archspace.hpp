#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "dextr/network.hpp"

namespace dextr {

// Cell search space: a 4-node DAG where every edge (j -> i, j < i) carries
// one of five ops. 5^6 = 15625 cells total.
enum class CellOp : std::uint8_t {
  kNone = 0,
  kSkip,
  kConv1x1,
  kConv3x3,
  kAvgPool,
};

constexpr int kNumCellOps = 5;
constexpr int kNumEdges = 6;
constexpr int kSpaceSize = 15625;

const char* cell_op_name(CellOp op);

// Edges in fixed order: (0->1), (0->2), (1->2), (0->3), (1->3), (2->3).
struct CellArch {
  std::array<CellOp, kNumEdges> edges{};
  bool operator==(const CellArch&) const = default;
};

// String form "|op~0|+|op~0|op~1|+|op~0|op~1|op~2|": one group per target
// node, each token names the edge op and its source node.
std::string encode(const CellArch& arch);

// Inverse of encode. Throws std::invalid_argument naming the byte offset for
// structural problems and the offending token for unknown op tags.
CellArch parse_encoding(const std::string& s);

CellArch sample_arch(std::uint64_t seed);

// Resamples exactly one edge to a different op.
CellArch mutate(const CellArch& arch, std::uint64_t seed);

// First `max` cells of the space in a fixed order (edge 0 varies fastest).
std::vector<CellArch> enumerate_space(int max = kSpaceSize);

struct SpaceConfig {
  int stem_channels = 8;
  int cells_per_stage = 1;
  int num_stages = 3;
  int num_classes = 10;
  int in_channels = 3;
  int in_h = 32;
  int in_w = 32;
};

// A compiled, weighted network: the cell repeated per stage inside the fixed
// macro skeleton (stem conv+norm, residual reduction blocks that double
// channels and halve the spatial extent between stages, norm+relu tail,
// global pool, linear classifier).
struct NetworkSpec {
  std::string arch;
  CellArch cell;
  SpaceConfig cfg;
  std::uint64_t init_seed = 0;
  Program program;
  std::vector<TensorD> weights;
};

// Builds the program and draws weights: conv and linear weights are
// N(0, 2/fan_in), linear bias is zero. Same (arch, cfg, seed) gives
// bit-identical weights.
NetworkSpec instantiate(const CellArch& arch, const SpaceConfig& cfg,
                        std::uint64_t init_seed);

// Total weight-tensor element count (linear bias included).
std::int64_t count_params(const NetworkSpec& net);

// Two FLOPs per conv/linear multiply-accumulate; other ops count zero.
std::int64_t count_flops(const NetworkSpec& net);

template <class T>
ForwardResult<T> forward(const NetworkSpec& net, const Tensor<T>& input,
                         const ForwardOptions& opt = {}) {
  return run_program(net.program, net.weights, input, opt);
}

}  // namespace dextr
