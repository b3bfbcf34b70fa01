#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstring>
#include <set>
#include <stdexcept>
#include <string>

#include "dextr/archspace.hpp"
#include "dextr/rng.hpp"
#include "doctest.h"

using namespace dextr;

namespace {

CellArch make_arch(std::initializer_list<CellOp> ops) {
  CellArch a;
  int e = 0;
  for (CellOp op : ops) a.edges[e++] = op;
  REQUIRE(e == kNumEdges);
  return a;
}

CellArch uniform_arch(CellOp op) {
  CellArch a;
  a.edges.fill(op);
  return a;
}

TensorD random_input(const SpaceConfig& cfg, std::uint64_t seed) {
  TensorD t(1, cfg.in_channels, cfg.in_h, cfg.in_w);
  Rng rng(seed);
  for (auto& v : t.data) v = rng.normal();
  return t;
}

}  // namespace

TEST_CASE("encode produces the pipe-delimited three-group form") {
  CHECK(encode(uniform_arch(CellOp::kNone)) ==
        "|none~0|+|none~0|none~1|+|none~0|none~1|none~2|");
  const CellArch mixed =
      make_arch({CellOp::kConv3x3, CellOp::kSkip, CellOp::kConv1x1,
                 CellOp::kNone, CellOp::kAvgPool, CellOp::kConv3x3});
  CHECK(encode(mixed) ==
        "|nor_conv_3x3~0|+|skip_connect~0|nor_conv_1x1~1|+"
        "|none~0|avg_pool_3x3~1|nor_conv_3x3~2|");
}

TEST_CASE("parse_encoding inverts encode on the whole space") {
  for (const CellArch& arch : enumerate_space()) {
    CHECK(parse_encoding(encode(arch)) == arch);
  }
}

TEST_CASE("parse_encoding reports byte offsets for structural errors") {
  CHECK_THROWS_WITH_AS(parse_encoding(""),
                       "bad cell encoding: expected '|' at byte 0",
                       std::invalid_argument);
  // Missing '+' between groups: the first group ends at byte 8.
  CHECK_THROWS_WITH_AS(parse_encoding("|none~0||none~0|none~1|"),
                       "bad cell encoding: expected '+' at byte 8",
                       std::invalid_argument);
  // Wrong source index on the second token of group two.
  CHECK_THROWS_WITH_AS(
      parse_encoding("|none~0|+|none~0|none~0|+|none~0|none~1|none~2|"),
      "bad cell encoding: expected source 1 at byte 22",
      std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      parse_encoding("|none~0|+|none~0|none~1|+|none~0|none~1|none~2|x"),
      "bad cell encoding: trailing characters at byte 47",
      std::invalid_argument);
}

TEST_CASE("parse_encoding names unknown op tags") {
  try {
    parse_encoding("|max_pool_3x3~0|+|none~0|none~1|+|none~0|none~1|none~2|");
    FAIL("expected throw");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("max_pool_3x3") != std::string::npos);
  }
}

TEST_CASE("sample_arch is seed-deterministic") {
  const CellArch a = sample_arch(123);
  const CellArch b = sample_arch(123);
  CHECK(a == b);
  int distinct = 0;
  for (std::uint64_t s = 0; s < 50; ++s)
    if (!(sample_arch(s) == a)) ++distinct;
  CHECK(distinct > 40);
}

TEST_CASE("mutate changes exactly one edge") {
  for (std::uint64_t s = 0; s < 200; ++s) {
    const CellArch arch = sample_arch(s);
    const CellArch kid = mutate(arch, s + 1000);
    int changed = 0;
    for (int e = 0; e < kNumEdges; ++e)
      if (arch.edges[e] != kid.edges[e]) ++changed;
    CHECK(changed == 1);
    CHECK(mutate(arch, s + 1000) == kid);
  }
}

TEST_CASE("enumerate_space lists 15625 distinct cells") {
  const auto all = enumerate_space();
  REQUIRE(static_cast<int>(all.size()) == kSpaceSize);
  std::set<std::string> seen;
  for (const auto& arch : all) seen.insert(encode(arch));
  CHECK(static_cast<int>(seen.size()) == kSpaceSize);
  // Edge 0 varies fastest.
  CHECK(all[0] == uniform_arch(CellOp::kNone));
  CHECK(all[1].edges[0] == CellOp::kSkip);
  CHECK(all[1].edges[1] == CellOp::kNone);
  CHECK_THROWS_AS(enumerate_space(kSpaceSize + 1), std::invalid_argument);
}

TEST_CASE("parameter counts match hand totals") {
  SpaceConfig cfg;  // stem 8, three stages, 10 classes

  // Cells with no weighted ops leave only the skeleton: stem conv
  // 8*3*9 = 216, reductions (16*8*9 + 16*16*9 + 16*8) + (32*16*9 +
  // 32*32*9 + 32*16) = 3584 + 14336, classifier 32*10 + 10 = 330.
  const std::int64_t skeleton = 216 + 3584 + 14336 + 330;
  CHECK(count_params(instantiate(uniform_arch(CellOp::kNone), cfg, 1)) ==
        skeleton);
  CHECK(count_params(instantiate(uniform_arch(CellOp::kSkip), cfg, 1)) ==
        skeleton);
  CHECK(count_params(instantiate(uniform_arch(CellOp::kAvgPool), cfg, 1)) ==
        skeleton);

  // One 3x3 conv on the first edge of a stem-4 single-stage net adds
  // 4*4*3*3 = 144 weights.
  SpaceConfig small;
  small.stem_channels = 4;
  small.num_stages = 1;
  small.in_h = 8;
  small.in_w = 8;
  CellArch one_conv = uniform_arch(CellOp::kNone);
  one_conv.edges[0] = CellOp::kConv3x3;
  const auto with_conv = instantiate(one_conv, small, 1);
  const auto without = instantiate(uniform_arch(CellOp::kNone), small, 1);
  CHECK(count_params(with_conv) - count_params(without) == 144);

  // A 16-wide single-stage skeleton: stem 16*3*9 = 432 plus a 16->10
  // classifier at 16*10 + 10 = 170.
  SpaceConfig wide = small;
  wide.stem_channels = 16;
  const auto net = instantiate(uniform_arch(CellOp::kNone), wide, 1);
  CHECK(count_params(net) == 432 + 170);
  const auto& lin_w = net.weights[net.weights.size() - 2];
  const auto& lin_b = net.weights[net.weights.size() - 1];
  CHECK(lin_w.numel() == 160);
  CHECK(lin_b.numel() == 10);
}

TEST_CASE("flop counts match hand totals") {
  SpaceConfig small;
  small.stem_channels = 4;
  small.num_stages = 1;
  small.in_h = 8;
  small.in_w = 8;

  // Skeleton: stem conv 2*(4*3*9*64) = 13824 plus linear 2*(10*4) = 80.
  const auto none_net = instantiate(uniform_arch(CellOp::kNone), small, 1);
  CHECK(count_flops(none_net) == 13824 + 80);

  // A 4-channel 3x3 conv over 8x8 adds 2*(4*4*9*64) = 18432.
  CellArch one_conv = uniform_arch(CellOp::kNone);
  one_conv.edges[0] = CellOp::kConv3x3;
  const auto conv_net = instantiate(one_conv, small, 1);
  CHECK(count_flops(conv_net) - count_flops(none_net) == 18432);

  // Pool and skip ops add nothing.
  CHECK(count_flops(instantiate(uniform_arch(CellOp::kAvgPool), small, 1)) ==
        count_flops(none_net));
  CHECK(count_flops(instantiate(uniform_arch(CellOp::kSkip), small, 1)) ==
        count_flops(none_net));
}

TEST_CASE("instantiate is bit-identical per seed and varies across seeds") {
  const CellArch arch = sample_arch(7);
  const SpaceConfig cfg;
  const auto a = instantiate(arch, cfg, 99);
  const auto b = instantiate(arch, cfg, 99);
  REQUIRE(a.weights.size() == b.weights.size());
  for (std::size_t i = 0; i < a.weights.size(); ++i) {
    REQUIRE(a.weights[i].numel() == b.weights[i].numel());
    CHECK(std::memcmp(a.weights[i].data.data(), b.weights[i].data.data(),
                      sizeof(double) * a.weights[i].data.size()) == 0);
  }
  const auto c = instantiate(arch, cfg, 100);
  CHECK(c.weights[0].data[0] != a.weights[0].data[0]);

  // Linear bias starts at zero.
  for (double v : a.weights.back().data) CHECK(v == 0.0);
}

TEST_CASE("record layout of the weightless cell network") {
  const SpaceConfig cfg;
  const auto net = instantiate(uniform_arch(CellOp::kNone), cfg, 3);
  const auto res = forward(net, random_input(cfg, 5));
  REQUIRE(res.finite);
  REQUIRE(res.spectra_ok);

  // Stem conv+norm (2), two reduction blocks (9 each), tail norm+relu (2),
  // global pool (1), linear (1): empty cells record nothing.
  CHECK(static_cast<int>(res.records.size()) == 24);
  int qualifying = 0;
  for (const auto& rec : res.records) {
    if (rec.qualifying) ++qualifying;
    if (rec.kind == LayerKind::kGlobalPool || rec.kind == LayerKind::kLinear)
      CHECK_FALSE(rec.qualifying);
  }
  // Everything but the global pool and classifier has >= 2 channels and
  // spatial extent >= 2 here.
  CHECK(qualifying == 22);

  // The empty cell feeds zeros forward, so every post-cell record is silent
  // while the stem still responds.
  CHECK(res.records[0].sigma_max > 0.0);
  for (const auto& rec : res.records)
    if (rec.layer_id >= 2) CHECK(rec.sigma_max == 0.0);
  for (int i = 0; i < res.output.numel(); ++i)
    CHECK(res.output.data[i] == 0.0);
}

TEST_CASE("dropping an op to none shrinks the qualifying layer count") {
  const SpaceConfig cfg;
  CellArch arch = uniform_arch(CellOp::kConv3x3);
  CellArch dropped = arch;
  dropped.edges[0] = CellOp::kNone;
  const auto input = random_input(cfg, 11);
  const auto full = forward(instantiate(arch, cfg, 2), input);
  const auto less = forward(instantiate(dropped, cfg, 2), input);
  auto count = [](const ForwardResult<double>& r) {
    int n = 0;
    for (const auto& rec : r.records)
      if (rec.qualifying) ++n;
    return n;
  };
  CHECK(count(less) < count(full));
}

TEST_CASE("every op kind forwards to a finite output") {
  const SpaceConfig cfg;
  const CellArch arch =
      make_arch({CellOp::kConv3x3, CellOp::kSkip, CellOp::kConv1x1,
                 CellOp::kNone, CellOp::kAvgPool, CellOp::kConv3x3});
  const auto net = instantiate(arch, cfg, 21);
  const auto res = forward(net, random_input(cfg, 22));
  CHECK(res.finite);
  CHECK(res.spectra_ok);
  REQUIRE(res.output.n == 1);
  REQUIRE(res.output.c == cfg.num_classes);
  for (double v : res.output.data) CHECK(std::isfinite(v));
}

TEST_CASE("jet forward with constant parts matches the plain forward") {
  const SpaceConfig cfg;
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto net = instantiate(sample_arch(s), cfg, s + 40);
    const auto input = random_input(cfg, s + 80);
    const auto plain = forward(net, input);
    const auto jets = forward(net, lift(input));
    REQUIRE(plain.output.numel() == jets.output.numel());
    for (int i = 0; i < plain.output.numel(); ++i) {
      CHECK(jets.output.data[i].v == plain.output.data[i]);
      CHECK(jets.output.data[i].d1 == 0.0);
      CHECK(jets.output.data[i].d2 == 0.0);
    }
    REQUIRE(plain.records.size() == jets.records.size());
    for (std::size_t i = 0; i < plain.records.size(); ++i) {
      CHECK(plain.records[i].inv_cond == jets.records[i].inv_cond);
      CHECK(plain.records[i].sigma_max == jets.records[i].sigma_max);
    }
  }
}
