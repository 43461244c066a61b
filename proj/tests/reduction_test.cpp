// Copyright 2026 The Autobid Chaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "autobid/reduction.hpp"

#include <cmath>
#include <random>
#include <string>

#include <gtest/gtest.h>

#include "autobid/chua.hpp"

namespace autobid {
namespace {

TargetSystem one_dim(double a, ScalarFunction h, bool normalized = true) {
  TargetSystem t;
  t.A = {{a}};
  t.h = {std::move(h)};
  t.box = {{kBoxLo, kBoxHi}};
  t.normalized = normalized;
  return t;
}

// dx/dt = A (x - c) with c = (1.5, 1.5): a damped rotation inside the box.
TargetSystem spiral() {
  TargetSystem t;
  t.A = {{-1.0, 0.5}, {-0.5, -1.0}};
  t.h = {ScalarFunction::affine(0.0, 0.75), ScalarFunction::affine(0.0, 2.25)};
  t.box = {{kBoxLo, kBoxHi}, {kBoxLo, kBoxHi}};
  t.normalized = true;
  return t;
}

TEST(NormalizeTest, SineGetsShiftedByLPlusOne) {
  TargetSystem t = one_dim(0.0, ScalarFunction::of(Shape::kSine), false);
  t.lipschitz = 1.0;
  const TargetSystem n = normalize(t);
  EXPECT_DOUBLE_EQ(n.A[0][0], 2.0);
  for (double x = 1.1; x <= 1.9; x += 0.01) {
    EXPECT_NEAR(n.h[0](x), std::sin(x) - 2.0 * x, 1e-14);
    EXPECT_LE(n.h[0].derivative(x), -1.0);
    EXPECT_GE(n.h[0].derivative(x), -3.0);
  }
}

TEST(NormalizeTest, NormalizedTargetIsUnchanged) {
  const TargetSystem t = spiral();
  const TargetSystem n = normalize(t);
  EXPECT_EQ(n.A, t.A);
  for (const auto& c : n.coords) {
    EXPECT_EQ(c.alpha, 1.0);
    EXPECT_EQ(c.beta, 0.0);
  }
  EXPECT_THROW(normalize(one_dim(0.0, ScalarFunction::of(Shape::kIdentity))), InvalidInput);
}

TEST(NormalizeTest, FieldIsAffinelyConjugate) {
  TargetSystem t = chua_as_target();
  t.slope_shift.clear();  // exercise the automatic shift
  const TargetSystem n = normalize(t);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    std::vector<double> x(3);
    for (int i = 0; i < 3; ++i) x[i] = t.box[i].first + (t.box[i].second - t.box[i].first) * u(rng);
    const std::vector<double> s = n.encode(x);
    const std::vector<double> fx = t.field(x), fs = n.field(s);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(fs[i], n.coords[i].alpha * fx[i], 1e-10);
    const std::vector<double> back = n.decode(s);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  }
}

TEST(NormalizeTest, ChuaDiodeSlopeBecomesNegative) {
  const TargetSystem n = normalize(chua_as_target());
  const SlopeRange r = sample_slopes(n.h[0], kBoxLo, kBoxHi);
  EXPECT_LT(r.max, 0.0);
  // Without the shift the inner diode segment rises.
  TargetSystem raw = chua_as_target();
  raw.slope_shift = {0.0, 0.0, 0.0};
  EXPECT_THROW(normalize(raw), InvalidInput);
}

TEST(NormalizeTest, RejectsUnboundedBox) {
  TargetSystem t = one_dim(0.0, ScalarFunction::zero(), false);
  t.box = {{-INFINITY, 1.0}};
  EXPECT_THROW(normalize(t), InvalidInput);
}

TEST(NonlinearGadgetTest, NegativeIdentity) {
  const ScalarFunction h = ScalarFunction::affine(-1.0, 0.0);
  const ContinuumSegment seg = build_nonlinear_gadget(h, 0);
  EXPECT_NEAR(seg.density(1.5, 1.0), 1.0 / 0.5, 1e-15);
  MarketInstance inst{1, {}, {seg}};
  for (double m = 1.1; m <= 1.9; m += 0.05) EXPECT_NEAR(utility(inst, {m})[0], -(m - 1.1), 1e-14);
}

TEST(NonlinearGadgetTest, ConstantGivesNothing) {
  MarketInstance inst{1, {}, {build_nonlinear_gadget(ScalarFunction::affine(0.0, 4.0), 0)}};
  EXPECT_EQ(utility(inst, {1.7})[0], 0.0);
  EXPECT_THROW(build_nonlinear_gadget(ScalarFunction::of(Shape::kIdentity), 0), InvalidInput);
}

TEST(NonlinearGadgetTest, ChuaDiodeDensityKinksAtMappedBreakpoints) {
  const TargetSystem n = normalize(chua_as_target());
  const ContinuumSegment seg = build_nonlinear_gadget(n.h[0], 0);
  const auto kinks = n.h[0].breakpoints();
  ASSERT_EQ(kinks.size(), 2u);
  EXPECT_NEAR(kinks[0], n.coords[0].encode(-1.0), 1e-12);
  EXPECT_NEAR(kinks[1], n.coords[0].encode(1.0), 1e-12);
  const ChuaParams p;
  const double inner = (-p.Ga - p.G()) - 1.0, outer = (-p.Gb - p.G()) - 1.0;
  for (double k : kinks) {
    const double left = k < 1.5 ? outer : inner, right = k < 1.5 ? inner : outer;
    EXPECT_NEAR(seg.density(k - 1e-9, 1.0), left / (1.0 - (k - 1e-9)), 1e-7);
    EXPECT_NEAR(seg.density(k + 1e-9, 1.0), right / (1.0 - (k + 1e-9)), 1e-7);
  }
  MarketInstance inst{1, {}, {seg}};
  for (double m = 1.1; m <= 1.9; m += 0.01) {
    EXPECT_NEAR(utility(inst, {m})[0], n.h[0](m) - n.h[0](1.1), 1e-12);
  }
}

TEST(DiscretizeTest, NegativeIdentityWithinTolerance) {
  const ScalarFunction h = ScalarFunction::affine(-1.0, 0.0);
  const DiscretizedGadget g = discretize_nonlinear_gadget(h, 0.01);
  EXPECT_LE(g.items.size(), 200u);
  MarketInstance inst{1, {}, {}};
  for (const auto& [w, r] : g.items) inst.items.push_back({{w}, r});
  double worst = 0.0;
  for (int k = 0; k <= 10000; ++k) {
    const double m = 1.1 + 0.8 * k / 10000.0;
    worst = std::max(worst, std::abs(utility(inst, {m})[0] - (h(m) - h(1.1))));
  }
  EXPECT_LE(worst, 0.01);
}

TEST(DiscretizeTest, NonlinearWithinTolerance) {
  const TargetSystem n = normalize(chua_as_target());
  for (double eps : {0.05, 0.005}) {
    const DiscretizedGadget g = discretize_nonlinear_gadget(n.h[0], eps);
    MarketInstance inst{1, {}, {}};
    for (const auto& [w, r] : g.items) inst.items.push_back({{w}, r});
    double worst = 0.0;
    for (int k = 0; k <= 10000; ++k) {
      const double m = 1.1 + 0.8 * k / 10000.0;
      worst = std::max(worst, std::abs(utility(inst, {m})[0] - (n.h[0](m) - n.h[0](1.1))));
    }
    EXPECT_LE(worst, eps);
  }
}

TEST(DiscretizeTest, InfiniteToleranceAndCapacity) {
  const ScalarFunction h = ScalarFunction::affine(-1.0, 0.0);
  EXPECT_TRUE(discretize_nonlinear_gadget(h, INFINITY).items.empty());
  try {
    discretize_nonlinear_gadget(h, 1e-9, kBoxLo, kBoxHi, 1000);
    FAIL();
  } catch (const VerificationError& e) {
    EXPECT_NE(std::string(e.what()).find("k = "), std::string::npos);
  }
}

TEST(DiscretizeTest, ReplicasSplitTiedItem) {
  const auto o = settle_item<double>({1.0, 1.0}, 0.5, {1.5, 1.5});
  EXPECT_EQ(o.share[0], 0.5);
  EXPECT_EQ(o.share[1], 0.5);
}

TEST(NegationGadgetTest, UtilityIsLinear) {
  for (double lam : {1.0, 37.0, 1e4}) {
    MarketBuilder b;
    const int in = b.add_bidder();
    const int out = build_negation_gadget(b, lam, in);
    const MarketInstance inst = b.build();
    EXPECT_NEAR(utility(inst, {1.5, 1.5})[out], 0.0, 1e-12 * lam);
    EXPECT_NEAR(utility(inst, {1.2, 1.9})[out], -0.1 * lam, 1e-12 * lam);
    for (double m = 1.05; m <= 1.95; m += 0.05) {
      for (double mb = 1.05; mb <= 1.95; mb += 0.05) {
        EXPECT_NEAR(utility(inst, {m, mb})[out], 3 * lam - lam * m - lam * mb, 1e-11 * lam);
      }
    }
  }
  MarketBuilder b;
  EXPECT_THROW(build_negation_gadget(b, 0.5, b.add_bidder()), InvalidInput);
}

TEST(NegationGadgetTest, InputUtilityUntouched) {
  const TargetSystem n = normalize(chua_as_target());
  MarketBuilder base;
  const int i = base.add_bidder();
  base.add_segment(build_nonlinear_gadget(n.h[0], i), "h");
  base.add_item({{i, 0.3}}, std::nullopt, "c");
  MarketBuilder with = base;
  const int out = build_negation_gadget(with, 100.0, i);
  const MarketInstance a = base.build(), b = with.build();
  for (double m = 1.05; m <= 1.95; m += 0.01) {
    for (double mb = 1.05; mb <= 1.95; mb += 0.1) {
      EXPECT_EQ(utility(a, {m})[0], utility(b, {m, mb})[0]);
    }
  }
  EXPECT_EQ(out, 1);
}

// Input bidder drifting at unit speed, negated at rate lam.
double negation_lag(double lam) {
  MarketBuilder b;
  const int in = b.add_bidder();
  b.add_item({{in, 1.0}}, std::nullopt, "drift");
  const int out = build_negation_gadget(b, lam, in);
  VectorField f = market_field(b.build());
  f.fast.push_back({out, lam, [in](const State& m) { return 3.0 - m[in]; }});
  const Trajectory t = integrate(f, {1.1, 1.9}, 0.8, default_config(f));
  double sup = 0.0;
  for (const State& m : t.states) sup = std::max(sup, std::abs(m[out] - (3.0 - m[in])));
  return sup;
}

TEST(NegationGadgetTest, ErrorLawAndMonotonicity) {
  double previous = INFINITY;
  for (double lam : {10.0, 1e2, 1e3, 1e4}) {
    const double lag = negation_lag(lam);
    EXPECT_LE(lag, negation_error_bound(1.0, lam)) << lam;
    EXPECT_NEAR(lag, (1.0 - std::exp(-0.8 * lam)) / lam, 1e-6) << lam;
    EXPECT_LT(lag, previous);
    previous = lag;
  }
}

TEST(LinearGadgetTest, PositiveAndNegativeTerms) {
  MarketBuilder b;
  const int p0 = b.add_bidder(), p1 = b.add_bidder();
  const int n1 = build_negation_gadget(b, 100.0, p1);
  build_linear_gadgets(b, {{0.0, 0.5}, {-0.25, 0.0}}, {p0, p1}, {-1, n1});
  const MarketInstance inst = b.build();
  EXPECT_EQ(inst.items.size(), 3u);  // negation item plus two terms
  const auto u = utility(inst, {1.4, 1.6, 1.5});
  EXPECT_DOUBLE_EQ(u[p0], 1.0 - 0.75);
  EXPECT_DOUBLE_EQ(u[p0], 0.5 * (3 - 1.5) - 0.5);
  EXPECT_DOUBLE_EQ(u[p1], 0.5 - 0.25 * 1.4);
  // Worst case of the band: the primary bidder still wins.
  const auto o = allocate(inst, {1.05, 1.05, 1.95});
  EXPECT_EQ(o[1].share[p0], 1.0);
  MarketBuilder z;
  z.add_bidder();
  build_linear_gadgets(z, {{0.0}}, {0}, {-1});
  EXPECT_TRUE(z.build().items.empty());
}

TEST(ConstantGadgetTest, PositiveAndNegative) {
  MarketBuilder b;
  const int a = b.add_bidder(), c = b.add_bidder();
  const int pegged = build_constant_gadgets(b, {0.7, -0.005}, {a, c});
  const MarketInstance inst = b.build();
  EXPECT_EQ(inst.items[1].values[c], 1.995);
  for (double m : {1.05, 1.5, 1.95}) {
    Profile p{m, m, 2.0};
    const auto u = utility(inst, p);
    EXPECT_NEAR(u[a], 0.7, 1e-15);
    EXPECT_NEAR(u[c], -0.005, 1e-15);
    EXPECT_EQ(u[pegged], 0.0);
  }
  MarketBuilder big;
  const int d = big.add_bidder();
  const int peg = build_constant_gadgets(big, {-7.3}, {d});
  for (double m : {1.05, 1.95}) EXPECT_NEAR(utility(big.build(), {m, 2.0})[d], -7.3, 1e-12);
  EXPECT_EQ(utility(big.build(), {1.05, 2.0})[peg], 0.0);
}

TEST(CompileTest, CompetitiveSystemIsExact) {
  const CompiledMarket cm = compile(one_dim(-1.0, ScalarFunction::affine(0.0, 1.5)));
  EXPECT_EQ(cm.negation[0], -1);
  EXPECT_EQ(cm.field_error_bound, 0.0);
  for (double m = 1.05; m <= 1.95; m += 0.01) {
    Profile p = initial_state(cm, {m});
    EXPECT_NEAR(utility(cm.instance, p)[cm.primary[0]], 1.5 - m, 1e-14);
  }
  const SimulationReport r = verify_simulation(cm, {1.8}, 5.0);
  EXPECT_LE(r.max_error, 1e-9);
  EXPECT_FALSE(r.escaped);
  EXPECT_NEAR(r.trajectory.states.back()[0], 1.5 + 0.3 * std::exp(-5.0), 1e-6);
}

TEST(CompileTest, SpiralErrorLaw) {
  const double lam = 1e4;
  const CompiledMarket cm = compile(spiral(), {lam});
  const SimulationReport r = verify_simulation(cm, {1.8, 1.2}, 5.0);
  EXPECT_FALSE(r.escaped);
  EXPECT_LE(r.max_error, 10.0 * std::log(2e4) / 1e4);
  EXPECT_LE(r.max_error, cm.field_error_bound);
  double previous = INFINITY;
  for (double l : {10.0, 1e2, 1e3, 1e4}) {
    const double e = verify_simulation(compile(spiral(), {l}), {1.8, 1.2}, 5.0).max_error;
    EXPECT_LE(e, previous) << l;
    previous = e;
  }
}

TEST(CompileTest, UnachievableEpsilonReportsMinimalLambda) {
  try {
    compile(spiral(), {10.0, 1e-3});
    FAIL();
  } catch (const VerificationError& e) {
    EXPECT_NE(std::string(e.what()).find("minimal lambda"), std::string::npos);
  }
  const CompiledMarket cm = compile(spiral(), {0.0, 1e-3});
  EXPECT_GE(cm.lambda, 100.0);
  EXPECT_LE(cm.field_error_bound, 1e-3 * (1 + 1e-9));
  EXPECT_EQ(compile(spiral(), {0.0, 10.0}).lambda, 100.0);
}

TEST(CompileTest, GadgetDecomposition) {
  const double lam = 100.0;
  const CompiledMarket cm = compile(chua_as_target(), {lam});
  const TargetSystem& t = cm.normalized;
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> band(1.05, 1.95);
  for (int trial = 0; trial < 200; ++trial) {
    Profile m(cm.instance.n_bidders, 2.0);
    for (int i : cm.primary) m[i] = band(rng);
    for (int i : cm.negation) m[i] = band(rng);
    std::vector<double> sum(m.size(), 0.0);
    for (std::size_t k = 0; k < cm.instance.items.size(); ++k) {
      const DiscreteItem& item = cm.instance.items[k];
      const std::string& label = cm.item_labels[k];
      int owner = -1;
      double expected = 0.0;
      if (label.rfind("negation(", 0) == 0) {
        const int in = std::stoi(label.substr(9));
        owner = cm.negation[in];
        expected = 1.95 * lam - lam * m[cm.primary[in]];
      } else if (label.rfind("A[", 0) == 0) {
        const int i = label[2] - '0', j = label[5] - '0';
        owner = cm.primary[i];
        const double a = t.A[i][j];
        expected = a > 0 ? 2 * a - a * m[cm.negation[j]] : -2 * a + a * m[cm.primary[j]];
      } else {
        const int i = label[9] - '0';
        owner = cm.primary[i];
        expected = item.values[owner] - (label.find("pegged") != std::string::npos
                                              ? item.values[cm.auxiliary[0]] * 2.0 : 0.0);
      }
      const auto o = settle_item(item.values, item.reserve_price, m);
      EXPECT_EQ(o.share[owner], 1.0) << label;
      EXPECT_NEAR(item.values[owner] - o.payment[owner], expected, 1e-12) << label;
      sum[owner] += item.values[owner] - o.payment[owner];
    }
    for (std::size_t k = 0; k < cm.instance.segments.size(); ++k) {
      const ContinuumSegment& s = cm.instance.segments[k];
      const int owner = s.owners[0];
      const double b = std::min(std::max(m[owner], s.p_lo), s.p_hi);
      const double got = segment_surplus(s, s.p_lo, b);
      double expected;
      if (s.density.kind == DensityKind::kNegation) {
        expected = -lam * (m[owner] - 1.05);
      } else {
        expected = s.density.h(m[owner]) - s.density.h(kBandLo);
      }
      EXPECT_NEAR(got, expected, 1e-10 * std::max(1.0, lam));
      EXPECT_NEAR(segment_surplus_quadrature(s, s.p_lo, b), got, 1e-8 * std::max(1.0, lam));
      sum[owner] += got;
    }
    const auto u = utility(cm.instance, m);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(u[i], sum[i], 1e-9);
    for (std::size_t k = 0; k < cm.negation.size(); ++k) {
      const int in = cm.primary[k], out = cm.negation[k];
      EXPECT_NEAR(u[out], 3 * lam - lam * m[in] - lam * m[out], 1e-10 * lam);
    }
  }
}

TEST(CompileTest, DiscreteModeWithinEpsilon) {
  const double eps = 0.02;
  const CompiledMarket cm = compile(spiral(), {0.0, eps, false});
  ASSERT_FALSE(cm.instance.segments.empty());
  for (const auto& seg : cm.instance.segments) EXPECT_EQ(seg.density.kind, DensityKind::kNegation);
  EXPECT_LE(cm.field_error_bound, eps * (1 + 1e-9));
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> box(1.1, 1.9);
  for (int k = 0; k < 1000; ++k) {
    const std::vector<double> s{box(rng), box(rng)};
    const Profile m = initial_state(cm, s);
    const auto u = utility(cm.instance, m);
    const auto want = cm.normalized.field(s);
    for (int i = 0; i < 2; ++i) EXPECT_LE(std::abs(u[cm.primary[i]] - want[i]), eps);
  }
}

TEST(CompileTest, RoundTripAndIndexSets) {
  const CompiledMarket cm = compile(chua_as_target(), {100.0});
  std::vector<int> all = cm.primary;
  all.insert(all.end(), cm.negation.begin(), cm.negation.end());
  all.insert(all.end(), cm.auxiliary.begin(), cm.auxiliary.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const std::vector<double> x{2.5 * u(rng), 0.45 * u(rng), 9.5 * u(rng)};
    const std::vector<double> back = project(cm, initial_state(cm, x));
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(back[i], x[i], 1e-12);
  }
}

}  // namespace
}  // namespace autobid
