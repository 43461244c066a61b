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


#include "autobid/analysis.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "autobid/chua.hpp"

namespace autobid {
namespace {

VectorField linear_field(double rate) {
  return {1, [rate](const State& x, State& dx) { dx[0] = rate * x[0]; }, {}};
}

// Rotation in (x, y) with z at rest.
VectorField rotation() {
  return {3, [](const State& s, State& d) {
            d[0] = -s[1];
            d[1] = s[0];
            d[2] = 0.0;
          }, {}};
}

PoincareSection rotation_section() {
  PoincareSection s;
  s.level = 0.0;
  s.direction = -1;
  return s;
}

Point2 random_point_in(const std::array<Point2, 4>& q, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double s = u(rng), t = u(rng);
  const Point2 top{q[0].y + s * (q[1].y - q[0].y), q[0].z + s * (q[1].z - q[0].z)};
  const Point2 bottom{q[3].y + s * (q[2].y - q[3].y), q[3].z + s * (q[2].z - q[3].z)};
  return {top.y + t * (bottom.y - top.y), top.z + t * (bottom.z - top.z)};
}

TEST(LyapunovTest, LinearFields) {
  LyapunovConfig cfg;
  cfg.t_total = 20.0;
  cfg.transient = 2.0;
  EXPECT_NEAR(largest_lyapunov(linear_field(1.0), {0.0}, cfg).exponent, 1.0, 1e-3);
  EXPECT_NEAR(largest_lyapunov(linear_field(-1.0), {1.0}, cfg).exponent, -1.0, 1e-3);
  const LyapunovResult r = largest_lyapunov(linear_field(-1.0), {1.0}, cfg);
  EXPECT_EQ(r.renormalizations, 36);
  EXPECT_EQ(r.running.size(), 36u);
  EXPECT_DOUBLE_EQ(r.running.front().first, 2.5);
}

TEST(LyapunovTest, RejectsBadConfig) {
  LyapunovConfig cfg;
  cfg.d0 = 0.0;
  EXPECT_THROW(largest_lyapunov(linear_field(1.0), {0.0}, cfg), InvalidInput);
  cfg = {};
  cfg.t_total = 100.0;
  cfg.transient = 100.0;
  EXPECT_THROW(largest_lyapunov(linear_field(1.0), {0.0}, cfg), InvalidInput);
  // A field that merges reference and shadow.
  VectorField collapse{1, [](const State&, State& d) { d[0] = 0.0; }, {}};
  cfg = {};
  cfg.t_total = 2.0;
  cfg.transient = 0.0;
  cfg.integrator = IntegratorConfig{};
  VectorField snap{1, [](const State& x, State& d) { d[0] = -1e6 * x[0]; }, {}};
  cfg.integrator->method = Method::kRk4Fixed;
  cfg.integrator->step = 0.5;
  cfg.integrator->max_step = 0.5;
  cfg.d0 = 1e-300;
  EXPECT_THROW(largest_lyapunov(snap, {0.0}, cfg), NumericalError);
  EXPECT_NEAR(largest_lyapunov(collapse, {0.0}, {}).exponent, 0.0, 1e-12);
}

TEST(LyapunovTest, ChuaEstimateIsPositiveAndRobust) {
  const VectorField f = augmented_field(100.0);
  const State x0{0.1, 0.1, 0.1, 2.9, 2.9, 2.9};
  const double base = largest_lyapunov(f, x0).exponent;
  EXPECT_GT(base, 0.05);
  LyapunovConfig half_d0;
  half_d0.d0 = 0.5e-8;
  EXPECT_NEAR(largest_lyapunov(f, x0, half_d0).exponent, base, 0.01);
  LyapunovConfig half_dt;
  half_dt.renorm_dt = 0.25;
  EXPECT_NEAR(largest_lyapunov(f, x0, half_dt).exponent, base, 0.01);
}

TEST(PoincareTest, RotationReturnsAfterOnePeriod) {
  const PoincareSection s = rotation_section();
  const PoincareHit hit = poincare_map(rotation(), s, {1.0, 0.3});
  EXPECT_NEAR(hit.tau, 2.0 * M_PI, 1e-8);
  EXPECT_NEAR(hit.point.y, 1.0, 1e-8);
  EXPECT_NEAR(hit.point.z, 0.3, 1e-12);
  // The upward crossing at t = pi is skipped; flipping the direction picks it.
  PoincareSection up = s;
  up.direction = 1;
  const PoincareHit other = poincare_map(rotation(), up, {1.0, 0.3});
  EXPECT_NEAR(other.tau, M_PI, 1e-8);
  EXPECT_NEAR(other.point.y, -1.0, 1e-8);
}

TEST(PoincareTest, NoReturn) {
  VectorField drift{3, [](const State&, State& d) {
                      d[0] = 1.0;
                      d[1] = d[2] = 0.0;
                    }, {}};
  EXPECT_THROW(poincare_map(drift, rotation_section(), {0.0, 0.0}, std::nullopt, 5.0), NumericalError);
}

TEST(PoincareTest, ChuaCentroidLandsInStrip) {
  const PoincareSection s = PoincareSection::galias();
  Point2 c;
  for (const Point2& p : s.n1) {
    c.y += p.y / 4;
    c.z += p.z / 4;
  }
  const PoincareHit hit = poincare_map(chua_field(), s, c);
  EXPECT_TRUE(in_strip(s, hit.point));
  EXPECT_NEAR(hit.state[0], 1.0, 1e-8);
}

TEST(PoincareTest, ReturnTimesAdd) {
  const PoincareSection s = PoincareSection::galias();
  const VectorField f = chua_field();
  std::mt19937 rng(21);
  for (int k = 0; k < 50; ++k) {
    const Point2 p = random_point_in(k % 2 ? s.n0 : s.n1, rng);
    const PoincareHit once = poincare_map(f, s, p);
    const PoincareHit twice = poincare_map(f, s, once.point);
    const PoincareHit direct = poincare_map(f, s, p, std::nullopt, 100.0, 2);
    EXPECT_NEAR(direct.tau, once.tau + twice.tau, 1e-7);
    EXPECT_NEAR(direct.point.y, twice.point.y, 1e-7);
    EXPECT_NEAR(direct.point.z, twice.point.z, 1e-7);
  }
}

TEST(SectionTest, GeometryAndRegions) {
  const PoincareSection s = PoincareSection::galias();
  EXPECT_TRUE(section_geometry_ok(s));
  auto centroid = [](const std::array<Point2, 4>& q) {
    Point2 c;
    for (const Point2& p : q) {
      c.y += p.y / 4;
      c.z += p.z / 4;
    }
    return c;
  };
  EXPECT_EQ(classify(s, centroid(s.n1)), Region::kN1);
  EXPECT_EQ(classify(s, centroid(s.n0)), Region::kN0);
  std::mt19937 rng(5);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_EQ(classify(s, random_point_in(s.n1, rng)), Region::kN1);
    EXPECT_EQ(classify(s, random_point_in(s.n0, rng)), Region::kN0);
  }
  // Walking up the strip centre line visits the regions in order.
  std::vector<Region> seen;
  for (double y = -0.40; y <= -0.15; y += 1e-4) {
    const Point2 p{y, s.a * (s.b * y - 0.5 * (s.c1 + s.c2))};
    const Region r = classify(s, p);
    if (seen.empty() || seen.back() != r) seen.push_back(r);
  }
  EXPECT_EQ(seen, (std::vector<Region>{Region::kMMinus, Region::kN0, Region::kM0, Region::kN1, Region::kMPlus}));
  EXPECT_EQ(classify(s, {-0.3, 0.0}), Region::kOutsideP);
  PoincareSection bad = s;
  bad.n0[0].z += 1e-3;
  EXPECT_FALSE(section_geometry_ok(bad));
}

TEST(HorseshoeTest, RawChuaSatisfiesPrecondition) {
  const PoincareSection s = PoincareSection::galias();
  const HorseshoeReport a = check_horseshoe_precondition(chua_field(), s, 100);
  EXPECT_TRUE(a.precondition_satisfied);
  EXPECT_TRUE(a.boundary_in_p);
  EXPECT_EQ(a.edge("N0D").verdict(), "M+");
  EXPECT_EQ(a.edge("N0U").verdict(), "M-");
  EXPECT_EQ(a.edge("N1D").verdict(), "M-");
  const HorseshoeReport b = check_horseshoe_precondition(chua_field(), s, 200);
  EXPECT_TRUE(same_classification(a, b));
}

TEST(HorseshoeTest, AugmentedSmallLambdaFails) {
  const HorseshoeReport r =
      check_horseshoe_precondition(augmented_field(10.0), PoincareSection::galias_augmented(), 50);
  EXPECT_FALSE(r.precondition_satisfied);
}

TEST(PeriodicOrbitTest, PaperExamples) {
  const auto two = find_periodic_orbit(symmetric_entropic_map(2.0, std::log(3.0)), 2, 0.5, 1.5);
  ASSERT_TRUE(two.has_value());
  EXPECT_NEAR(two->point, 1.0, 1e-10);
  EXPECT_NEAR(two->orbit[1], 3.0, 1e-9);
  EXPECT_TRUE(find_periodic_orbit(symmetric_entropic_map(2.0, 1.7), 3, 1.0, 2.0).has_value());
  EXPECT_FALSE(find_periodic_orbit(symmetric_entropic_map(2.0, 1.5), 3, 1.0, 2.0).has_value());
  EXPECT_THROW(find_periodic_orbit(symmetric_entropic_map(2.0, 1.5), 0, 1.0, 2.0), InvalidInput);
}

TEST(PeriodicOrbitTest, FixedPointIsValuation) {
  for (double v : {1.5, 2.0, 3.0}) {
    for (double eta : {0.5, 1.0, 2.0}) {
      const auto p = find_periodic_orbit(symmetric_entropic_map(v, eta), 1, 0.5, v + 0.5);
      ASSERT_TRUE(p.has_value());
      EXPECT_NEAR(p->point, v, 1e-12);
    }
  }
}

TEST(PeriodicOrbitTest, PeriodThreeOnset) {
  double threshold = NAN;
  for (int i = 0; i <= 20; ++i) {
    const double eta = 1.55 + 0.005 * i;
    const auto p = find_periodic_orbit(symmetric_entropic_map(2.0, eta), 3, 1.0, 2.0);
    if (!p) continue;
    if (std::isnan(threshold)) threshold = eta;
    const auto& o = p->orbit;
    EXPECT_GE(std::abs(o[0] - o[1]), 1e-6);
    EXPECT_GE(std::abs(o[1] - o[2]), 1e-6);
    EXPECT_GE(std::abs(o[0] - o[2]), 1e-6);
  }
  ASSERT_FALSE(std::isnan(threshold));
  EXPECT_LE(threshold, std::log(5.0));
}

TEST(FixedPointTest, Classification) {
  EXPECT_EQ(classify_fixed_point(symmetric_entropic_map(2.0, 0.9), 2.0).stability, Stability::kStable);
  EXPECT_EQ(classify_fixed_point(symmetric_entropic_map(2.0, 1.1), 2.0).stability, Stability::kUnstable);
  const FixedPointReport super = classify_fixed_point(symmetric_entropic_map(2.0, 0.5), 2.0);
  EXPECT_EQ(super.stability, Stability::kStable);
  EXPECT_EQ(super.derivative, 0.0);
  EXPECT_NEAR(super.fd_derivative, 0.0, 1e-8);
  EXPECT_EQ(classify_fixed_point(symmetric_entropic_map(2.0, 1.0), 2.0).stability, Stability::kMarginal);
  EXPECT_THROW(classify_fixed_point(symmetric_entropic_map(2.0, 0.9), 1.5), InvalidInput);
  ScalarMap no_derivative;
  no_derivative.f = [](double m) { return 0.5 * m + 1.0; };
  EXPECT_EQ(classify_fixed_point(no_derivative, 2.0).stability, Stability::kStable);
}

TEST(SchwarzianTest, ClosedForm) {
  for (double eta : {0.3, 1.0, 2.5}) {
    EXPECT_NEAR(schwarzian(symmetric_entropic_map(2.0, eta), 0.0), -3.0 * eta * eta, 1e-12);
  }
  EXPECT_NEAR(schwarzian(symmetric_entropic_map(2.0, 1.0), 2.0), -1.0, 1e-12);
  EXPECT_THROW(schwarzian(symmetric_entropic_map(2.0, 1.0), 1.0), InvalidInput);
}

TEST(SchwarzianTest, FiniteDifferencesAgree) {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> eta_dist(0.3, 3.0), m_dist(0.0, 4.0);
  int checked = 0;
  while (checked < 1000) {
    const double eta = eta_dist(rng), m = m_dist(rng);
    if (std::abs(m - 1.0 / eta) < 0.05) continue;
    const ScalarMap f = symmetric_entropic_map(2.0, eta);
    const double closed = schwarzian(f, m);
    EXPECT_LT(closed, 0.0);
    EXPECT_NEAR(schwarzian_fd(f, m), closed, 1e-4 * std::abs(closed)) << eta << " " << m;
    ++checked;
  }
}

TEST(BifurcationTest, EntropicBranches) {
  auto family = [](double eta) { return DiscreteMap::on(MapKind::kEntropic, symmetric_instance(2.0), eta); };
  BifurcationOptions opt;
  opt.burn_in = 2000;
  opt.keep = 50;
  for (const auto& row : bifurcation_scan(family, 0.5, 0.95, 10, {1.3, 1.3}, opt)) {
    EXPECT_NEAR(row.value, 2.0, 1e-6) << row.eta;
  }
  // Past the flip at eta v = 2 the orbit has period 2.
  for (const auto& row : bifurcation_scan(family, 1.05, 1.05, 2, {1.3, 1.3}, opt)) {
    EXPECT_NEAR(std::abs(row.value - 2.0), 0.7414, 1e-4);
  }
  std::vector<double> values;
  for (const auto& row : bifurcation_scan(family, 1.1, 1.1, 2, {1.3, 1.3}, opt)) values.push_back(row.value);
  std::sort(values.begin(), values.end());
  EXPECT_GT(values.back() - values.front(), 0.5);
  std::vector<double> branches{values.front()};
  for (double v : values) {
    if (v - branches.back() > 1e-6) branches.push_back(v);
  }
  EXPECT_EQ(branches.size(), 2u);
}

TEST(BifurcationTest, LogisticPeriodDoubling) {
  auto family = [](double eta) { return DiscreteMap::on(MapKind::kEuclidean, logistic_instance(), eta); };
  for (double r : {3.1, 3.3, 3.44}) {
    BifurcationOptions opt;
    opt.burn_in = 5000;
    opt.keep = 64;
    opt.transform = [r](double m) { return (r - 1.0) / (2.0 * r) * m; };
    std::vector<double> values;
    for (const auto& row : bifurcation_scan(family, r - 1.0, r - 1.0, 2, {0.5}, opt)) values.push_back(row.value);
    std::sort(values.begin(), values.end());
    std::vector<double> branches{values.front()};
    for (double v : values) {
      if (v - branches.back() > 1e-6) branches.push_back(v);
    }
    ASSERT_EQ(branches.size(), 2u) << r;
    // Period-2 points of the logistic map.
    const double disc = std::sqrt((r - 3.0) * (r + 1.0));
    EXPECT_NEAR(branches[0], (r + 1.0 - disc) / (2.0 * r), 1e-6);
    EXPECT_NEAR(branches[1], (r + 1.0 + disc) / (2.0 * r), 1e-6);
  }
}

TEST(BifurcationTest, DivergentRowsAreFlagged) {
  auto family = [](double eta) { return DiscreteMap::on(MapKind::kEntropic, symmetric_instance(2.0), eta); };
  const auto rows = bifurcation_scan(family, 0.5, 400.0, 2, {1.3, 1.3});
  EXPECT_FALSE(rows.front().diverged);
  EXPECT_TRUE(rows.back().diverged);
  EXPECT_TRUE(std::isnan(rows.back().value));
  EXPECT_THROW(bifurcation_scan(family, 0.5, 1.0, 1, {1.3, 1.3}), InvalidInput);
}

TEST(CobwebTest, Shapes) {
  const auto fixed = cobweb_trace(symmetric_entropic_map(2.0, 1.0), 2.0, 5);
  ASSERT_EQ(fixed.size(), 10u);
  for (const auto& s : fixed) {
    EXPECT_EQ(s.x0, 2.0);
    EXPECT_EQ(s.y1, 2.0);
  }
  const auto rect = cobweb_trace(symmetric_entropic_map(2.0, std::log(3.0)), 1.0, 2);
  ASSERT_EQ(rect.size(), 4u);
  EXPECT_NEAR(rect[0].y1, 3.0, 1e-12);
  EXPECT_NEAR(rect[1].x1, 3.0, 1e-12);
  EXPECT_NEAR(rect[2].y1, 1.0, 1e-12);
  EXPECT_NEAR(rect[3].x1, 1.0, 1e-12);
  const auto chaos = cobweb_trace(symmetric_entropic_map(2.0, 1.5), 1.3, 200);
  std::vector<double> xs;
  for (std::size_t k = 0; k < chaos.size(); k += 2) xs.push_back(chaos[k].x0);
  std::sort(xs.begin(), xs.end());
  for (std::size_t k = 1; k < xs.size(); ++k) EXPECT_GT(xs[k] - xs[k - 1], 0.0);
  EXPECT_THROW(cobweb_trace(symmetric_entropic_map(2.0, 1.5), 1.3, 0), InvalidInput);
}

}  // namespace
}  // namespace autobid
