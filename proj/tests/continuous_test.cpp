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


#include "autobid/continuous.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace autobid {
namespace {

VectorField decay(double rate) {
  return {1, [rate](const State& x, State& dx) { dx[0] = -rate * x[0]; }, {}};
}

VectorField oscillator() {
  return {2, [](const State& x, State& dx) {
            dx[0] = x[1];
            dx[1] = -x[0];
          }, {}};
}

// Negation of an input held at a constant value.
VectorField negation_pair(double lam, double input = 1.2) {
  VectorField f;
  f.dimension = 2;
  f.eval = [lam, input](const State& x, State& dx) {
    dx[0] = 1.0;
    dx[1] = lam * (3.0 - input - x[1]);
  };
  f.fast.push_back({1, lam, [input](const State&) { return 3.0 - input; }});
  return f;
}

TEST(IntegrateTest, ExponentialDecay) {
  const Trajectory t = integrate(decay(1.0), {1.0}, 1.0, IntegratorConfig{});
  EXPECT_EQ(t.times.back(), 1.0);
  EXPECT_NEAR(t.states.back()[0], std::exp(-1.0), 1e-8);
  for (std::size_t i = 1; i < t.size(); ++i) EXPECT_GT(t.times[i], t.times[i - 1]);
}

TEST(IntegrateTest, OutputGrid) {
  IntegratorConfig cfg;
  cfg.output_dt = 0.25;
  const Trajectory t = integrate(decay(2.0), {1.0}, 1.0, cfg);
  ASSERT_EQ(t.size(), 5u);
  for (int k = 0; k < 5; ++k) {
    EXPECT_DOUBLE_EQ(t.times[k], 0.25 * k);
    EXPECT_NEAR(t.states[k][0], std::exp(-0.5 * k), 1e-8);
  }
}

TEST(IntegrateTest, NegationAtRestStaysPut) {
  VectorField f;
  f.dimension = 2;
  const double lam = 100.0;
  f.eval = [lam](const State& x, State& dx) {
    dx[0] = 0.0;
    dx[1] = lam * (3.0 - x[0] - x[1]);
  };
  f.fast.push_back({1, lam, [](const State& x) { return 3.0 - x[0]; }});
  const Trajectory t = integrate(f, {1.5, 1.5}, 10.0);
  for (const State& s : t.states) EXPECT_EQ(s[1], 1.5);
}

TEST(IntegrateTest, ExponentialSubstepMatchesClosedForm) {
  const double lam = 1000.0;
  // Input 1.2 on [0, 0.004), then 1.7.
  VectorField first = negation_pair(lam, 1.2), second = negation_pair(lam, 1.7);
  IntegratorConfig cfg = default_config(first);
  ASSERT_EQ(cfg.method, Method::kRk45Exponential);
  State x = advance(first, {0.0, 1.9}, 0.0, 0.004, cfg);
  const double at1 = 1.8 + (1.9 - 1.8) * std::exp(-lam * 0.004);
  EXPECT_NEAR(x[1], at1, 1e-10);
  x = advance(second, x, 0.004, 0.007, cfg);
  EXPECT_NEAR(x[1], 1.3 + (at1 - 1.3) * std::exp(-lam * 0.003), 1e-10);
}

TEST(IntegrateTest, ExplicitMethodRejectsLargeStepWithFastCoordinates) {
  IntegratorConfig cfg;
  cfg.method = Method::kRk45;
  EXPECT_THROW(integrate(negation_pair(100.0), {0.0, 1.8}, 1.0, cfg), InvalidInput);
  cfg.max_step = 0.005;
  EXPECT_NO_THROW(integrate(negation_pair(100.0), {0.0, 1.8}, 0.5, cfg));
}

TEST(IntegrateTest, HarmonicEnergyConserved) {
  const Trajectory t = integrate(oscillator(), {1.0, 0.0}, 100.0, IntegratorConfig{});
  for (const State& s : t.states) EXPECT_NEAR(s[0] * s[0] + s[1] * s[1], 1.0, 1e-7);
  EXPECT_NEAR(t.states.back()[0], std::cos(100.0), 1e-7);
}

TEST(IntegrateTest, Rk4IsFourthOrder) {
  std::vector<double> err;
  for (double h : {0.1, 0.05, 0.025}) {
    IntegratorConfig cfg;
    cfg.method = Method::kRk4Fixed;
    cfg.step = h;
    cfg.max_step = 1.0;
    const State x = advance(oscillator(), {1.0, 0.0}, 0.0, 10.0, cfg);
    err.push_back(std::hypot(x[0] - std::cos(10.0), x[1] + std::sin(10.0)));
  }
  for (std::size_t i = 1; i < err.size(); ++i) EXPECT_GE(std::log2(err[i - 1] / err[i]), 3.5);
}

TEST(IntegrateTest, Rk45ErrorFallsWithFifthOrderSlope) {
  std::vector<double> err, steps;
  for (double tol : {1e-6, 1e-7, 1e-8, 1e-9}) {
    IntegratorConfig cfg;
    cfg.atol = cfg.rtol = tol;
    cfg.max_step = 10.0;
    const Trajectory t = integrate(oscillator(), {1.0, 0.0}, 10.0, cfg);
    const State& x = t.states.back();
    err.push_back(std::hypot(x[0] - std::cos(10.0), x[1] + std::sin(10.0)));
    steps.push_back(static_cast<double>(t.size() - 1));
  }
  const double slope = -std::log(err.back() / err.front()) / std::log(steps.back() / steps.front());
  EXPECT_GE(slope, 3.5);
}

TEST(IntegrateTest, DenseOutputIsAccurate) {
  VectorField f = oscillator();
  Stepper s(f, {1.0, 0.0}, 0.0, IntegratorConfig{});
  s.step(1.0);
  const double mid = 0.5 * (s.prev_t() + s.t());
  EXPECT_NEAR(s.dense(mid)[0], std::cos(mid), 1e-9);
  EXPECT_NEAR(s.dense_component(mid, 1), -std::sin(mid), 1e-9);
}

TEST(IntegrateTest, BlowUpIsReported) {
  VectorField f{1, [](const State& x, State& dx) { dx[0] = x[0] * x[0]; }, {}};
  EXPECT_THROW(integrate(f, {1.0}, 2.0, IntegratorConfig{}), NumericalError);
  VectorField nan{1, [](const State& x, State& dx) { dx[0] = x[0] > 1.5 ? NAN : 1.0; }, {}};
  try {
    integrate(nan, {1.0}, 2.0, IntegratorConfig{});
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_LE(e.last_good_time(), 0.5);
  } catch (const StiffnessError& e) {
    EXPECT_EQ(e.coordinate(), 0u);
  }
}

TEST(MarketFieldTest, SymmetricInstance) {
  const VectorField f = market_field(symmetric_instance(2.0));
  const State d = f({1.5, 1.5});
  EXPECT_DOUBLE_EQ(d[0], 0.5);
  EXPECT_DOUBLE_EQ(d[1], 0.5);
  const State z = f({2.0, 2.0});
  EXPECT_EQ(z[0], 0.0);
  EXPECT_EQ(z[1], 0.0);
}

TEST(MarketFieldTest, ConvergesToRestPoint) {
  const State x = advance(market_field(symmetric_instance(2.0)), {1.0, 1.0}, 0.0, 30.0, IntegratorConfig{});
  EXPECT_NEAR(x[0], 2.0, 1e-8);
  EXPECT_NEAR(x[1], 2.0, 1e-8);
}

}  // namespace
}  // namespace autobid
