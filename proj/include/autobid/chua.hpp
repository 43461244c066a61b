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


#pragma once

#include <cmath>
#include <vector>

#include "autobid/continuous.hpp"
#include "autobid/reduction.hpp"
#include "autobid/scalar_function.hpp"

namespace autobid {

struct ChuaParams {
  double C1 = 1.0;
  double C2 = 9.3515;
  double L = 0.06913;
  double R = 0.33065;
  double Ga = -3.4429;
  double Gb = -2.1849;
  double R0 = 0.00036;

  double G() const { return 1.0 / R; }

  void validate() const {
    if (!(C1 > 0 && C2 > 0 && L > 0 && R > 0)) throw InvalidInput("Chua parameters C1, C2, L, R must be positive");
  }
};

// Three-segment piecewise-linear characteristic.
inline double diode(double x, const ChuaParams& p) {
  return p.Gb * x + 0.5 * (p.Ga - p.Gb) * (std::abs(x + 1.0) - std::abs(x - 1.0));
}

inline ScalarFunction diode_function(const ChuaParams& p) {
  return ScalarFunction::of(Shape::kChuaDiode, {p.Ga, p.Gb});
}

inline void chua_rhs(const State& s, State& ds, const ChuaParams& p) {
  const double G = p.G();
  ds[0] = (G * (s[1] - s[0]) - diode(s[0], p)) / p.C1;
  ds[1] = (G * (s[0] - s[1]) + s[2]) / p.C2;
  ds[2] = (-s[1] - p.R0 * s[2]) / p.L;
}

inline VectorField chua_field(const ChuaParams& p = {}) {
  p.validate();
  return {3, [p](const State& s, State& ds) { chua_rhs(s, ds, p); }, {}};
}

// The diode after adding and subtracting x: -g(x) - Gx - x.
inline double shifted_diode(double x, const ChuaParams& p) { return -diode(x, p) - p.G() * x - x; }

// State (x, y, z, xb, yb, zb) in circuit units; each bar coordinate relaxes
// toward 3 minus its partner at rate lam.
inline VectorField augmented_field(double lam, const ChuaParams& p = {}) {
  p.validate();
  if (!(lam >= 1.0)) throw InvalidInput("lambda must be >= 1");
  VectorField f;
  f.dimension = 6;
  f.eval = [p, lam](const State& s, State& ds) {
    const double G = p.G();
    ds[0] = ((3.0 - s[3]) + G * (3.0 - s[4]) + shifted_diode(s[0], p)) / p.C1;
    ds[1] = (G * (3.0 - s[3]) - G * s[1] + (3.0 - s[5])) / p.C2;
    ds[2] = (-s[1] - p.R0 * s[2]) / p.L;
    for (int k = 0; k < 3; ++k) ds[3 + k] = lam * (3.0 - s[k] - s[3 + k]);
  };
  for (int k = 0; k < 3; ++k) {
    f.fast.push_back({3 + k, lam, [k](const State& s) { return 3.0 - s[k]; }});
  }
  return f;
}

inline TargetSystem chua_as_target(const ChuaParams& p = {}) {
  p.validate();
  const double G = p.G();
  TargetSystem t;
  t.A = {{0.0, G / p.C1, 0.0},
         {G / p.C2, -G / p.C2, 1.0 / p.C2},
         {0.0, -1.0 / p.L, -p.R0 / p.L}};
  t.h = {diode_function(p).scaled(-1.0 / p.C1).plus_linear(-G / p.C1), ScalarFunction::zero(),
         ScalarFunction::zero()};
  t.box = {{-2.5, 2.5}, {-0.45, 0.45}, {-9.5, 9.5}};
  t.slope_shift = {1.0 / p.C1, 0.0, 0.0};
  return t;
}

// Circuit-unit state for multiplier-unit coordinates (s, s_bar): bar
// coordinates map through x_bar = 3 - decode(3 - s_bar).
inline State augmented_from_multipliers(const State& m, const std::vector<AffineCoordinate>& c) {
  State x(6);
  for (int k = 0; k < 3; ++k) {
    x[k] = c[k].decode(m[k]);
    x[3 + k] = 3.0 - c[k].decode(3.0 - m[3 + k]);
  }
  return x;
}

inline State augmented_to_multipliers(const State& x, const std::vector<AffineCoordinate>& c) {
  State m(6);
  for (int k = 0; k < 3; ++k) {
    m[k] = c[k].encode(x[k]);
    m[3 + k] = 3.0 - c[k].encode(3.0 - x[3 + k]);
  }
  return m;
}

// augmented_field conjugated into multiplier units; the map is affine with
// slope alpha_k on both members of pair k.
inline VectorField conjugated_augmented_field(double lam, const ChuaParams& p = {}) {
  const TargetSystem t = normalize(chua_as_target(p));
  const std::vector<AffineCoordinate> c = t.coords;
  VectorField raw = augmented_field(lam, p);
  VectorField f;
  f.dimension = 6;
  f.eval = [raw, c](const State& m, State& dm) {
    raw.eval(augmented_from_multipliers(m, c), dm);
    for (int k = 0; k < 3; ++k) {
      dm[k] *= c[k].alpha;
      dm[3 + k] *= c[k].alpha;
    }
  };
  for (int k = 0; k < 3; ++k) {
    f.fast.push_back({3 + k, lam, [k](const State& m) { return 3.0 - m[k]; }});
  }
  return f;
}

}  // namespace autobid
