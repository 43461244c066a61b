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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autobid/error.hpp"

namespace autobid {

enum class Shape {
  kZero,
  kIdentity,
  kSine,
  kTanh,
  kCubic,
  kPiecewiseLinear,  // params: x0, y0, x1, y1, ... with increasing x
  kChuaDiode,        // params: G_a, G_b
};

inline std::string_view to_string(Shape shape) {
  switch (shape) {
    case Shape::kZero: return "zero";
    case Shape::kIdentity: return "identity";
    case Shape::kSine: return "sin";
    case Shape::kTanh: return "tanh";
    case Shape::kCubic: return "cubic";
    case Shape::kPiecewiseLinear: return "piecewise_linear";
    case Shape::kChuaDiode: return "chua_diode";
  }
  return "?";
}

inline Shape shape_from_string(std::string_view name) {
  for (Shape s : {Shape::kZero, Shape::kIdentity, Shape::kSine, Shape::kTanh,
                  Shape::kCubic, Shape::kPiecewiseLinear, Shape::kChuaDiode}) {
    if (to_string(s) == name) return s;
  }
  throw InvalidInput("unknown function shape '" + std::string(name) + "'");
}

// A serializable scalar function of one variable:
//
//   f(x) = outer * base(inner * x + shift) + linear * x + offset
//
// The affine wrapper is closed under the operations the reduction needs
// (conjugation by an affine change of variables, adding a linear term), so
// compiled markets stay describable in a file.
struct ScalarFunction {
  Shape shape = Shape::kZero;
  std::vector<double> params;
  double outer = 1.0;
  double inner = 1.0;
  double shift = 0.0;
  double linear = 0.0;
  double offset = 0.0;

  static ScalarFunction zero() { return {}; }
  static ScalarFunction affine(double slope, double intercept) {
    ScalarFunction f;
    f.linear = slope;
    f.offset = intercept;
    return f;
  }
  static ScalarFunction of(Shape shape, std::vector<double> params = {}) {
    ScalarFunction f;
    f.shape = shape;
    f.params = std::move(params);
    f.validate();
    return f;
  }

  void validate() const {
    switch (shape) {
      case Shape::kChuaDiode:
        if (params.size() != 2) throw InvalidInput("chua_diode needs params [G_a, G_b]");
        break;
      case Shape::kPiecewiseLinear: {
        if (params.size() < 4 || params.size() % 2 != 0) {
          throw InvalidInput("piecewise_linear needs at least two (x, y) pairs");
        }
        for (std::size_t i = 2; i < params.size(); i += 2) {
          if (!(params[i] > params[i - 2])) {
            throw InvalidInput("piecewise_linear abscissae must be strictly increasing");
          }
        }
        break;
      }
      default:
        if (!params.empty()) {
          throw InvalidInput("shape '" + std::string(to_string(shape)) + "' takes no params");
        }
    }
    for (double v : params) {
      if (!std::isfinite(v)) throw InvalidInput("non-finite function parameter");
    }
    for (double v : {outer, inner, shift, linear, offset}) {
      if (!std::isfinite(v)) throw InvalidInput("non-finite function coefficient");
    }
  }

  double base(double u) const {
    switch (shape) {
      case Shape::kZero: return 0.0;
      case Shape::kIdentity: return u;
      case Shape::kSine: return std::sin(u);
      case Shape::kTanh: return std::tanh(u);
      case Shape::kCubic: return u * u * u;
      case Shape::kChuaDiode:
        return params[1] * u + 0.5 * (params[0] - params[1]) * (std::abs(u + 1.0) - std::abs(u - 1.0));
      case Shape::kPiecewiseLinear: {
        const std::size_t n = params.size() / 2;
        std::size_t k = 0;  // segment [k, k+1], extrapolating with the end slopes
        while (k + 2 < n && u > params[2 * (k + 1)]) ++k;
        const double x0 = params[2 * k], y0 = params[2 * k + 1];
        const double x1 = params[2 * k + 2], y1 = params[2 * k + 3];
        return y0 + (y1 - y0) * (u - x0) / (x1 - x0);
      }
    }
    return 0.0;
  }

  // Right derivative at kinks.
  double base_derivative(double u) const {
    switch (shape) {
      case Shape::kZero: return 0.0;
      case Shape::kIdentity: return 1.0;
      case Shape::kSine: return std::cos(u);
      case Shape::kTanh: {
        const double t = std::tanh(u);
        return 1.0 - t * t;
      }
      case Shape::kCubic: return 3.0 * u * u;
      case Shape::kChuaDiode: return (u >= -1.0 && u < 1.0) ? params[0] : params[1];
      case Shape::kPiecewiseLinear: {
        const std::size_t n = params.size() / 2;
        std::size_t k = 0;
        while (k + 2 < n && u >= params[2 * (k + 1)]) ++k;
        return (params[2 * k + 3] - params[2 * k + 1]) / (params[2 * k + 2] - params[2 * k]);
      }
    }
    return 0.0;
  }

  double operator()(double x) const { return outer * base(inner * x + shift) + linear * x + offset; }

  double derivative(double x) const {
    return outer * inner * base_derivative(inner * x + shift) + linear;
  }

  // Kinks of the base shape, mapped back to x.
  std::vector<double> breakpoints() const {
    std::vector<double> u;
    if (shape == Shape::kChuaDiode) {
      u = {-1.0, 1.0};
    } else if (shape == Shape::kPiecewiseLinear) {
      for (std::size_t i = 0; i < params.size(); i += 2) u.push_back(params[i]);
    }
    std::vector<double> x;
    if (inner == 0.0) return x;
    for (double v : u) x.push_back((v - shift) / inner);
    std::sort(x.begin(), x.end());
    return x;
  }

  // g(s) = alpha * f((s - beta) / alpha): the function seen by the coordinate
  // s = alpha * x + beta when f enters the equation for x.
  ScalarFunction conjugated(double alpha, double beta) const {
    ScalarFunction g = *this;
    g.outer = alpha * outer;
    g.inner = inner / alpha;
    g.shift = shift - inner * beta / alpha;
    g.linear = linear;
    g.offset = alpha * offset - linear * beta;
    return g;
  }

  ScalarFunction plus_linear(double slope, double intercept = 0.0) const {
    ScalarFunction g = *this;
    g.linear += slope;
    g.offset += intercept;
    return g;
  }

  ScalarFunction scaled(double factor) const {
    ScalarFunction g = *this;
    g.outer *= factor;
    g.linear *= factor;
    g.offset *= factor;
    return g;
  }

  bool is_affine() const {
    return shape == Shape::kZero || shape == Shape::kIdentity || outer == 0.0 || inner == 0.0;
  }
};

struct SlopeRange {
  double min;
  double max;
};

// Derivative range on [lo, hi] by dense sampling (kinks included).
inline SlopeRange sample_slopes(const ScalarFunction& f, double lo, double hi,
                                std::size_t samples = 100000) {
  SlopeRange r{f.derivative(lo), f.derivative(lo)};
  auto visit = [&](double x) {
    const double d = f.derivative(x);
    if (!std::isfinite(d)) throw InvalidInput("function derivative is not finite on the box");
    r.min = std::min(r.min, d);
    r.max = std::max(r.max, d);
  };
  for (std::size_t k = 0; k <= samples; ++k) {
    visit(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(samples));
  }
  for (double b : f.breakpoints()) {
    if (b >= lo && b <= hi) visit(b);
  }
  return r;
}

// Derivative bound L with the 5% sampling margin.
inline double estimate_lipschitz(const ScalarFunction& f, double lo, double hi) {
  const SlopeRange r = sample_slopes(f, lo, hi);
  return 1.05 * std::max(std::abs(r.min), std::abs(r.max));
}

}  // namespace autobid
