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
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "autobid/continuous.hpp"
#include "autobid/error.hpp"
#include "autobid/market.hpp"

namespace autobid {

// A one-dimensional map with optional closed-form derivative and Schwarzian.
struct ScalarMap {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> derivative;
  std::function<double(double)> schwarzian;

  double operator()(double m) const { return f(m); }

  double iterate(double m, int k) const {
    for (int j = 0; j < k; ++j) m = f(m);
    return m;
  }
};

// F(m) = m exp(eta (v - m)): the entropic map on V = [[v, 1], [1, v]] at
// symmetric states.
inline ScalarMap symmetric_entropic_map(double v, double eta) {
  ScalarMap s;
  s.name = "symmetric_entropic";
  s.f = [v, eta](double m) { return m * std::exp(eta * (v - m)); };
  s.derivative = [v, eta](double m) { return std::exp(eta * (v - m)) * (1.0 - eta * m); };
  s.schwarzian = [eta](double m) {
    const double q = 1.0 - eta * m;
    if (q == 0.0) throw InvalidInput("Schwarzian is singular at the critical point m = 1/eta");
    return -eta * eta * (6.0 - 4.0 * eta * m + eta * eta * m * m) / (2.0 * q * q);
  };
  return s;
}

inline ScalarMap truncated_symmetric_map(double v, double eta) {
  ScalarMap s;
  s.name = "truncated_symmetric";
  s.f = [v, eta](double m) { return std::max(1.0, m * std::exp(eta * (v - m))); };
  return s;
}

inline ScalarMap euclidean_symmetric_map(double v, double eta) {
  ScalarMap s;
  s.name = "euclidean_symmetric";
  s.f = [v, eta](double m) { return std::max(0.0, m + eta * (v - m)); };
  s.derivative = [eta](double) { return 1.0 - eta; };
  return s;
}

inline ScalarMap ricker_map(double r, double k) {
  ScalarMap s;
  s.name = "ricker";
  s.f = [r, k](double n) { return n * std::exp(r * (1.0 - n / k)); };
  s.derivative = [r, k](double n) { return std::exp(r * (1.0 - n / k)) * (1.0 - r * n / k); };
  return s;
}

inline ScalarMap logistic_map(double r) {
  ScalarMap s;
  s.name = "logistic";
  s.f = [r](double x) { return r * x * (1.0 - x); };
  s.derivative = [r](double x) { return r * (1.0 - 2.0 * x); };
  return s;
}

// Gradient descent on u(m) = m - m^2/2 with eta = r - 1, in multiplier units.
inline ScalarMap rescaled_logistic_map(double r) {
  ScalarMap s;
  s.name = "rescaled_logistic";
  s.f = [r](double m) { return std::max(0.0, r * m * (1.0 - (r - 1.0) / (2.0 * r) * m)); };
  s.derivative = [r](double m) { return r - (r - 1.0) * m; };
  return s;
}

// Entropic descent on u(m) = m - m^2/2.
inline ScalarMap newcomp_map(double eta) {
  ScalarMap s;
  s.name = "newcomp";
  s.f = [eta](double m) { return m * std::exp(eta * (m - 0.5 * m * m)); };
  s.derivative = [eta](double m) {
    return std::exp(eta * (m - 0.5 * m * m)) * (1.0 + eta * m * (1.0 - m));
  };
  return s;
}

enum class MapKind { kEntropic, kEuclidean, kTruncatedEntropic, kClosedForm };

inline const char* to_string(MapKind k) {
  switch (k) {
    case MapKind::kEntropic: return "entropic";
    case MapKind::kEuclidean: return "euclidean";
    case MapKind::kTruncatedEntropic: return "truncated";
    case MapKind::kClosedForm: return "closed_form_1d";
  }
  return "?";
}

inline constexpr double kMaxMultiplier = 1e12;
inline constexpr double kMaxExponent = 700.0;

struct DiscreteMap {
  MapKind kind = MapKind::kEntropic;
  double eta = 1.0;
  std::shared_ptr<const MarketInstance> instance;
  ScalarMap closed_form;  // applied coordinatewise when kind is kClosedForm

  static DiscreteMap on(MapKind kind, MarketInstance inst, double eta) {
    if (kind == MapKind::kClosedForm) throw InvalidInput("closed-form maps carry no instance");
    if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("learning rate must be positive");
    validate(inst);
    DiscreteMap map;
    map.kind = kind;
    map.eta = eta;
    map.instance = std::make_shared<const MarketInstance>(std::move(inst));
    return map;
  }

  static DiscreteMap of(ScalarMap f) {
    DiscreteMap map;
    map.kind = MapKind::kClosedForm;
    map.closed_form = std::move(f);
    return map;
  }

  int dimension() const { return instance ? instance->n_bidders : -1; }
};

namespace detail {

inline std::string guard_message(const char* what, int i, double u, double eta) {
  return std::string(what) + " at bidder " + std::to_string(i) + " (u = " + std::to_string(u) +
         ", eta = " + std::to_string(eta) + ")";
}

inline Profile apply_map(const DiscreteMap& map, const Profile& m, const std::vector<double>& u,
                         double when) {
  Profile next(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i] < 0.0) throw InvalidInput("multipliers must be nonnegative");
    const int bidder = static_cast<int>(i);
    switch (map.kind) {
      case MapKind::kEuclidean:
        next[i] = std::max(0.0, m[i] + map.eta * u[i]);
        break;
      case MapKind::kEntropic:
      case MapKind::kTruncatedEntropic: {
        const double e = map.eta * u[i];
        if (e > kMaxExponent) {
          throw DivergenceError(detail::guard_message("exponent overflow", bidder, u[i], map.eta), when);
        }
        next[i] = m[i] * std::exp(e);
        if (map.kind == MapKind::kTruncatedEntropic) next[i] = std::max(1.0, next[i]);
        break;
      }
      case MapKind::kClosedForm:
        next[i] = map.closed_form(m[i]);
        break;
    }
    if (!std::isfinite(next[i]) || next[i] > kMaxMultiplier) {
      throw DivergenceError(detail::guard_message("multiplier exceeded 1e12", bidder, u.empty() ? 0.0 : u[i],
                                                  map.eta),
                            when);
    }
  }
  return next;
}

}  // namespace detail

inline Profile step(const DiscreteMap& map, const Profile& m) {
  if (map.kind == MapKind::kClosedForm) return detail::apply_map(map, m, {}, 0.0);
  return detail::apply_map(map, m, utility(*map.instance, m), 0.0);
}

inline Profile entropic_step(const DiscreteMap& map, const Profile& m) {
  if (map.kind != MapKind::kEntropic) throw InvalidInput("not an entropic map");
  return step(map, m);
}
inline Profile euclidean_step(const DiscreteMap& map, const Profile& m) {
  if (map.kind != MapKind::kEuclidean) throw InvalidInput("not a Euclidean map");
  return step(map, m);
}
inline Profile truncated_entropic_step(const DiscreteMap& map, const Profile& m) {
  if (map.kind != MapKind::kTruncatedEntropic) throw InvalidInput("not a truncated map");
  return step(map, m);
}

// The instance-driven map restricted to the diagonal m_1 = ... = m_n.
inline ScalarMap symmetric_slice(const DiscreteMap& map) {
  ScalarMap s;
  s.name = std::string(to_string(map.kind)) + "_slice";
  s.f = [map](double m) {
    const int n = map.kind == MapKind::kClosedForm ? 1 : map.dimension();
    return step(map, Profile(n, m))[0];
  };
  return s;
}

// Neumaier's variant of compensated summation.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      c_ += (sum_ - t) + x;
    } else {
      c_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

struct Orbit {
  Trajectory states;  // times are step indices
  std::vector<double> welfare;
  std::vector<double> revenue;
  double mean_welfare = std::numeric_limits<double>::quiet_NaN();
  double mean_revenue = std::numeric_limits<double>::quiet_NaN();
};

struct IterateOptions {
  long burn_in = -1;  // negative: 20% of the horizon
  bool record = true;
};

// Iterates T steps from m0. Welfare and revenue are averaged over the states
// at steps burn_in..T; closed-form maps have none.
inline Orbit iterate(const DiscreteMap& map, Profile m, long T, IterateOptions opt = {}) {
  if (T <= 0) throw InvalidInput("number of steps must be positive");
  const long burn_in = opt.burn_in < 0 ? T / 5 : opt.burn_in;
  if (burn_in >= T) throw InvalidInput("burn-in must be smaller than the number of steps");
  if (map.instance) check_profile(*map.instance, m);
  const bool market = map.kind != MapKind::kClosedForm;
  Orbit orbit;
  KahanSum w_sum, r_sum;
  for (long t = 0;; ++t) {
    MarketOutcome o;
    if (market) o = evaluate(*map.instance, m);
    if (opt.record) {
      orbit.states.push(static_cast<double>(t), m);
      if (market) {
        orbit.welfare.push_back(o.welfare);
        orbit.revenue.push_back(o.revenue);
      }
    }
    if (market && t >= burn_in) {
      w_sum.add(o.welfare);
      r_sum.add(o.revenue);
    }
    if (t == T) break;
    m = detail::apply_map(map, m, o.utility, static_cast<double>(t));
  }
  if (market) {
    const double count = static_cast<double>(T - burn_in + 1);
    orbit.mean_welfare = w_sum.value() / count;
    orbit.mean_revenue = r_sum.value() / count;
  }
  return orbit;
}

}  // namespace autobid
