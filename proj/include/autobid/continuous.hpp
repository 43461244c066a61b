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
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "autobid/error.hpp"
#include "autobid/market.hpp"

namespace autobid {

using State = std::vector<double>;

// A coordinate obeying dx_k/dt = rate * (target(x) - x_k), where target does
// not depend on x_k. Integrators may advance it exactly.
struct FastCoordinate {
  int index = 0;
  double rate = 1.0;
  std::function<double(const State&)> target;
};

struct VectorField {
  int dimension = 0;
  std::function<void(const State&, State&)> eval;  // writes dx/dt into the second argument
  std::vector<FastCoordinate> fast;

  State operator()(const State& x) const {
    State dx(dimension);
    eval(x, dx);
    return dx;
  }

  double max_fast_rate() const {
    double r = 0.0;
    for (const auto& f : fast) r = std::max(r, f.rate);
    return r;
  }
};

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;

  std::size_t size() const { return times.size(); }
  void push(double t, State x) {
    times.push_back(t);
    states.push_back(std::move(x));
  }
};

enum class Method { kRk4Fixed, kRk45, kRk45Exponential };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kRk4Fixed: return "rk4_fixed";
    case Method::kRk45: return "rk45_adaptive";
    case Method::kRk45Exponential: return "rk45_with_exponential_substep";
  }
  return "?";
}

struct IntegratorConfig {
  Method method = Method::kRk45;
  double step = 1e-3;  // rk4_fixed only
  double atol = 1e-9;
  double rtol = 1e-9;
  double max_step = 0.01;
  double output_dt = 0.0;  // 0 records every accepted step
};

// The default for a field: adaptive RK45, exponential substeps once fast
// rates reach 100, otherwise a step cap of 1/(2 lambda).
inline IntegratorConfig default_config(const VectorField& field) {
  IntegratorConfig cfg;
  const double lam = field.max_fast_rate();
  if (lam >= 100.0) {
    cfg.method = Method::kRk45Exponential;
  } else if (lam > 0.0) {
    cfg.max_step = std::min(cfg.max_step, 1.0 / (2.0 * lam));
  }
  return cfg;
}

inline void validate(const IntegratorConfig& cfg, const VectorField& field) {
  if (!(cfg.atol > 0.0) || !(cfg.rtol > 0.0) || !(cfg.max_step > 0.0) || !(cfg.step > 0.0)) {
    throw InvalidInput("integrator tolerances and steps must be positive");
  }
  if (cfg.output_dt < 0.0) throw InvalidInput("output_dt must be >= 0");
  for (const auto& f : field.fast) {
    if (!(f.rate > 0.0)) throw InvalidInput("fast coordinate rate must be positive");
    if (f.index < 0 || f.index >= field.dimension) throw InvalidInput("fast coordinate index out of range");
  }
  const double lam = field.max_fast_rate();
  if (lam > 0.0 && cfg.method != Method::kRk45Exponential) {
    const double h = cfg.method == Method::kRk4Fixed ? std::min(cfg.step, cfg.max_step) : cfg.max_step;
    if (h > 1.0 / (2.0 * lam)) {
      throw InvalidInput("explicit method with fast rate " + std::to_string(lam) +
                         " needs max_step <= " + std::to_string(1.0 / (2.0 * lam)));
    }
  }
}

namespace dp45 {
// Dormand-Prince 5(4) tableau.
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                        b6 = 11.0 / 84;
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
}  // namespace dp45

// Single-trajectory stepping engine with Hermite dense output over the last
// accepted step.
class Stepper {
 public:
  Stepper(const VectorField& field, State x0, double t0, IntegratorConfig cfg)
      : field_(field), cfg_(cfg), n_(field.dimension) {
    if (static_cast<int>(x0.size()) != n_) {
      throw InvalidInput("initial state has dimension " + std::to_string(x0.size()) + ", field has " +
                         std::to_string(n_));
    }
    validate(cfg_, field_);
    is_fast_.assign(n_, false);
    for (const auto& f : field_.fast) is_fast_[f.index] = true;
    for (auto& k : k_) k.resize(n_);
    tmp_.resize(n_);
    h_ = cfg_.method == Method::kRk4Fixed ? std::min(cfg_.step, cfg_.max_step)
                                          : std::min(cfg_.max_step, 1e-3);
    reset(t0, std::move(x0));
  }

  // Restart from an externally modified state.
  void reset(double t, State x) {
    for (double v : x) {
      if (!std::isfinite(v)) throw DivergenceError("non-finite initial state", t);
    }
    t_ = t;
    x_ = std::move(x);
    f_.resize(n_);
    field_.eval(x_, f_);
    t0_ = t_;
    x0_ = x_;
    f0_ = f_;
  }

  double t() const { return t_; }
  const State& x() const { return x_; }
  double prev_t() const { return t0_; }
  const State& prev_x() const { return x0_; }
  const IntegratorConfig& config() const { return cfg_; }

  // Advances by one accepted step without passing t_limit.
  void step(double t_limit) {
    const double remaining = t_limit - t_;
    if (!(remaining > 0.0)) return;
    t0_ = t_;
    x0_ = x_;
    f0_ = f_;
    switch (cfg_.method) {
      case Method::kRk4Fixed: step_rk4(remaining); break;
      case Method::kRk45: step_adaptive(remaining, false); break;
      case Method::kRk45Exponential: step_adaptive(remaining, true); break;
    }
    if (t_limit - t_ < 1e-12 * std::max(1.0, std::abs(t_limit))) t_ = t_limit;
  }

  // Cubic Hermite interpolant on [prev_t, t].
  State dense(double t) const {
    State out(n_);
    const double h = t_ - t0_;
    if (!(h > 0.0)) return x_;
    const double s = (t - t0_) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    for (int i = 0; i < n_; ++i) {
      out[i] = h00 * x0_[i] + h10 * h * f0_[i] + h01 * x_[i] + h11 * h * f_[i];
    }
    return out;
  }

  double dense_component(double t, int i) const {
    const double h = t_ - t0_;
    if (!(h > 0.0)) return x_[i];
    const double s = (t - t0_) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    return h00 * x0_[i] + h10 * h * f0_[i] + h01 * x_[i] + h11 * h * f_[i];
  }

 private:
  void accept(double h, State&& x_new) {
    for (double v : x_new) {
      if (!std::isfinite(v)) throw DivergenceError("state became non-finite", t_);
    }
    t_ += h;
    x_ = std::move(x_new);
    field_.eval(x_, f_);
    for (double v : f_) {
      if (!std::isfinite(v)) throw DivergenceError("vector field became non-finite", t0_);
    }
  }

  void step_rk4(double remaining) {
    const double h = std::min(h_, remaining);
    State& k1 = k_[0];
    State& k2 = k_[1];
    State& k3 = k_[2];
    State& k4 = k_[3];
    k1 = f_;
    for (int i = 0; i < n_; ++i) tmp_[i] = x_[i] + 0.5 * h * k1[i];
    field_.eval(tmp_, k2);
    for (int i = 0; i < n_; ++i) tmp_[i] = x_[i] + 0.5 * h * k2[i];
    field_.eval(tmp_, k3);
    for (int i = 0; i < n_; ++i) tmp_[i] = x_[i] + h * k3[i];
    field_.eval(tmp_, k4);
    State x_new(n_);
    for (int i = 0; i < n_; ++i) x_new[i] = x_[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    accept(h, std::move(x_new));
  }

  // Exact solution of dy/dt = rate (g(t) - y) over time h, with g linear
  // from the target at x0 to the target at x1; writes the fast coordinates
  // of x1.
  void relax_fast_linear(const State& x0, State& x1, double h) const {
    for (const auto& f : field_.fast) {
      const double g0 = f.target(x0), g1 = f.target(x1);
      const double rh = f.rate * h;
      const double decay = std::exp(-rh);
      const double phi = rh > 0.0 ? -std::expm1(-rh) / rh : 1.0;
      x1[f.index] = decay * x0[f.index] + (1.0 - decay) * g0 + (g1 - g0) * (1.0 - phi);
    }
  }

  // One Dormand-Prince attempt from y with initial slope k1; returns the
  // scaled error norm and the coordinate dominating it.
  double dp_attempt(const State& y, double h, State& y_new, int& worst, bool freeze_fast) {
    using namespace dp45;
    auto& k = k_;
    auto stage = [&](State& out, double c, auto&& combine) {
      for (int i = 0; i < n_; ++i) tmp_[i] = (freeze_fast && is_fast_[i]) ? y[i] : y[i] + h * combine(i);
      if (freeze_fast) relax_fast_linear(y, tmp_, c * h);
      field_.eval(tmp_, out);
    };
    stage(k[1], c2, [&](int i) { return a21 * k[0][i]; });
    stage(k[2], c3, [&](int i) { return a31 * k[0][i] + a32 * k[1][i]; });
    stage(k[3], c4, [&](int i) { return a41 * k[0][i] + a42 * k[1][i] + a43 * k[2][i]; });
    stage(k[4], c5, [&](int i) { return a51 * k[0][i] + a52 * k[1][i] + a53 * k[2][i] + a54 * k[3][i]; });
    stage(k[5], 1.0, [&](int i) {
      return a61 * k[0][i] + a62 * k[1][i] + a63 * k[2][i] + a64 * k[3][i] + a65 * k[4][i];
    });
    y_new.resize(n_);
    for (int i = 0; i < n_; ++i) {
      y_new[i] = (freeze_fast && is_fast_[i])
                     ? y[i]
                     : y[i] + h * (b1 * k[0][i] + b3 * k[2][i] + b4 * k[3][i] + b5 * k[4][i] + b6 * k[5][i]);
    }
    if (freeze_fast) relax_fast_linear(y, y_new, h);
    field_.eval(y_new, k[6]);
    double sum = 0.0;
    double worst_term = -1.0;
    int counted = 0;
    worst = 0;
    for (int i = 0; i < n_; ++i) {
      if (freeze_fast && is_fast_[i]) continue;
      const double err = h * (e1 * k[0][i] + e3 * k[2][i] + e4 * k[3][i] + e5 * k[4][i] + e6 * k[5][i] +
                              e7 * k[6][i]);
      const double scale = cfg_.atol + cfg_.rtol * std::max(std::abs(y[i]), std::abs(y_new[i]));
      const double term = (err / scale) * (err / scale);
      if (!std::isfinite(term) || term > worst_term) {
        worst_term = std::isfinite(term) ? term : std::numeric_limits<double>::infinity();
        worst = i;
      }
      sum += term;
      ++counted;
    }
    return counted ? std::sqrt(sum / counted) : 0.0;
  }

  void step_adaptive(double remaining, bool exponential) {
    State y_new;
    for (;;) {
      const double h = std::min({h_, remaining, cfg_.max_step});
      if (h < 1e-14) {
        throw StiffnessError("step size fell below 1e-14", worst_coord_, t_);
      }
      int worst = 0;
      double err;
      if (exponential) {
        // Slow coordinates take a Dormand-Prince step; at every stage the
        // fast coordinates are solved exactly against a target interpolated
        // linearly from the step start to that stage.
        k_[0] = f_;
        err = dp_attempt(x_, h, y_new, worst, true);
      } else {
        k_[0] = f_;
        err = dp_attempt(x_, h, y_new, worst, false);
      }
      worst_coord_ = worst;
      if (std::isfinite(err) && err <= 1.0) {
        const double grow = err == 0.0 ? 5.0 : std::min(5.0, std::max(0.2, 0.9 * std::pow(err, -0.2)));
        // Keep the unclamped proposal so a short final step does not shrink the next one.
        if (h == std::min(h_, cfg_.max_step)) {
          h_ = std::min(h * grow, cfg_.max_step);
        } else {
          h_ = std::max(h_, std::min(h * grow, cfg_.max_step));
        }
        accept(h, std::move(y_new));
        return;
      }
      const double shrink = std::isfinite(err) ? std::max(0.1, 0.9 * std::pow(err, -0.25)) : 0.1;
      h_ = h * shrink;
    }
  }

  const VectorField& field_;
  IntegratorConfig cfg_;
  int n_;
  std::vector<bool> is_fast_;
  std::array<State, 7> k_;
  State tmp_;
  double h_ = 1e-3;
  int worst_coord_ = 0;
  double t_ = 0.0;
  State x_, f_;
  double t0_ = 0.0;
  State x0_, f0_;
};

inline Trajectory integrate(const VectorField& field, const State& x0, double t_end,
                            const IntegratorConfig& cfg) {
  if (!(t_end > 0.0)) throw InvalidInput("t_end must be positive");
  Stepper stepper(field, x0, 0.0, cfg);
  Trajectory traj;
  traj.push(0.0, x0);
  if (cfg.output_dt > 0.0) {
    long next = 1;
    while (stepper.t() < t_end) {
      stepper.step(t_end);
      for (;;) {
        const double tk = std::min(next * cfg.output_dt, t_end);
        if (tk > stepper.t() || tk <= traj.times.back()) break;
        traj.push(tk, tk == stepper.t() ? stepper.x() : stepper.dense(tk));
        ++next;
      }
    }
    if (traj.times.back() < t_end) traj.push(t_end, stepper.x());
  } else {
    while (stepper.t() < t_end) {
      stepper.step(t_end);
      traj.push(stepper.t(), stepper.x());
    }
  }
  return traj;
}

inline Trajectory integrate(const VectorField& field, const State& x0, double t_end) {
  return integrate(field, x0, t_end, default_config(field));
}

// Final state only.
inline State advance(const VectorField& field, const State& x0, double t0, double t1,
                     const IntegratorConfig& cfg) {
  Stepper stepper(field, x0, t0, cfg);
  while (stepper.t() < t1) stepper.step(t1);
  return stepper.x();
}

inline VectorField market_field(MarketInstance instance) {
  validate(instance);
  auto inst = std::make_shared<const MarketInstance>(std::move(instance));
  VectorField f;
  f.dimension = inst->n_bidders;
  f.eval = [inst](const State& m, State& dm) { dm = utility(*inst, m); };
  return f;
}

}  // namespace autobid
