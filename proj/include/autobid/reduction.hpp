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
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "autobid/continuous.hpp"
#include "autobid/error.hpp"
#include "autobid/market.hpp"
#include "autobid/scalar_function.hpp"

namespace autobid {

using Matrix = std::vector<std::vector<double>>;

inline constexpr double kBoxLo = 1.1;
inline constexpr double kBoxHi = 1.9;
// Band in which every gadget is exact.
inline constexpr double kBandLo = 1.05;
inline constexpr double kBandHi = 1.95;
inline constexpr double kPeggedMultiplier = 2.0;

// s = alpha * x + beta.
struct AffineCoordinate {
  double alpha = 1.0;
  double beta = 0.0;

  double encode(double x) const { return alpha * x + beta; }
  double decode(double s) const { return (s - beta) / alpha; }

  static AffineCoordinate onto_box(double lo, double hi) {
    const double a = (kBoxHi - kBoxLo) / (hi - lo);
    return {a, kBoxLo - a * lo};
  }
};

// dx_i/dt = sum_j A_ij x_j + h_i(x_i) on a box.
struct TargetSystem {
  Matrix A;
  std::vector<ScalarFunction> h;
  std::vector<std::pair<double, double>> box;
  bool normalized = false;
  std::optional<double> lipschitz;      // shared bound on |h_i'|; estimated when absent
  std::vector<double> slope_shift;      // per-coordinate override; NaN or empty means automatic
  std::vector<AffineCoordinate> coords;  // filled by normalize()

  int dimension() const { return static_cast<int>(A.size()); }

  std::vector<double> field(const std::vector<double>& x) const {
    const int d = dimension();
    std::vector<double> dx(d);
    for (int i = 0; i < d; ++i) {
      double acc = h[i](x[i]);
      for (int j = 0; j < d; ++j) acc += A[i][j] * x[j];
      dx[i] = acc;
    }
    return dx;
  }

  std::vector<double> encode(const std::vector<double>& x) const {
    std::vector<double> s(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s[i] = coords.empty() ? x[i] : coords[i].encode(x[i]);
    return s;
  }
  std::vector<double> decode(const std::vector<double>& s) const {
    std::vector<double> x(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) x[i] = coords.empty() ? s[i] : coords[i].decode(s[i]);
    return x;
  }
};

inline void validate(const TargetSystem& t) {
  const int d = t.dimension();
  if (d <= 0) throw InvalidInput("target system needs at least one coordinate");
  for (const auto& row : t.A) {
    if (static_cast<int>(row.size()) != d) throw InvalidInput("matrix A must be square");
    for (double a : row) {
      if (!std::isfinite(a)) throw InvalidInput("matrix A has a non-finite entry");
    }
  }
  if (static_cast<int>(t.h.size()) != d) throw InvalidInput("need one nonlinearity per coordinate");
  for (const auto& f : t.h) f.validate();
  if (static_cast<int>(t.box.size()) != d) throw InvalidInput("need one box interval per coordinate");
  for (const auto& [lo, hi] : t.box) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw InvalidInput("unsupported target: state box must be bounded with lo < hi");
    }
  }
  if (t.lipschitz && !(*t.lipschitz >= 0.0 && std::isfinite(*t.lipschitz))) {
    throw InvalidInput("unsupported target: Lipschitz bound must be finite and >= 0");
  }
  if (!t.slope_shift.empty() && static_cast<int>(t.slope_shift.size()) != d) {
    throw InvalidInput("slope_shift must have one entry per coordinate");
  }
  if (t.normalized) {
    for (const auto& [lo, hi] : t.box) {
      if (lo != kBoxLo || hi != kBoxHi) throw InvalidInput("normalized targets live on [1.1, 1.9]");
    }
  }
}

namespace detail {

inline double sup_slope(const ScalarFunction& f, double lo, double hi) {
  return sample_slopes(f, lo, hi, 20000).max;
}

}  // namespace detail

// Affinely conjugates the target onto [1.1, 1.9]^d and shifts slope from each
// nonlinearity into the diagonal so that every h_i is nonincreasing.
inline TargetSystem normalize(const TargetSystem& target) {
  validate(target);
  const int d = target.dimension();
  if (target.normalized) {
    for (int i = 0; i < d; ++i) {
      if (detail::sup_slope(target.h[i], kBoxLo, kBoxHi) > 0.0) {
        throw InvalidInput("normalized target has a rising nonlinearity in coordinate " + std::to_string(i));
      }
    }
    TargetSystem out = target;
    if (out.coords.empty()) out.coords.assign(d, AffineCoordinate{});
    return out;
  }
  TargetSystem out;
  out.normalized = true;
  out.lipschitz = target.lipschitz;
  out.box.assign(d, {kBoxLo, kBoxHi});
  out.A.assign(d, std::vector<double>(d, 0.0));
  for (int i = 0; i < d; ++i) out.coords.push_back(AffineCoordinate::onto_box(target.box[i].first, target.box[i].second));
  for (int i = 0; i < d; ++i) {
    const AffineCoordinate ci = out.coords[i];
    double constant = 0.0;
    for (int j = 0; j < d; ++j) {
      const AffineCoordinate cj = out.coords[j];
      out.A[i][j] = ci.alpha * target.A[i][j] / cj.alpha;
      constant -= ci.alpha * target.A[i][j] * cj.beta / cj.alpha;
    }
    ScalarFunction hs = target.h[i].conjugated(ci.alpha, ci.beta).plus_linear(0.0, constant);
    const double L = target.lipschitz ? *target.lipschitz
                                      : estimate_lipschitz(target.h[i], target.box[i].first, target.box[i].second);
    double kappa = std::numeric_limits<double>::quiet_NaN();
    if (!target.slope_shift.empty()) kappa = target.slope_shift[i];
    if (std::isnan(kappa)) kappa = detail::sup_slope(hs, kBoxLo, kBoxHi) > 0.0 ? L + 1.0 : 0.0;
    out.A[i][i] += kappa;
    out.h.push_back(hs.plus_linear(-kappa));
    if (detail::sup_slope(out.h[i], kBoxLo, kBoxHi) > 0.0) {
      throw InvalidInput("unsupported target: slope shift leaves coordinate " + std::to_string(i) +
                         " with a rising nonlinearity (is the Lipschitz bound too small?)");
    }
  }
  return out;
}

// Accumulates bidders, sparse items and segments.
class MarketBuilder {
 public:
  int add_bidder() { return n_++; }
  int bidders() const { return n_; }

  int add_item(std::vector<std::pair<int, double>> values, std::optional<double> reserve, std::string label) {
    items_.push_back({std::move(values), reserve});
    item_labels_.push_back(std::move(label));
    return static_cast<int>(items_.size()) - 1;
  }

  int add_segment(ContinuumSegment s, std::string label) {
    segments_.push_back(std::move(s));
    segment_labels_.push_back(std::move(label));
    return static_cast<int>(segments_.size()) - 1;
  }

  MarketInstance build() const {
    MarketInstance inst;
    inst.n_bidders = n_;
    for (const auto& [values, reserve] : items_) {
      DiscreteItem item{std::vector<double>(n_, 0.0), reserve};
      for (const auto& [i, v] : values) item.values[i] = v;
      inst.items.push_back(std::move(item));
    }
    inst.segments = segments_;
    return inst;
  }

  const std::vector<std::string>& item_labels() const { return item_labels_; }
  const std::vector<std::string>& segment_labels() const { return segment_labels_; }

 private:
  int n_ = 0;
  std::vector<std::pair<std::vector<std::pair<int, double>>, std::optional<double>>> items_;
  std::vector<std::string> item_labels_;
  std::vector<ContinuumSegment> segments_;
  std::vector<std::string> segment_labels_;
};

// Segment giving `bidder` utility H(m) - H(lo) for m in [lo, hi].
inline ContinuumSegment build_nonlinear_gadget(const ScalarFunction& H, int bidder, double lo = kBoxLo,
                                               double hi = kBoxHi) {
  if (!(lo > 1.0)) throw InvalidInput("nonlinear gadget support must lie above 1");
  if (detail::sup_slope(H, lo, hi) > 0.0) {
    throw InvalidInput("nonlinear gadget needs a nonincreasing function on its support");
  }
  return {{bidder}, 1.0, lo, hi, Density::derived(H)};
}

struct DiscretizedGadget {
  std::vector<std::pair<double, double>> items;  // (value, reserve price)
  double cell = 0.0;
  double error_bound = 0.0;
};

// Replaces the continuum by k reserve-priced items. Item j is won once the
// multiplier passes the midpoint p_j of cell j; its value w_j is scaled so the
// surplus w_j (1 - p_j) equals the drop of H across the cell.
inline DiscretizedGadget discretize_nonlinear_gadget(const ScalarFunction& H, double epsilon, double lo = kBoxLo,
                                                     double hi = kBoxHi, long max_items = 1000000) {
  if (!(epsilon > 0.0)) throw InvalidInput("discretization tolerance must be positive");
  if (!(lo > 1.0)) throw InvalidInput("nonlinear gadget support must lie above 1");
  const SlopeRange slopes = sample_slopes(H, lo, hi, 20000);
  if (slopes.max > 0.0) throw InvalidInput("nonlinear gadget needs a nonincreasing function on its support");
  DiscretizedGadget g;
  if (std::isinf(epsilon)) return g;
  const double L = 1.05 * std::abs(slopes.min);
  const double needed = std::ceil((hi - lo) * L / (2.0 * epsilon));
  if (needed > static_cast<double>(max_items)) {
    throw VerificationError("discretization needs k = " + std::to_string(static_cast<long>(needed)) +
                            " items, above the cap of " + std::to_string(max_items));
  }
  const long k = std::max(1L, static_cast<long>(needed));
  g.cell = (hi - lo) / static_cast<double>(k);
  g.error_bound = 0.5 * g.cell * L;
  for (long j = 0; j < k; ++j) {
    const double a = lo + g.cell * j, b = (j + 1 == k) ? hi : lo + g.cell * (j + 1);
    const double drop = H(b) - H(a);
    if (drop == 0.0) continue;
    const double p = 0.5 * (a + b);
    const double w = drop / (1.0 - p);
    g.items.push_back({w, w * p});
  }
  return g;
}

// Adds the output bidder of a negation gadget for `input`; its utility is
// 3 lam - lam m_input - lam m_out while both stay in the band.
inline int build_negation_gadget(MarketBuilder& b, double lam, int input) {
  if (!(lam >= 1.0) || !std::isfinite(lam)) throw InvalidInput("negation rate lambda must be >= 1");
  const int out = b.add_bidder();
  const std::string tag = std::to_string(input);
  b.add_item({{input, lam}, {out, 1.95 * lam}}, std::nullopt, "negation(" + tag + ") contested item");
  b.add_segment({{out}, 1.0, kBandLo, 2.0, Density::negation(lam)}, "negation(" + tag + ") continuum");
  return out;
}

// Emits one contested item per nonzero off-diagonal term and per positive
// diagonal term. Negative diagonals are left to the nonlinear gadget.
inline void build_linear_gadgets(MarketBuilder& b, const Matrix& A, const std::vector<int>& primary,
                                 const std::vector<int>& negation) {
  const int d = static_cast<int>(A.size());
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double a = A[i][j];
      const std::string tag = "A[" + std::to_string(i) + "][" + std::to_string(j) + "]";
      if (a > 0.0) {
        if (negation[j] < 0) throw InvalidInput("positive coefficient needs a negation bidder for coordinate " + std::to_string(j));
        b.add_item({{primary[i], 2.0 * a}, {negation[j], a}}, std::nullopt, tag + " via negation");
      } else if (a < 0.0 && i != j) {
        b.add_item({{primary[i], -2.0 * a}, {primary[j], -a}}, std::nullopt, tag + " competitive");
      }
    }
  }
}

// Positive constants become uncontested items. Negative ones are charged by a
// shared pegged bidder held at multiplier 2: the target bidder values an item
// at 2w + c against the pegged value w and pays 2w. The pegged bidder never
// wins anything, so its utility is identically zero.
inline int build_constant_gadgets(MarketBuilder& b, const std::vector<double>& constants,
                                  const std::vector<int>& primary) {
  int pegged = -1;
  for (std::size_t i = 0; i < constants.size(); ++i) {
    const double c = constants[i];
    const std::string tag = "constant(" + std::to_string(i) + ")";
    if (c > 0.0) {
      b.add_item({{primary[i], c}}, std::nullopt, tag + " uncontested");
    } else if (c < 0.0) {
      if (pegged < 0) pegged = b.add_bidder();
      const double w = std::max(1.0, -c / 0.05);
      b.add_item({{primary[i], 2.0 * w + c}, {pegged, w}}, std::nullopt, tag + " against pegged bidder");
    }
  }
  return pegged;
}

struct CompileOptions {
  double lambda = 0.0;  // 0 picks max(100, minimal lambda for epsilon)
  double epsilon = std::numeric_limits<double>::infinity();
  bool continuum = true;
  long max_items = 1000000;
};

struct CompiledMarket {
  MarketInstance instance;
  double lambda = 0.0;
  std::vector<int> primary;
  std::vector<int> negation;  // -1 where the coordinate is never negated
  std::vector<int> auxiliary;
  TargetSystem normalized;  // the system the primary bidders simulate, in multiplier units
  std::vector<AffineCoordinate> decode;
  double speed_bound = 0.0;   // bound on |ds_j/dt| over the box for negated j
  double negation_error = 0.0;  // bound on |m_bar - (3 - m)| along trajectories
  double field_error_bound = 0.0;
  double discretization_error = 0.0;
  std::vector<std::string> item_labels;
  std::vector<std::string> segment_labels;
};

// Bound on |F_i| over [1.1, 1.9]^d for each row of a normalized target.
inline std::vector<double> speed_bounds(const TargetSystem& t) {
  const int d = t.dimension();
  std::vector<double> out(d);
  for (int i = 0; i < d; ++i) {
    double lo = 0.0, hi = 0.0;
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      lo += std::min(t.A[i][j] * kBoxLo, t.A[i][j] * kBoxHi);
      hi += std::max(t.A[i][j] * kBoxLo, t.A[i][j] * kBoxHi);
    }
    double own_lo = std::numeric_limits<double>::infinity(), own_hi = -own_lo;
    const int samples = 20000;
    for (int k = 0; k <= samples; ++k) {
      const double s = kBoxLo + (kBoxHi - kBoxLo) * k / samples;
      const double v = t.A[i][i] * s + t.h[i](s);
      own_lo = std::min(own_lo, v);
      own_hi = std::max(own_hi, v);
    }
    out[i] = std::max(std::abs(lo + own_lo), std::abs(hi + own_hi));
  }
  return out;
}

// (L / lam) (ln(2 lam / L) + 1): the negation lag for inputs of speed L.
inline double negation_error_bound(double speed, double lam) {
  if (speed <= 0.0) return 0.0;
  const double ratio = 2.0 * lam / speed;
  if (ratio <= 1.0) return std::numeric_limits<double>::infinity();
  return speed / lam * (std::log(ratio) + 1.0);
}

inline double minimal_lambda(double speed, double weight, double epsilon) {
  if (speed <= 0.0 || weight <= 0.0) return 1.0;
  if (!(epsilon > 0.0)) return std::numeric_limits<double>::infinity();
  double lo = speed / 2.0, hi = std::max(1.0, speed);
  while (weight * negation_error_bound(speed, hi) > epsilon) {
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (weight * negation_error_bound(speed, mid) > epsilon ? lo : hi) = mid;
  }
  return std::max(1.0, hi);
}

// Builds a market whose primary bidders follow the normalized target up to
// the negation lag (and the discretization error in discrete mode).
// Structural robustness of the target's boundedness is taken as given.
inline CompiledMarket compile(const TargetSystem& target, CompileOptions opt = {}) {
  const TargetSystem t = normalize(target);
  const int d = t.dimension();
  CompiledMarket cm;
  cm.normalized = t;
  cm.decode = t.coords;

  std::vector<bool> needs_negation(d, false);
  double weight = 0.0;
  for (int i = 0; i < d; ++i) {
    double row = 0.0;
    for (int j = 0; j < d; ++j) {
      if (t.A[i][j] > 0.0) {
        needs_negation[j] = true;
        row += t.A[i][j];
      }
    }
    weight = std::max(weight, row);
  }
  const std::vector<double> speeds = speed_bounds(t);
  for (int j = 0; j < d; ++j) {
    if (needs_negation[j]) cm.speed_bound = std::max(cm.speed_bound, speeds[j]);
  }

  double eps_negation = opt.epsilon;
  if (!opt.continuum && std::isfinite(opt.epsilon)) eps_negation = 0.5 * opt.epsilon;
  const double lam_min = minimal_lambda(cm.speed_bound, weight, eps_negation);
  if (opt.lambda == 0.0) {
    cm.lambda = std::max(100.0, lam_min);
    if (!std::isfinite(cm.lambda)) {
      throw VerificationError("requested epsilon cannot be reached by any lambda");
    }
  } else {
    cm.lambda = opt.lambda;
  }
  cm.negation_error = negation_error_bound(cm.speed_bound, cm.lambda);
  const double field_bound = weight * cm.negation_error;
  if (field_bound > eps_negation) {
    throw VerificationError("epsilon = " + std::to_string(opt.epsilon) + " is unachievable at lambda = " +
                            std::to_string(cm.lambda) + " (bound " + std::to_string(field_bound) +
                            "); minimal lambda = " + std::to_string(lam_min));
  }

  MarketBuilder b;
  for (int i = 0; i < d; ++i) cm.primary.push_back(b.add_bidder());
  cm.negation.assign(d, -1);
  for (int j = 0; j < d; ++j) {
    if (needs_negation[j]) cm.negation[j] = build_negation_gadget(b, cm.lambda, cm.primary[j]);
  }
  build_linear_gadgets(b, t.A, cm.primary, cm.negation);

  std::vector<double> constants(d, 0.0);
  for (int i = 0; i < d; ++i) {
    const ScalarFunction H = t.h[i].plus_linear(std::min(t.A[i][i], 0.0));
    double c = H(kBandLo);
    for (int j = 0; j < d; ++j) {
      if (t.A[i][j] > 0.0) c += t.A[i][j];
      if (t.A[i][j] < 0.0 && j != i) c += 2.0 * t.A[i][j];
    }
    constants[i] = c;
    const std::string tag = "nonlinear(" + std::to_string(i) + ")";
    if (opt.continuum) {
      const SlopeRange r = sample_slopes(H, kBandLo, kBandHi, 2000);
      if (r.min != 0.0 || r.max != 0.0) {
        b.add_segment(build_nonlinear_gadget(H, cm.primary[i], kBandLo, kBandHi), tag + " continuum");
      }
    } else {
      const double eps_h = std::isfinite(opt.epsilon) ? 0.5 * opt.epsilon : std::numeric_limits<double>::infinity();
      const DiscretizedGadget g = discretize_nonlinear_gadget(H, eps_h, kBandLo, kBandHi, opt.max_items);
      cm.discretization_error = std::max(cm.discretization_error, g.error_bound);
      for (std::size_t k = 0; k < g.items.size(); ++k) {
        b.add_item({{cm.primary[i], g.items[k].first}}, g.items[k].second, tag + " item " + std::to_string(k));
      }
    }
  }
  const int pegged = build_constant_gadgets(b, constants, cm.primary);
  if (pegged >= 0) cm.auxiliary.push_back(pegged);

  cm.field_error_bound = field_bound + cm.discretization_error;
  cm.instance = b.build();
  cm.item_labels = b.item_labels();
  cm.segment_labels = b.segment_labels();
  validate(cm.instance);
  return cm;
}

// Multiplier profile for a target state given in original coordinates:
// negation bidders start at 3 - partner, pegged bidders at 2.
inline Profile initial_state(const CompiledMarket& cm, const std::vector<double>& x0) {
  if (x0.size() != cm.primary.size()) throw InvalidInput("initial state has the wrong dimension");
  Profile m(cm.instance.n_bidders, kPeggedMultiplier);
  const std::vector<double> s = cm.normalized.encode(x0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    m[cm.primary[i]] = s[i];
    if (cm.negation[i] >= 0) m[cm.negation[i]] = 3.0 - s[i];
  }
  return m;
}

// Primary multipliers, in multiplier units.
inline std::vector<double> project_normalized(const CompiledMarket& cm, const Profile& m) {
  std::vector<double> s;
  for (int i : cm.primary) s.push_back(m[i]);
  return s;
}

// Primary multipliers decoded to the target's original coordinates.
inline std::vector<double> project(const CompiledMarket& cm, const Profile& m) {
  return cm.normalized.decode(project_normalized(cm, m));
}

inline VectorField compiled_field(const CompiledMarket& cm) {
  VectorField f = market_field(cm.instance);
  for (std::size_t j = 0; j < cm.negation.size(); ++j) {
    if (cm.negation[j] < 0) continue;
    const int in = cm.primary[j];
    f.fast.push_back({cm.negation[j], cm.lambda, [in](const State& m) { return 3.0 - m[in]; }});
  }
  return f;
}

struct SimulationReport {
  double max_error = 0.0;
  double time_of_max = 0.0;
  bool escaped = false;
  double escape_time = std::numeric_limits<double>::quiet_NaN();
  int escape_bidder = -1;
  double bound = 0.0;
  Trajectory trajectory;
};

// Integrates the compiled market from the image of x0 and measures the
// max-norm gap between its primary field and the normalized target field at
// every accepted step. Integration stops when a primary or negation bidder
// leaves the band [1.05, 1.95], since the gadgets make no promise outside it.
inline SimulationReport verify_simulation(const CompiledMarket& cm, const std::vector<double>& x0, double t_end,
                                          std::optional<IntegratorConfig> config = std::nullopt) {
  if (!(t_end > 0.0)) throw InvalidInput("t_end must be positive");
  const std::vector<double> s0 = cm.normalized.encode(x0);
  for (double s : s0) {
    if (s < kBoxLo - 1e-12 || s > kBoxHi + 1e-12) throw InvalidInput("initial state lies outside the box");
  }
  const VectorField f = compiled_field(cm);
  const IntegratorConfig cfg = config ? *config : default_config(f);
  SimulationReport rep;
  rep.bound = cm.field_error_bound;
  std::vector<int> watched = cm.primary;
  for (int i : cm.negation) {
    if (i >= 0) watched.push_back(i);
  }
  auto visit = [&](double t, const Profile& m) {
    rep.trajectory.push(t, m);
    const std::vector<double> u = utility(cm.instance, m);
    const std::vector<double> want = cm.normalized.field(project_normalized(cm, m));
    for (std::size_t i = 0; i < cm.primary.size(); ++i) {
      const double err = std::abs(u[cm.primary[i]] - want[i]);
      if (err > rep.max_error) {
        rep.max_error = err;
        rep.time_of_max = t;
      }
    }
    for (int b : watched) {
      if (m[b] < kBandLo || m[b] > kBandHi) {
        rep.escaped = true;
        rep.escape_time = t;
        rep.escape_bidder = b;
        return;
      }
    }
  };
  Stepper stepper(f, initial_state(cm, x0), 0.0, cfg);
  visit(0.0, stepper.x());
  while (!rep.escaped && stepper.t() < t_end) {
    stepper.step(t_end);
    visit(stepper.t(), stepper.x());
  }
  return rep;
}

}  // namespace autobid
