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
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "autobid/error.hpp"
#include "autobid/scalar_function.hpp"

namespace autobid {

using Profile = std::vector<double>;

struct DiscreteItem {
  std::vector<double> values;  // one entry per bidder
  std::optional<double> reserve_price;
};

enum class DensityKind {
  kConstant,   // rho(p) = c
  kNegation,   // rho(p) = c / (p - 1)
  kDerived,    // rho(p) = h'(p) / (v - p), v the segment's per-unit value
  kTabulated,  // piecewise linear through (p_k, rho_k)
};

inline const char* to_string(DensityKind kind) {
  switch (kind) {
    case DensityKind::kConstant: return "constant";
    case DensityKind::kNegation: return "negation";
    case DensityKind::kDerived: return "derived";
    case DensityKind::kTabulated: return "tabulated";
  }
  return "?";
}

struct Density {
  DensityKind kind = DensityKind::kConstant;
  double c = 0.0;
  ScalarFunction h;  // derived only
  std::vector<std::pair<double, double>> table;  // tabulated only

  static Density constant(double c) { return {DensityKind::kConstant, c, {}, {}}; }
  static Density negation(double c) { return {DensityKind::kNegation, c, {}, {}}; }
  static Density derived(ScalarFunction h) { return {DensityKind::kDerived, 0.0, std::move(h), {}}; }
  static Density tabulated(std::vector<std::pair<double, double>> knots) {
    return {DensityKind::kTabulated, 0.0, {}, std::move(knots)};
  }

  double operator()(double p, double v) const {
    switch (kind) {
      case DensityKind::kConstant: return c;
      case DensityKind::kNegation: return c / (p - 1.0);
      case DensityKind::kDerived: return h.derivative(p) / (v - p);
      case DensityKind::kTabulated: {
        if (p <= table.front().first) return table.front().second;
        if (p >= table.back().first) return table.back().second;
        auto it = std::upper_bound(table.begin(), table.end(), p,
                                   [](double x, const auto& k) { return x < k.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return y0 + (y1 - y0) * (p - x0) / (x1 - x0);
      }
    }
    return 0.0;
  }
};

struct ContinuumSegment {
  std::vector<int> owners;
  double per_unit_value = 1.0;
  double p_lo = 0.0;
  double p_hi = 1.0;
  Density density;
};

struct MarketInstance {
  int n_bidders = 0;
  std::vector<DiscreteItem> items;
  std::vector<ContinuumSegment> segments;
};

namespace detail {

inline double integrate(const auto& f, double a, double b, std::vector<double> cuts = {}) {
  if (!(b > a)) return 0.0;
  cuts.push_back(a);
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  double total = 0.0;
  double prev = a;
  for (double x : cuts) {
    if (x <= prev || x > b) continue;
    total += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, prev, x, 20, 1e-10);
    prev = x;
  }
  return total;
}

inline std::vector<double> density_cuts(const ContinuumSegment& s) {
  if (s.density.kind == DensityKind::kDerived) return s.density.h.breakpoints();
  std::vector<double> cuts;
  for (const auto& k : s.density.table) cuts.push_back(k.first);
  return cuts;
}

inline void require_integrable(const ContinuumSegment& s, double a) {
  if (s.density.kind == DensityKind::kNegation && a <= 1.0) {
    throw NumericalError("density c/(p-1) is not integrable from p = " + std::to_string(a));
  }
  if (s.density.kind == DensityKind::kDerived && s.per_unit_value >= s.p_lo &&
      s.per_unit_value <= s.p_hi) {
    throw NumericalError("derived density h'(p)/(v-p) is singular at p = v inside the support");
  }
}

}  // namespace detail

// Integral of (v - p) rho(p) over [a, b] within the support.
inline double segment_surplus(const ContinuumSegment& s, double a, double b) {
  if (!(b > a)) return 0.0;
  detail::require_integrable(s, a);
  const double v = s.per_unit_value;
  const Density& d = s.density;
  switch (d.kind) {
    case DensityKind::kConstant:
      return d.c * ((v * b - 0.5 * b * b) - (v * a - 0.5 * a * a));
    case DensityKind::kNegation:
      return d.c * ((v - 1.0) * std::log((b - 1.0) / (a - 1.0)) - (b - a));
    case DensityKind::kDerived:
      return d.h(b) - d.h(a);
    case DensityKind::kTabulated:
      return detail::integrate([&](double p) { return (v - p) * d(p, v); }, a, b,
                               detail::density_cuts(s));
  }
  return 0.0;
}

// Same integral by quadrature regardless of kind, for cross-checking.
inline double segment_surplus_quadrature(const ContinuumSegment& s, double a, double b) {
  detail::require_integrable(s, a);
  const double v = s.per_unit_value;
  return detail::integrate([&](double p) { return (v - p) * s.density(p, v); }, a, b,
                           detail::density_cuts(s));
}

inline double segment_mass(const ContinuumSegment& s, double a, double b) {
  if (!(b > a)) return 0.0;
  detail::require_integrable(s, a);
  const Density& d = s.density;
  switch (d.kind) {
    case DensityKind::kConstant: return d.c * (b - a);
    case DensityKind::kNegation: return d.c * std::log((b - 1.0) / (a - 1.0));
    default:
      return detail::integrate([&](double p) { return d(p, s.per_unit_value); }, a, b,
                               detail::density_cuts(s));
  }
}

// Integral of p rho(p): the payment for the mass won on [a, b].
inline double segment_moment(const ContinuumSegment& s, double a, double b) {
  if (!(b > a)) return 0.0;
  detail::require_integrable(s, a);
  const Density& d = s.density;
  switch (d.kind) {
    case DensityKind::kConstant: return 0.5 * d.c * (b * b - a * a);
    case DensityKind::kNegation: return d.c * ((b - a) + std::log((b - 1.0) / (a - 1.0)));
    default:
      return detail::integrate([&](double p) { return p * d(p, s.per_unit_value); }, a, b,
                               detail::density_cuts(s));
  }
}

inline void validate(const MarketInstance& inst) {
  if (inst.n_bidders <= 0) throw InvalidInput("market needs at least one bidder");
  for (std::size_t j = 0; j < inst.items.size(); ++j) {
    const DiscreteItem& item = inst.items[j];
    const std::string name = "item " + std::to_string(j);
    if (item.values.size() != static_cast<std::size_t>(inst.n_bidders)) {
      throw InvalidInput(name + ": expected " + std::to_string(inst.n_bidders) + " values");
    }
    for (double v : item.values) {
      if (!std::isfinite(v) || v < 0.0) throw InvalidInput(name + ": values must be finite and >= 0");
    }
    if (item.reserve_price && (!std::isfinite(*item.reserve_price) || *item.reserve_price < 0.0)) {
      throw InvalidInput(name + ": reserve price must be finite and >= 0");
    }
  }
  for (std::size_t k = 0; k < inst.segments.size(); ++k) {
    const ContinuumSegment& s = inst.segments[k];
    const std::string name = "segment " + std::to_string(k);
    if (s.owners.empty()) throw InvalidInput(name + ": no owner bidders");
    std::vector<int> sorted = s.owners;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidInput(name + ": duplicate owner");
    }
    for (int o : s.owners) {
      if (o < 0 || o >= inst.n_bidders) throw InvalidInput(name + ": owner index out of range");
    }
    if (!(s.per_unit_value > 0.0) || !std::isfinite(s.per_unit_value)) {
      throw InvalidInput(name + ": per-unit value must be positive");
    }
    if (!(s.p_lo >= 0.0 && s.p_lo < s.p_hi && std::isfinite(s.p_hi))) {
      throw InvalidInput(name + ": support must satisfy 0 <= p_lo < p_hi");
    }
    const Density& d = s.density;
    switch (d.kind) {
      case DensityKind::kConstant:
      case DensityKind::kNegation:
        if (!(d.c >= 0.0) || !std::isfinite(d.c)) {
          throw InvalidInput(name + ": density constant must be >= 0");
        }
        break;
      case DensityKind::kDerived:
        d.h.validate();
        break;
      case DensityKind::kTabulated:
        if (d.table.size() < 2) throw InvalidInput(name + ": tabulated density needs two knots");
        for (std::size_t i = 0; i < d.table.size(); ++i) {
          if (!(d.table[i].second >= 0.0)) throw InvalidInput(name + ": tabulated density is negative");
          if (i > 0 && !(d.table[i].first > d.table[i - 1].first)) {
            throw InvalidInput(name + ": tabulated knots must increase");
          }
        }
        if (d.table.front().first > s.p_lo || d.table.back().first < s.p_hi) {
          throw InvalidInput(name + ": tabulated knots must cover the support");
        }
        break;
    }
    if (d.kind == DensityKind::kDerived || d.kind == DensityKind::kNegation) {
      for (int i = 0; i <= 64; ++i) {
        const double p = s.p_lo + (s.p_hi - s.p_lo) * i / 64.0;
        const double r = d(p, s.per_unit_value);
        if (std::isfinite(r) && r < -1e-12) {
          throw InvalidInput(name + ": density is negative at p = " + std::to_string(p));
        }
      }
    }
  }
}

inline void check_profile(const MarketInstance& inst, const Profile& m) {
  if (m.size() != static_cast<std::size_t>(inst.n_bidders)) {
    throw InvalidInput("multiplier profile has " + std::to_string(m.size()) + " entries, market has " +
                       std::to_string(inst.n_bidders) + " bidders");
  }
  for (double x : m) {
    if (!std::isfinite(x)) throw InvalidInput("multiplier profile has a non-finite entry");
  }
}

template <class T>
struct ItemOutcome {
  std::vector<T> share;
  std::vector<T> payment;
};

// Second-price settlement of one item under uniform tie-breaking. The reserve
// acts as a fictitious bid that keeps any tie with it.
template <class T>
ItemOutcome<T> settle_item(const std::vector<T>& values, const std::optional<T>& reserve,
                           const std::vector<T>& m) {
  const std::size_t n = values.size();
  ItemOutcome<T> out{std::vector<T>(n, T(0)), std::vector<T>(n, T(0))};
  if (n == 0) return out;
  std::vector<T> bid(n);
  for (std::size_t i = 0; i < n; ++i) bid[i] = m[i] * values[i];
  T top = bid[0];
  for (std::size_t i = 1; i < n; ++i) top = std::max(top, bid[i]);
  if (reserve && !(top > *reserve)) return out;
  std::size_t winners = 0;
  T runner_up = reserve ? *reserve : T(0);
  for (std::size_t i = 0; i < n; ++i) {
    if (bid[i] == top) {
      ++winners;
    } else {
      runner_up = std::max(runner_up, bid[i]);
    }
  }
  // Tied winners face each other's bid.
  const T price = winners > 1 ? top : runner_up;
  const T share = T(1) / T(static_cast<long>(winners));
  for (std::size_t i = 0; i < n; ++i) {
    if (bid[i] == top) {
      out.share[i] = share;
      out.payment[i] = share * price;
    }
  }
  return out;
}

template <class T>
struct DiscreteTotals {
  std::vector<T> utility;
  T welfare{0};
  T revenue{0};
};

// Utilities, welfare and revenue of discrete items in any ordered field.
template <class T>
DiscreteTotals<T> settle_all(const std::vector<std::vector<T>>& values,
                             const std::vector<std::optional<T>>& reserves, const std::vector<T>& m) {
  DiscreteTotals<T> out{std::vector<T>(m.size(), T(0)), T(0), T(0)};
  for (std::size_t j = 0; j < values.size(); ++j) {
    const auto o = settle_item(values[j], reserves[j], m);
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (!(o.share[i] > T(0))) continue;
      const T value = values[j][i] * o.share[i];
      out.utility[i] += value - o.payment[i];
      out.welfare += value;
      out.revenue += o.payment[i];
    }
  }
  return out;
}

inline std::vector<ItemOutcome<double>> allocate(const MarketInstance& inst, const Profile& m) {
  check_profile(inst, m);
  std::vector<ItemOutcome<double>> out;
  out.reserve(inst.items.size());
  for (const DiscreteItem& item : inst.items) out.push_back(settle_item(item.values, item.reserve_price, m));
  return out;
}

struct SegmentPiece {
  double a;
  double b;
  std::vector<int> winners;
};

// Splits the owners' winning ranges into pieces of constant winner set.
inline std::vector<SegmentPiece> segment_pieces(const ContinuumSegment& s, const Profile& m) {
  std::vector<double> upper(s.owners.size());
  for (std::size_t k = 0; k < s.owners.size(); ++k) {
    upper[k] = std::min(std::max(m[s.owners[k]] * s.per_unit_value, s.p_lo), s.p_hi);
  }
  std::vector<double> cuts = upper;
  cuts.push_back(s.p_lo);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<SegmentPiece> pieces;
  for (std::size_t c = 1; c < cuts.size(); ++c) {
    SegmentPiece piece{cuts[c - 1], cuts[c], {}};
    for (std::size_t k = 0; k < s.owners.size(); ++k) {
      if (upper[k] >= piece.b) piece.winners.push_back(s.owners[k]);
    }
    pieces.push_back(std::move(piece));
  }
  return pieces;
}

inline std::vector<double> utility(const MarketInstance& inst, const Profile& m) {
  check_profile(inst, m);
  std::vector<double> u(inst.n_bidders, 0.0);
  for (const DiscreteItem& item : inst.items) {
    const auto o = settle_item(item.values, item.reserve_price, m);
    for (int i = 0; i < inst.n_bidders; ++i) {
      if (o.share[i] > 0.0) u[i] += item.values[i] * o.share[i] - o.payment[i];
    }
  }
  for (const ContinuumSegment& s : inst.segments) {
    if (s.owners.size() == 1) {
      const int i = s.owners[0];
      const double b = std::min(std::max(m[i] * s.per_unit_value, s.p_lo), s.p_hi);
      u[i] += segment_surplus(s, s.p_lo, b);
      continue;
    }
    for (const SegmentPiece& piece : segment_pieces(s, m)) {
      const double each = segment_surplus(s, piece.a, piece.b) / static_cast<double>(piece.winners.size());
      for (int i : piece.winners) u[i] += each;
    }
  }
  return u;
}

struct MarketOutcome {
  std::vector<double> utility;
  double welfare = 0.0;
  double revenue = 0.0;
};

inline MarketOutcome evaluate(const MarketInstance& inst, const Profile& m) {
  check_profile(inst, m);
  MarketOutcome out;
  out.utility.assign(inst.n_bidders, 0.0);
  for (const DiscreteItem& item : inst.items) {
    const auto o = settle_item(item.values, item.reserve_price, m);
    for (int i = 0; i < inst.n_bidders; ++i) {
      if (!(o.share[i] > 0.0)) continue;
      const double value = item.values[i] * o.share[i];
      out.utility[i] += value - o.payment[i];
      out.welfare += value;
      out.revenue += o.payment[i];
    }
  }
  for (const ContinuumSegment& s : inst.segments) {
    for (const SegmentPiece& piece : segment_pieces(s, m)) {
      const double n = static_cast<double>(piece.winners.size());
      const double surplus = segment_surplus(s, piece.a, piece.b);
      for (int i : piece.winners) out.utility[i] += surplus / n;
      out.welfare += s.per_unit_value * segment_mass(s, piece.a, piece.b);
      out.revenue += segment_moment(s, piece.a, piece.b);
    }
  }
  return out;
}

inline double welfare(const MarketInstance& inst, const Profile& m) { return evaluate(inst, m).welfare; }
inline double revenue(const MarketInstance& inst, const Profile& m) { return evaluate(inst, m).revenue; }

// V = [[v, 1], [1, v]].
inline MarketInstance symmetric_instance(double v) {
  return {2, {{{v, 1.0}, std::nullopt}, {{1.0, v}, std::nullopt}}, {}};
}

// V = [[1, 1/k], [1/k, 1]].
inline MarketInstance ricker_instance(double k) {
  return {2, {{{1.0, 1.0 / k}, std::nullopt}, {{1.0 / k, 1.0}, std::nullopt}}, {}};
}

// One bidder facing unit density on [0, P]; u(m) = m - m^2/2 for m <= P.
inline MarketInstance logistic_instance(double p_max = 16.0) {
  return {1, {}, {{{0}, 1.0, 0.0, p_max, Density::constant(1.0)}}};
}

}  // namespace autobid
