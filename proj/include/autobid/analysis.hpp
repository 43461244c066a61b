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
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "autobid/continuous.hpp"
#include "autobid/discrete.hpp"
#include "autobid/error.hpp"

namespace autobid {

// ---------------------------------------------------------------------------
// Largest Lyapunov exponent (Benettin).

struct LyapunovConfig {
  double d0 = 1e-8;
  double renorm_dt = 0.5;
  double t_total = 2000.0;
  double transient = 200.0;
  std::optional<IntegratorConfig> integrator;
  std::optional<State> direction;  // default (1, ..., 1) / sqrt(n)
};

struct LyapunovResult {
  double exponent = 0.0;
  long renormalizations = 0;
  std::vector<std::pair<double, double>> running;  // (t, running estimate)
};

// Reference and shadow trajectories advanced together as one 2n system so
// both see the same step sequence.
inline VectorField doubled_field(const VectorField& f) {
  const int n = f.dimension;
  VectorField g;
  g.dimension = 2 * n;
  g.eval = [f, n](const State& x, State& dx) {
    thread_local State a, b, da, db;
    a.assign(x.begin(), x.begin() + n);
    b.assign(x.begin() + n, x.end());
    da.resize(n);
    db.resize(n);
    f.eval(a, da);
    f.eval(b, db);
    std::copy(da.begin(), da.end(), dx.begin());
    std::copy(db.begin(), db.end(), dx.begin() + n);
  };
  for (const auto& c : f.fast) {
    g.fast.push_back({c.index, c.rate, [t = c.target, n](const State& x) {
                        thread_local State a;
                        a.assign(x.begin(), x.begin() + n);
                        return t(a);
                      }});
    g.fast.push_back({c.index + n, c.rate, [t = c.target, n](const State& x) {
                        thread_local State b;
                        b.assign(x.begin() + n, x.end());
                        return t(b);
                      }});
  }
  return g;
}

inline IntegratorConfig lyapunov_integrator(const VectorField& f) {
  IntegratorConfig cfg = default_config(f);
  cfg.atol = 1e-12;
  cfg.rtol = 1e-10;
  return cfg;
}

inline LyapunovResult largest_lyapunov(const VectorField& field, const State& x0, const LyapunovConfig& cfg = {}) {
  const int n = field.dimension;
  if (!(cfg.d0 > 0.0)) throw InvalidInput("d0 must be positive");
  if (!(cfg.renorm_dt > 0.0)) throw InvalidInput("renormalization interval must be positive");
  if (!(cfg.transient >= 0.0) || !(cfg.t_total > cfg.transient)) {
    throw InvalidInput("t_total must exceed the transient");
  }
  if (static_cast<int>(x0.size()) != n) throw InvalidInput("initial state has the wrong dimension");
  State dir = cfg.direction.value_or(State(n, 1.0 / std::sqrt(static_cast<double>(n))));
  double norm = 0.0;
  for (double v : dir) norm += v * v;
  norm = std::sqrt(norm);
  if (static_cast<int>(dir.size()) != n || !(norm > 0.0)) throw InvalidInput("bad perturbation direction");

  const VectorField g = doubled_field(field);
  const IntegratorConfig icfg = cfg.integrator.value_or(lyapunov_integrator(g));
  State x(2 * n);
  for (int i = 0; i < n; ++i) {
    x[i] = x0[i];
    x[n + i] = x0[i] + cfg.d0 * dir[i] / norm;
  }
  Stepper stepper(g, x, 0.0, icfg);
  LyapunovResult out;
  KahanSum sum;
  const long events = static_cast<long>(std::floor(cfg.t_total / cfg.renorm_dt + 1e-9));
  for (long k = 1; k <= events; ++k) {
    const double t_next = k * cfg.renorm_dt;
    while (stepper.t() < t_next) stepper.step(t_next);
    x = stepper.x();
    double d = 0.0;
    for (int i = 0; i < n; ++i) d += (x[n + i] - x[i]) * (x[n + i] - x[i]);
    d = std::sqrt(d);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw NumericalError("degenerate perturbation: shadow separation is " + std::to_string(d) + " at t = " +
                           std::to_string(t_next));
    }
    for (int i = 0; i < n; ++i) x[n + i] = x[i] + (x[n + i] - x[i]) * (cfg.d0 / d);
    stepper.reset(t_next, x);
    if (t_next > cfg.transient + 1e-12) {
      sum.add(std::log(d / cfg.d0));
      ++out.renormalizations;
      out.running.emplace_back(t_next, sum.value() / (out.renormalizations * cfg.renorm_dt));
    }
  }
  if (out.renormalizations == 0) throw InvalidInput("no renormalization after the transient");
  out.exponent = out.running.back().second;
  return out;
}

// ---------------------------------------------------------------------------
// Poincare section and return map.

struct Point2 {
  double y = 0.0;
  double z = 0.0;
};

struct PoincareSection {
  int index = 0;          // coordinate held at `level` on the plane
  double level = 1.0;
  int direction = -1;     // sign of d(x - level)/dt at an accepted crossing
  int y_index = 1;        // in-plane coordinates reported by the map
  int z_index = 2;
  int dimension = 3;
  // Full state for a point of the plane; defaults to (level, y, z).
  std::function<State(const Point2&)> lift;

  // Quadrangles N1 = A1 A2 A3 A4 and N0 = A5 A6 A7 A8. Edges A1A2, A3A4,
  // A5A6, A7A8 cross the strip; the others lie on the strip lines.
  std::array<Point2, 4> n1{};
  std::array<Point2, 4> n0{};
  double a = 9.623;
  double b = 1.253;
  double c1 = 0.0105;
  double c2 = 0.03565;

  State lifted(const Point2& p) const {
    if (lift) return lift(p);
    State x(dimension, 0.0);
    x[index] = level;
    x[y_index] = p.y;
    x[z_index] = p.z;
    return x;
  }

  // Galias' section for the raw circuit: plane x = 1 crossed downward.
  static PoincareSection galias() {
    PoincareSection s;
    s.n1 = {{{-0.1950, -2.6942956550}, {-0.1761, -2.2243882059}, {-0.2376, -2.9659317744}, {-0.2410, -3.2489461290}}};
    s.n0 = {{{-0.3181, -4.1785885539}, {-0.3315, -4.0981421985}, {-0.3597, -4.4381670543}, {-0.3472, -4.5294652668}}};
    return s;
  }

  // Same plane for the augmented system in circuit units, lifted onto the
  // slice where every bar coordinate equals 3 minus its partner.
  static PoincareSection galias_augmented() {
    PoincareSection s = galias();
    s.dimension = 6;
    s.lift = [level = s.level](const Point2& p) {
      return State{level, p.y, p.z, 3.0 - level, 3.0 - p.y, 3.0 - p.z};
    };
    return s;
  }
};

struct PoincareHit {
  Point2 point;
  double tau = 0.0;
  State state;
};

inline IntegratorConfig poincare_integrator(const VectorField& f) {
  IntegratorConfig cfg = default_config(f);
  cfg.atol = 1e-12;
  cfg.rtol = 1e-12;
  return cfg;
}

// The returns-th next crossing of the plane in the section's direction.
// Crossings are detected on 8 Hermite sub-samples per step, located by
// bisection to 1e-10 in time, and the state is recomputed by integrating from
// the step start.
inline PoincareHit poincare_map(const VectorField& field, const PoincareSection& section, const Point2& p,
                                std::optional<IntegratorConfig> cfg = std::nullopt, double t_cap = 100.0,
                                int returns = 1) {
  if (section.direction != 1 && section.direction != -1) throw InvalidInput("section direction must be +1 or -1");
  if (returns < 1) throw InvalidInput("returns must be >= 1");
  if (field.dimension != section.dimension) throw InvalidInput("section and field dimensions differ");
  const IntegratorConfig icfg = cfg.value_or(poincare_integrator(field));
  const State x0 = section.lifted(p);
  Stepper st(field, x0, 0.0, icfg);
  const int idx = section.index;
  const double dir = section.direction;
  auto g = [&](double t) { return dir * (st.dense_component(t, idx) - section.level); };
  constexpr int kSub = 8;
  while (st.t() < t_cap) {
    st.step(t_cap);
    const double ta = st.prev_t(), tb = st.t();
    double lo = ta, g_lo = dir * (st.prev_x()[idx] - section.level);
    for (int k = 1; k <= kSub; ++k) {
      const double hi = k == kSub ? tb : ta + (tb - ta) * k / kSub;
      const double g_hi = k == kSub ? dir * (st.x()[idx] - section.level) : g(hi);
      if (g_lo < 0.0 && g_hi >= 0.0 && --returns > 0) {
        lo = hi;
        g_lo = g_hi;
        continue;
      }
      if (g_lo < 0.0 && g_hi >= 0.0) {
        double a = lo, b = hi;
        while (b - a > 1e-10) {
          const double mid = 0.5 * (a + b);
          (g(mid) < 0.0 ? a : b) = mid;
        }
        const double t_star = 0.5 * (a + b);
        PoincareHit hit;
        hit.tau = t_star;
        hit.state = t_star > ta ? advance(field, st.prev_x(), ta, t_star, icfg) : st.prev_x();
        hit.point = {hit.state[section.y_index], hit.state[section.z_index]};
        return hit;
      }
      lo = hi;
      g_lo = g_hi;
    }
  }
  throw NumericalError("no return to the section within t = " + std::to_string(t_cap));
}

// ---------------------------------------------------------------------------
// Horseshoe precondition.

enum class Region { kMMinus, kN0, kM0, kN1, kMPlus, kOutsideP };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::kMMinus: return "M-";
    case Region::kN0: return "N0";
    case Region::kM0: return "M0";
    case Region::kN1: return "N1";
    case Region::kMPlus: return "M+";
    case Region::kOutsideP: return "OUTSIDE_P";
  }
  return "?";
}

namespace detail {

inline double cross(const Point2& p, const Point2& q, const Point2& x) {
  return (q.y - p.y) * (x.z - p.z) - (q.z - p.z) * (x.y - p.y);
}

// Positive on the side of line pq that lies up the strip.
inline double up_side(const PoincareSection& s, const Point2& p, const Point2& q, const Point2& x) {
  const Point2 up{p.y + 1.0, p.z + s.a * s.b};
  return cross(p, q, x) * (cross(p, q, up) > 0.0 ? 1.0 : -1.0);
}

}  // namespace detail

inline bool in_strip(const PoincareSection& s, const Point2& x) {
  const double l1 = s.a * (s.b * x.y - s.c1), l2 = s.a * (s.b * x.y - s.c2);
  return x.z <= std::max(l1, l2) && x.z >= std::min(l1, l2);
}

// Regions along the strip are cut by the supporting lines of the four
// transverse edges; the quadrangles are closed.
inline Region classify(const PoincareSection& s, const Point2& x) {
  if (!std::isfinite(x.y) || !std::isfinite(x.z) || !in_strip(s, x)) return Region::kOutsideP;
  using detail::up_side;
  if (up_side(s, s.n1[0], s.n1[1], x) > 0.0) return Region::kMPlus;
  if (up_side(s, s.n1[2], s.n1[3], x) >= 0.0) return Region::kN1;
  if (up_side(s, s.n0[0], s.n0[1], x) > 0.0) return Region::kM0;
  if (up_side(s, s.n0[2], s.n0[3], x) >= 0.0) return Region::kN0;
  return Region::kMMinus;
}

struct EdgeImage {
  std::string name;
  std::vector<Point2> images;
  std::vector<Region> regions;

  bool all_in(std::initializer_list<Region> allowed) const {
    return std::all_of(regions.begin(), regions.end(), [&](Region r) {
      return std::find(allowed.begin(), allowed.end(), r) != allowed.end();
    });
  }
  std::vector<Region> distinct() const {
    std::vector<Region> d = regions;
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
    return d;
  }
  std::string verdict() const {
    std::string out;
    for (Region r : distinct()) out += (out.empty() ? "" : "+") + std::string(to_string(r));
    return out;
  }
};

struct HorseshoeReport {
  int samples = 0;
  // N0D, N0U, N1D, N1U followed by the four side edges.
  std::vector<EdgeImage> edges;
  bool boundary_in_p = false;
  bool n0_split = false;
  bool n1_split = false;
  bool precondition_satisfied = false;

  const EdgeImage& edge(const std::string& name) const {
    for (const auto& e : edges) {
      if (e.name == name) return e;
    }
    throw InvalidInput("no edge named " + name);
  }
};

inline bool section_geometry_ok(const PoincareSection& s, double tol = 1e-6) {
  auto on_line = [&](const Point2& p, double c) { return std::abs(p.z - s.a * (s.b * p.y - c)) <= tol; };
  for (const auto* q : {&s.n0, &s.n1}) {
    for (const Point2& p : *q) {
      if (!on_line(p, s.c1) && !on_line(p, s.c2)) return false;
    }
  }
  return true;
}

// Maps n points per edge of both quadrangles through the return map and
// classifies the images. Points whose orbit does not return count as
// OUTSIDE_P.
inline HorseshoeReport check_horseshoe_precondition(const VectorField& field, const PoincareSection& s,
                                                    int n_edge_samples = 400,
                                                    std::optional<IntegratorConfig> cfg = std::nullopt,
                                                    int threads = 0) {
  if (n_edge_samples < 2) throw InvalidInput("need at least two samples per edge");
  if (!section_geometry_ok(s)) throw InvalidInput("quadrangle corners are not on the strip lines");
  struct Edge {
    const char* name;
    Point2 p, q;
  };
  const std::vector<Edge> defs = {
      {"N0D", s.n0[2], s.n0[3]}, {"N0U", s.n0[0], s.n0[1]}, {"N1D", s.n1[2], s.n1[3]},
      {"N1U", s.n1[0], s.n1[1]}, {"N0R", s.n0[1], s.n0[2]}, {"N0L", s.n0[3], s.n0[0]},
      {"N1R", s.n1[1], s.n1[2]}, {"N1L", s.n1[3], s.n1[0]},
  };
  const int n = n_edge_samples;
  HorseshoeReport rep;
  rep.samples = n;
  std::vector<Point2> sources;
  for (const Edge& e : defs) {
    for (int k = 0; k < n; ++k) {
      const double w = static_cast<double>(k) / (n - 1);
      sources.push_back({e.p.y + w * (e.q.y - e.p.y), e.p.z + w * (e.q.z - e.p.z)});
    }
  }
  std::vector<Point2> images(sources.size());
  const int workers = threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  auto work = [&](int w) {
    for (std::size_t i = w; i < sources.size(); i += workers) {
      try {
        images[i] = poincare_map(field, s, sources[i], cfg).point;
      } catch (const NumericalError&) {
        images[i] = {NAN, NAN};
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work, w);
  work(0);
  for (auto& t : pool) t.join();

  for (std::size_t e = 0; e < defs.size(); ++e) {
    EdgeImage img;
    img.name = defs[e].name;
    for (int k = 0; k < n; ++k) {
      const Point2& y = images[e * n + k];
      img.images.push_back(y);
      img.regions.push_back(classify(s, y));
    }
    rep.edges.push_back(std::move(img));
  }
  rep.boundary_in_p = std::none_of(rep.edges.begin(), rep.edges.end(),
                                   [](const EdgeImage& e) { return !e.all_in({Region::kMMinus, Region::kN0,
                                                                               Region::kM0, Region::kN1,
                                                                               Region::kMPlus}); });
  using R = Region;
  const EdgeImage &n0d = rep.edges[0], &n0u = rep.edges[1], &n1d = rep.edges[2], &n1u = rep.edges[3];
  rep.n0_split = (n0d.all_in({R::kMPlus}) && n0u.all_in({R::kMMinus})) ||
                 (n0u.all_in({R::kMPlus}) && n0d.all_in({R::kMMinus}));
  rep.n1_split = (n1d.all_in({R::kMMinus}) && n1u.all_in({R::kM0, R::kN0, R::kMPlus})) ||
                 (n1u.all_in({R::kMMinus}) && n1d.all_in({R::kM0, R::kN0, R::kMPlus}));
  rep.precondition_satisfied = rep.boundary_in_p && rep.n0_split && rep.n1_split;
  return rep;
}

// True when doubling the sampling changes neither the verdict nor the set of
// regions any edge reaches.
inline bool same_classification(const HorseshoeReport& a, const HorseshoeReport& b) {
  if (a.precondition_satisfied != b.precondition_satisfied || a.edges.size() != b.edges.size()) return false;
  for (std::size_t e = 0; e < a.edges.size(); ++e) {
    if (a.edges[e].distinct() != b.edges[e].distinct()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// One-dimensional maps.

inline double iterate_map(const ScalarMap& f, double m, int k) {
  for (int i = 0; i < k; ++i) m = f(m);
  return m;
}

struct PeriodicOrbit {
  double point = 0.0;
  std::vector<double> orbit;  // point, F(point), ..., F^(k-1)(point)
};

// Genuine period-k points in [a, b]: roots of F^k(m) - m located on a 10^4
// cell scan and refined by bisection to 1e-12, minus roots of lower period.
inline std::vector<PeriodicOrbit> find_periodic_orbits(const ScalarMap& f, int k, double a, double b,
                                                       int cells = 10000) {
  if (k < 1) throw InvalidInput("period must be >= 1");
  if (!(a < b)) throw InvalidInput("empty bracket");
  auto g = [&](double m) { return iterate_map(f, m, k) - m; };
  auto genuine = [&](double m) {
    for (int j = 1; j < k; ++j) {
      if (k % j == 0 && std::abs(iterate_map(f, m, j) - m) <= 1e-9) return false;
    }
    return true;
  };
  std::vector<double> roots;
  double x0 = a, g0 = g(a);
  if (g0 == 0.0) roots.push_back(a);
  for (int i = 1; i <= cells; ++i) {
    const double x1 = i == cells ? b : a + (b - a) * i / cells;
    const double g1 = g(x1);
    if (g1 == 0.0) {
      roots.push_back(x1);
    } else if (g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0)) {
      double lo = x0, hi = x1, glo = g0;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double gm = g(mid);
        if (gm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((gm < 0.0) == (glo < 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    g0 = g1;
  }
  std::vector<PeriodicOrbit> out;
  for (double r : roots) {
    if (!genuine(r)) continue;
    PeriodicOrbit po;
    po.point = r;
    double m = r;
    for (int j = 0; j < k; ++j) {
      po.orbit.push_back(m);
      m = f(m);
    }
    out.push_back(std::move(po));
  }
  return out;
}

inline std::optional<PeriodicOrbit> find_periodic_orbit(const ScalarMap& f, int k, double a, double b) {
  auto all = find_periodic_orbits(f, k, a, b);
  if (all.empty()) return std::nullopt;
  return all.front();
}

enum class Stability { kStable, kUnstable, kMarginal };

inline const char* to_string(Stability s) {
  switch (s) {
    case Stability::kStable: return "stable";
    case Stability::kUnstable: return "unstable";
    case Stability::kMarginal: return "marginal";
  }
  return "?";
}

struct FixedPointReport {
  Stability stability = Stability::kMarginal;
  double derivative = 0.0;     // closed form when available
  double fd_derivative = 0.0;  // central difference, h = 1e-6
};

inline FixedPointReport classify_fixed_point(const ScalarMap& f, double m) {
  if (!(std::abs(f(m) - m) <= 1e-9)) {
    throw InvalidInput("not a fixed point: |F(m) - m| = " + std::to_string(std::abs(f(m) - m)));
  }
  FixedPointReport r;
  constexpr double h = 1e-6;
  r.fd_derivative = (f(m + h) - f(m - h)) / (2 * h);
  r.derivative = r.fd_derivative;
  if (f.derivative) {
    r.derivative = f.derivative(m);
    if (std::abs(r.derivative - r.fd_derivative) > 1e-5 * (1.0 + std::abs(r.derivative))) {
      throw NumericalError("closed-form derivative disagrees with finite differences");
    }
  }
  const double a = std::abs(r.derivative);
  r.stability = a < 1.0 - 1e-6 ? Stability::kStable : a > 1.0 + 1e-6 ? Stability::kUnstable : Stability::kMarginal;
  return r;
}

// Five-point stencils for F', F'' and F'''.
inline double schwarzian_fd(const ScalarMap& f, double m, double h = 1e-3) {
  const double fm2 = f(m - 2 * h), fm1 = f(m - h), f0 = f(m), fp1 = f(m + h), fp2 = f(m + 2 * h);
  const double d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * h);
  const double d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * h * h);
  const double d3 = (-fm2 + 2 * fm1 - 2 * fp1 + fp2) / (2 * h * h * h);
  if (d1 == 0.0 || !std::isfinite(d1)) throw InvalidInput("Schwarzian undefined at a critical point");
  return d3 / d1 - 1.5 * (d2 / d1) * (d2 / d1);
}

inline double schwarzian(const ScalarMap& f, double m) {
  if (f.schwarzian) return f.schwarzian(m);
  return schwarzian_fd(f, m);
}

struct BifurcationRow {
  double eta = 0.0;
  double value = 0.0;
  bool diverged = false;
};

struct BifurcationOptions {
  long burn_in = 1000;
  long keep = 200;
  int coordinate = 0;
  std::function<double(double)> transform;  // applied to each kept value
};

// For each of n_eta evenly spaced rates: iterate from m0, drop burn_in
// states, emit the next keep. A divergent rate yields one row with NaN.
inline std::vector<BifurcationRow> bifurcation_scan(const std::function<DiscreteMap(double)>& family,
                                                    double eta_lo, double eta_hi, int n_eta, const Profile& m0,
                                                    const BifurcationOptions& opt = {}) {
  if (n_eta < 2) throw InvalidInput("n_eta must be >= 2");
  if (opt.keep < 1 || opt.burn_in < 0) throw InvalidInput("keep must be >= 1 and burn_in >= 0");
  if (!(eta_lo <= eta_hi)) throw InvalidInput("empty rate range");
  std::vector<std::vector<BifurcationRow>> per(n_eta);
  auto run = [&](int i) {
    const double eta = eta_lo + (eta_hi - eta_lo) * i / (n_eta - 1);
    auto& rows = per[i];
    try {
      const DiscreteMap map = family(eta);
      Profile m = m0;
      for (long t = 0; t < opt.burn_in; ++t) m = step(map, m);
      for (long t = 0; t < opt.keep; ++t) {
        m = step(map, m);
        const double v = m.at(opt.coordinate);
        rows.push_back({eta, opt.transform ? opt.transform(v) : v, false});
      }
    } catch (const NumericalError&) {
      rows.assign(1, {eta, NAN, true});
    }
  };
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n_eta; i += workers) run(i);
    });
  }
  for (auto& t : pool) t.join();
  std::vector<BifurcationRow> out;
  for (auto& rows : per) out.insert(out.end(), rows.begin(), rows.end());
  return out;
}

struct CobwebSegment {
  double x0, y0, x1, y1;
};

inline std::vector<CobwebSegment> cobweb_trace(const ScalarMap& f, double m0, int n_steps) {
  if (n_steps < 1) throw InvalidInput("n_steps must be >= 1");
  std::vector<CobwebSegment> out;
  double m = m0;
  for (int t = 0; t < n_steps; ++t) {
    const double next = f(m);
    out.push_back({m, m, m, next});
    out.push_back({m, next, next, next});
    m = next;
  }
  return out;
}

}  // namespace autobid
