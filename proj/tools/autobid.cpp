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

// Command-line front end. Each subcommand writes its declared CSV output and
// ends with a one-line summary. Exit codes: 0 success, 2 invalid input,
// 3 numerical failure, 4 verification failure.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "autobid/analysis.hpp"
#include "autobid/chua.hpp"
#include "autobid/continuous.hpp"
#include "autobid/discrete.hpp"
#include "autobid/error.hpp"
#include "autobid/io.hpp"
#include "autobid/market.hpp"
#include "autobid/reduction.hpp"

namespace {

using namespace autobid;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Summaries go to stdout unless stdout carries the CSV itself.
std::ostream* summary_stream = &std::cout;

std::ostream& summary() { return *summary_stream; }

// CSV sink; "-" is stdout.
class Csv {
 public:
  Csv(const std::string& path, const std::vector<std::string>& header) : path_(path) {
    if (path == "-") {
      out_ = &std::cout;
      summary_stream = &std::cerr;
    } else {
      file_.open(path, std::ios::binary);
      if (!file_) throw InvalidInput("cannot write " + path);
      out_ = &file_;
    }
    cells(header);
    width_ = header.size();
  }

  void row(const std::vector<double>& values) {
    std::vector<std::string> text;
    for (double v : values) text.push_back(format_double(v));
    cells(text);
  }

  void cells(const std::vector<std::string>& text) {
    if (width_ && text.size() != width_) throw InvalidInput(path_ + ": row width does not match the header");
    for (std::size_t i = 0; i < text.size(); ++i) *out_ << (i ? "," : "") << text[i];
    *out_ << '\n';
    ++rows_;
  }

  long rows() const { return rows_ - 1; }

  void close() {
    out_->flush();
    if (file_.is_open()) file_.close();
    if (!*out_) throw InvalidInput("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream file_;
  std::ostream* out_ = nullptr;
  std::size_t width_ = 0;
  long rows_ = 0;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string fmt(const std::vector<double>& xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
  return s + ")";
}

// ---------------------------------------------------------------------------
// Maps shared by discrete, bifurcate, cobweb and periodic.

struct MapArgs {
  std::string map = "entropic";
  double v = 2.0;
  double k = 2.0;
  double eta = kNaN;
  double r = kNaN;
  std::string market;
};

void add_map_options(CLI::App* sub, MapArgs& a, bool with_rate) {
  sub->add_option("--map", a.map, "entropic, euclidean, truncated, ricker, logistic or newcomp")
      ->check(CLI::IsMember({"entropic", "euclidean", "truncated", "ricker", "logistic", "newcomp"}));
  sub->add_option("--v", a.v, "diagonal value of the symmetric instance [[v, 1], [1, v]]");
  sub->add_option("--capacity", a.k, "Ricker carrying capacity k; the instance is [[1, 1/k], [1/k, 1]]");
  if (with_rate) {
    sub->add_option("--eta", a.eta, "learning rate (Ricker growth rate r for --map ricker)");
    sub->add_option("--r", a.r, "logistic parameter; sets eta = r - 1 for --map logistic");
  }
  sub->add_option("--market", a.market, "market file replacing the symmetric instance");
}

double rate_of(const MapArgs& a) {
  if (a.map == "logistic" && !std::isnan(a.r)) {
    if (!std::isnan(a.eta) && a.eta != a.r - 1.0) throw InvalidInput("--eta and --r disagree");
    return a.r - 1.0;
  }
  if (!std::isnan(a.r)) throw InvalidInput("--r applies to --map logistic only");
  if (std::isnan(a.eta)) throw InvalidInput("--eta is required");
  return a.eta;
}

void check_rate(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("learning rate must be positive");
}

MarketInstance instance_for(const MapArgs& a) {
  if (!a.market.empty()) return load_market(a.market);
  if (!(a.v > 0.0) || !std::isfinite(a.v)) throw InvalidInput("--v must be positive");
  return symmetric_instance(a.v);
}

// Instance-driven map: the update reads utilities off the market.
DiscreteMap market_map(const MapArgs& a, double eta) {
  check_rate(eta);
  if (a.map == "entropic") return DiscreteMap::on(MapKind::kEntropic, instance_for(a), eta);
  if (a.map == "euclidean") return DiscreteMap::on(MapKind::kEuclidean, instance_for(a), eta);
  if (a.map == "truncated") return DiscreteMap::on(MapKind::kTruncatedEntropic, instance_for(a), eta);
  if (!a.market.empty()) throw InvalidInput("--market is not accepted by --map " + a.map);
  if (a.map == "ricker") {
    if (!(a.k > 1.0)) throw InvalidInput("--capacity must exceed 1");
    return DiscreteMap::on(MapKind::kEntropic, ricker_instance(a.k), eta);
  }
  if (a.map == "logistic") return DiscreteMap::on(MapKind::kEuclidean, logistic_instance(), eta);
  if (a.map == "newcomp") return DiscreteMap::of(newcomp_map(eta));
  throw InvalidInput("unknown map " + a.map);
}

// Closed-form one-dimensional map on symmetric states. The logistic map is
// in rescaled units x, with r = eta + 1.
ScalarMap scalar_map(const MapArgs& a, double eta) {
  check_rate(eta);
  if (!a.market.empty()) throw InvalidInput("closed-form maps take no --market");
  if (a.map == "entropic") return symmetric_entropic_map(a.v, eta);
  if (a.map == "euclidean") return euclidean_symmetric_map(a.v, eta);
  if (a.map == "truncated") return truncated_symmetric_map(a.v, eta);
  if (a.map == "ricker") return ricker_map(eta, a.k);
  if (a.map == "logistic") return logistic_map(eta + 1.0);
  if (a.map == "newcomp") return newcomp_map(eta);
  throw InvalidInput("unknown map " + a.map);
}

// Multiplier m to logistic units x = (r - 1) / (2r) m.
double logistic_scale(double eta) { return eta / (2.0 * (eta + 1.0)); }

Profile broadcast(std::vector<double> m0, int dim) {
  if (m0.empty()) throw InvalidInput("--m0 is required");
  if (dim < 1) dim = 1;
  if (m0.size() == 1) return Profile(dim, m0[0]);
  if (static_cast<int>(m0.size()) != dim) {
    throw InvalidInput("--m0 needs 1 or " + std::to_string(dim) + " values");
  }
  return m0;
}

// ---------------------------------------------------------------------------
// discrete

struct DiscreteArgs {
  MapArgs map;
  std::vector<double> m0;
  long steps = 0;
  long burn_in = -1;
  bool rescaled = false;
  std::string out = "-";
};

void run_discrete(const DiscreteArgs& a) {
  const double eta = rate_of(a.map);
  const DiscreteMap map = market_map(a.map, eta);
  if (a.rescaled && a.map.map != "logistic") throw InvalidInput("--rescaled applies to --map logistic only");
  const Profile m0 = broadcast(a.m0, map.dimension());
  const Orbit orbit = iterate(map, m0, a.steps, {a.burn_in, true});
  const bool market = map.kind != MapKind::kClosedForm;
  const std::size_t n = m0.size();

  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < n; ++i) header.push_back("m" + std::to_string(i + 1));
  if (a.rescaled) header.push_back("x");
  if (market) {
    for (const char* c : {"welfare", "revenue", "avg_welfare", "avg_revenue"}) header.push_back(c);
  }
  Csv csv(a.out, header);
  KahanSum w, r;
  for (std::size_t t = 0; t < orbit.states.size(); ++t) {
    std::vector<double> row{orbit.states.times[t]};
    row.insert(row.end(), orbit.states.states[t].begin(), orbit.states.states[t].end());
    if (a.rescaled) row.push_back(logistic_scale(eta) * orbit.states.states[t][0]);
    if (market) {
      w.add(orbit.welfare[t]);
      r.add(orbit.revenue[t]);
      const double count = static_cast<double>(t + 1);
      row.insert(row.end(), {orbit.welfare[t], orbit.revenue[t], w.value() / count, r.value() / count});
    }
    csv.row(row);
  }
  csv.close();
  summary() << "discrete: map=" << a.map.map << " eta=" << fmt(eta) << " steps=" << a.steps
            << " final=" << fmt(orbit.states.states.back());
  if (market) summary() << " mean_welfare=" << fmt(orbit.mean_welfare) << " mean_revenue=" << fmt(orbit.mean_revenue);
  summary() << '\n';
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string market;
  std::string target;
  std::string builtin;
  std::vector<double> m0;
  std::vector<double> x0;
  double t_end = 0.0;
  double dt = 0.0;
  double lambda = 0.0;
  double epsilon = std::numeric_limits<double>::infinity();
  bool discrete = false;
  std::string method = "rk45";
  double step = 1e-3;
  std::string out = "-";
};

TargetSystem target_for(const std::string& file, const std::string& builtin) {
  if (file.empty() == builtin.empty()) throw InvalidInput("give exactly one of --target and --builtin");
  if (!file.empty()) return load_target(file);
  if (builtin == "chua") return chua_as_target();
  throw InvalidInput("unknown builtin target " + builtin);
}

void run_simulate(const SimulateArgs& a) {
  if (!a.market.empty()) {
    if (!a.target.empty() || !a.builtin.empty()) throw InvalidInput("--market excludes --target and --builtin");
    const MarketInstance inst = load_market(a.market);
    const Profile m0 = broadcast(a.m0, inst.n_bidders);
    check_profile(inst, m0);
    const VectorField f = market_field(inst);
    IntegratorConfig cfg = default_config(f);
    if (a.method == "rk4") {
      cfg.method = Method::kRk4Fixed;
      cfg.step = a.step;
      cfg.max_step = a.step;
    }
    cfg.output_dt = a.dt;
    const Trajectory traj = integrate(f, m0, a.t_end, cfg);
    std::vector<std::string> header{"t"};
    for (int i = 0; i < inst.n_bidders; ++i) header.push_back("m" + std::to_string(i + 1));
    Csv csv(a.out, header);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      std::vector<double> row{traj.times[k]};
      row.insert(row.end(), traj.states[k].begin(), traj.states[k].end());
      csv.row(row);
    }
    csv.close();
    summary() << "simulate: market bidders=" << inst.n_bidders << " rows=" << traj.size()
              << " final=" << fmt(traj.states.back()) << '\n';
    return;
  }

  const TargetSystem target = target_for(a.target, a.builtin);
  CompileOptions opt;
  opt.lambda = a.lambda;
  opt.epsilon = a.epsilon;
  opt.continuum = !a.discrete;
  const CompiledMarket cm = compile(target, opt);
  std::vector<double> x0 = a.x0;
  if (x0.empty()) {
    for (const auto& [lo, hi] : target.box) x0.push_back(0.5 * (lo + hi));
  }
  const SimulationReport rep = verify_simulation(cm, x0, a.t_end);
  std::vector<std::string> header{"t"};
  for (int i = 0; i < target.dimension(); ++i) header.push_back("x" + std::to_string(i + 1));
  Csv csv(a.out, header);
  for (std::size_t k = 0; k < rep.trajectory.size(); ++k) {
    std::vector<double> row{rep.trajectory.times[k]};
    const std::vector<double> x = project(cm, rep.trajectory.states[k]);
    row.insert(row.end(), x.begin(), x.end());
    csv.row(row);
  }
  csv.close();
  summary() << "simulate: lambda=" << fmt(cm.lambda) << " bidders=" << cm.instance.n_bidders
            << " max_field_error=" << fmt(rep.max_error) << " bound=" << fmt(rep.bound);
  if (rep.escaped) {
    summary() << " escaped_band_at_t=" << fmt(rep.escape_time) << " bidder=" << rep.escape_bidder << '\n';
    throw VerificationError("bidder " + std::to_string(rep.escape_bidder) + " left the band [1.05, 1.95] at t = " +
                            fmt(rep.escape_time));
  }
  summary() << '\n';
  if (rep.max_error > rep.bound + 1e-9) {
    throw VerificationError("field error " + fmt(rep.max_error) + " exceeds the bound " + fmt(rep.bound));
  }
}

// ---------------------------------------------------------------------------
// reduce

struct ReduceArgs {
  std::string target;
  std::string builtin;
  double lambda = 0.0;
  double epsilon = std::numeric_limits<double>::infinity();
  bool discrete = false;
  long max_items = 1000000;
  std::string out;
  std::string market_out;
  int check = 0;
};

// Largest gap between the compiled market's primary utilities and the
// normalized target field at random box points with exact negation.
double check_compiled(const CompiledMarket& cm, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(kBoxLo, kBoxHi);
  const int d = cm.normalized.dimension();
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Profile m(cm.instance.n_bidders, kPeggedMultiplier);
    std::vector<double> x(d);
    for (int i = 0; i < d; ++i) {
      x[i] = u(rng);
      m[cm.primary[i]] = x[i];
      if (cm.negation[i] >= 0) m[cm.negation[i]] = 3.0 - x[i];
    }
    const std::vector<double> got = utility(cm.instance, m);
    const std::vector<double> want = cm.normalized.field(x);
    for (int i = 0; i < d; ++i) worst = std::max(worst, std::abs(got[cm.primary[i]] - want[i]));
  }
  return worst;
}

void run_reduce(const ReduceArgs& a, std::uint64_t seed) {
  const TargetSystem target = target_for(a.target, a.builtin);
  CompileOptions opt;
  opt.lambda = a.lambda;
  opt.epsilon = a.epsilon;
  opt.continuum = !a.discrete;
  opt.max_items = a.max_items;
  const CompiledMarket cm = compile(target, opt);
  if (!a.out.empty()) save_compiled(a.out, cm);
  if (!a.market_out.empty()) save_market(a.market_out, cm.instance);
  summary() << "reduce: bidders=" << cm.instance.n_bidders << " items=" << cm.instance.items.size()
            << " segments=" << cm.instance.segments.size() << " lambda=" << fmt(cm.lambda)
            << " negation_error=" << fmt(cm.negation_error) << " field_error_bound=" << fmt(cm.field_error_bound);
  double gap = 0.0;
  if (a.check > 0) {
    gap = check_compiled(cm, a.check, seed);
    summary() << " checked=" << a.check << " max_gap=" << fmt(gap);
  }
  summary() << '\n';
  if (gap > cm.discretization_error + 1e-9) {
    throw VerificationError("compiled field misses the target by " + fmt(gap));
  }
}

// ---------------------------------------------------------------------------
// chua

struct ChuaArgs {
  bool raw = false;
  bool augmented = false;
  bool compiled = false;
  double lambda = 100.0;
  std::vector<double> lambdas;
  double t_end = 200.0;
  double dt = 0.01;
  std::vector<double> x0{0.1, 0.1, 0.1};
  std::string units = "circuit";
  std::string out;
};

const std::vector<std::string> kCircuitNames{"x", "y", "z", "xb", "yb", "zb"};
const std::vector<std::string> kMultiplierNames{"s_x", "s_y", "s_z", "sb_x", "sb_y", "sb_z"};

State augmented_start(const std::vector<double>& x0) {
  return {x0[0], x0[1], x0[2], 3.0 - x0[0], 3.0 - x0[1], 3.0 - x0[2]};
}

// Orbit of the requested Chua system, as rows of (x, y, z[, xb, yb, zb]) in
// circuit units or multiplier units.
Trajectory chua_orbit(const ChuaArgs& a, double lam, bool multipliers) {
  const TargetSystem t = normalize(chua_as_target());
  if (a.raw) {
    IntegratorConfig cfg = default_config(chua_field());
    cfg.output_dt = a.dt;
    Trajectory traj = integrate(chua_field(), a.x0, a.t_end, cfg);
    if (multipliers) {
      for (auto& s : traj.states) s = t.encode(s);
    }
    return traj;
  }
  if (a.augmented) {
    const VectorField f = augmented_field(lam);
    IntegratorConfig cfg = default_config(f);
    cfg.output_dt = a.dt;
    Trajectory traj = integrate(f, augmented_start(a.x0), a.t_end, cfg);
    if (multipliers) {
      for (auto& s : traj.states) s = augmented_to_multipliers(s, t.coords);
    }
    return traj;
  }
  CompileOptions opt;
  opt.lambda = lam;
  const CompiledMarket cm = compile(chua_as_target(), opt);
  const VectorField f = compiled_field(cm);
  IntegratorConfig cfg = default_config(f);
  cfg.output_dt = a.dt;
  Trajectory traj = integrate(f, initial_state(cm, a.x0), a.t_end, cfg);
  for (auto& m : traj.states) {
    State s(6);
    for (int k = 0; k < 3; ++k) {
      s[k] = m[cm.primary[k]];
      s[3 + k] = m[cm.negation[k]];
    }
    m = multipliers ? s : augmented_from_multipliers(s, cm.decode);
  }
  return traj;
}

void run_chua(ChuaArgs a) {
  const int modes = a.raw + a.augmented + a.compiled;
  if (modes > 1) throw InvalidInput("choose at most one system flag");
  if (modes == 0) a.raw = true;
  if (a.x0.size() != 3) throw InvalidInput("--x0 needs three values");
  if (!(a.dt > 0.0)) throw InvalidInput("--dt must be positive");
  if (a.out.empty()) throw InvalidInput("--out is required");
  const bool multipliers = a.units == "multiplier";
  if (!a.lambdas.empty() && a.raw) throw InvalidInput("--lambdas needs --augmented or --compiled");
  const std::vector<double> lams = a.lambdas.empty() ? std::vector<double>{a.lambda} : a.lambdas;
  const std::size_t width = a.raw ? 3 : 6;
  const auto& names = multipliers ? kMultiplierNames : kCircuitNames;

  std::vector<std::string> header;
  if (!a.lambdas.empty()) header.push_back("lambda");
  header.push_back("t");
  header.insert(header.end(), names.begin(), names.begin() + width);
  Csv csv(a.out, header);
  std::vector<double> lo(width, std::numeric_limits<double>::infinity()), hi(width, -lo[0]);
  for (double lam : lams) {
    const Trajectory traj = chua_orbit(a, lam, multipliers);
    for (std::size_t k = 0; k < traj.size(); ++k) {
      std::vector<double> row;
      if (!a.lambdas.empty()) row.push_back(lam);
      row.push_back(traj.times[k]);
      row.insert(row.end(), traj.states[k].begin(), traj.states[k].end());
      csv.row(row);
      for (std::size_t i = 0; i < width; ++i) {
        lo[i] = std::min(lo[i], traj.states[k][i]);
        hi[i] = std::max(hi[i], traj.states[k][i]);
      }
    }
  }
  csv.close();
  summary() << "chua: system=" << (a.raw ? "raw" : a.augmented ? "augmented" : "compiled");
  if (!a.raw) summary() << " lambda=" << (a.lambdas.empty() ? fmt(a.lambda) : fmt(a.lambdas));
  summary() << " rows=" << csv.rows();
  for (std::size_t i = 0; i < 3; ++i) summary() << ' ' << names[i] << "=[" << fmt(lo[i]) << ", " << fmt(hi[i]) << ']';
  summary() << '\n';
}

// ---------------------------------------------------------------------------
// lyapunov

struct LyapunovArgs {
  std::string system = "chua-augmented";
  double lambda = 100.0;
  double rate = 1.0;
  std::vector<double> x0;
  LyapunovConfig cfg;
  std::string out;
};

VectorField linear_field(double rate) {
  return {1, [rate](const State& x, State& dx) { dx[0] = rate * x[0]; }, {}};
}

void run_lyapunov(const LyapunovArgs& a) {
  VectorField f;
  State x0;
  const std::vector<double> base = a.x0.empty() ? std::vector<double>{0.1, 0.1, 0.1} : a.x0;
  if (a.system == "linear") {
    f = linear_field(a.rate);
    x0 = a.x0.empty() ? State{0.0} : a.x0;
  } else {
    if (base.size() != 3) throw InvalidInput("--x0 needs three values");
    if (a.system == "chua") {
      f = chua_field();
      x0 = base;
    } else if (a.system == "chua-augmented") {
      f = augmented_field(a.lambda);
      x0 = augmented_start(base);
    } else {
      CompileOptions opt;
      opt.lambda = a.lambda;
      const CompiledMarket cm = compile(chua_as_target(), opt);
      f = compiled_field(cm);
      x0 = initial_state(cm, base);
    }
  }
  const LyapunovResult res = largest_lyapunov(f, x0, a.cfg);
  if (!a.out.empty()) {
    Csv csv(a.out, {"t", "running_estimate"});
    for (const auto& [t, v] : res.running) csv.row({t, v});
    csv.close();
  }
  summary() << "lyapunov: system=" << a.system;
  if (a.system != "chua" && a.system != "linear") summary() << " lambda=" << fmt(a.lambda);
  summary() << " exponent=" << format_double(res.exponent) << " renormalizations=" << res.renormalizations
            << " units=1/time (natural log)\n";
}

// ---------------------------------------------------------------------------
// poincare and horseshoe

struct SectionSystem {
  VectorField field;
  PoincareSection section;
};

SectionSystem section_system(const std::string& system, double lam) {
  if (system == "chua") return {chua_field(), PoincareSection::galias()};
  if (system == "chua-augmented") return {augmented_field(lam), PoincareSection::galias_augmented()};
  throw InvalidInput("unknown system " + system);
}

struct PoincareArgs {
  std::string system = "chua";
  double lambda = 1e4;
  double y = kNaN;
  double z = kNaN;
  int returns = 1;
  double t_cap = 100.0;
  std::string out;
};

void run_poincare(const PoincareArgs& a) {
  if (std::isnan(a.y) || std::isnan(a.z)) throw InvalidInput("--y and --z are required");
  if (a.returns < 1) throw InvalidInput("--returns must be >= 1");
  const SectionSystem sys = section_system(a.system, a.lambda);
  std::unique_ptr<Csv> csv;
  if (!a.out.empty()) csv = std::make_unique<Csv>(a.out, std::vector<std::string>{"k", "y", "z", "tau", "region"});
  Point2 p{a.y, a.z};
  double total = 0.0;
  if (csv) csv->cells({"0", format_double(p.y), format_double(p.z), "0", to_string(classify(sys.section, p))});
  for (int k = 1; k <= a.returns; ++k) {
    const PoincareHit hit = poincare_map(sys.field, sys.section, p, std::nullopt, a.t_cap);
    p = hit.point;
    total += hit.tau;
    if (csv) {
      csv->cells({std::to_string(k), format_double(p.y), format_double(p.z), format_double(hit.tau),
                  to_string(classify(sys.section, p))});
    }
  }
  if (csv) csv->close();
  summary() << "poincare: system=" << a.system << " returns=" << a.returns << " y=" << format_double(p.y)
            << " z=" << format_double(p.z) << " total_time=" << format_double(total)
            << " region=" << to_string(classify(sys.section, p)) << '\n';
}

struct HorseshoeArgs {
  std::string system = "chua";
  double lambda = 1e4;
  std::vector<double> lambdas;
  int samples = 400;
  bool doubling = false;
  int threads = 0;
  std::string out;
};

void print_report(const HorseshoeReport& rep) {
  for (const auto& e : rep.edges) {
    std::cout << "  " << e.name << " -> " << e.verdict() << '\n';
  }
  auto yes = [](bool b) { return b ? "yes" : "no"; };
  std::cout << "  boundary_in_P=" << yes(rep.boundary_in_p) << " N0_split=" << yes(rep.n0_split)
            << " N1_split=" << yes(rep.n1_split) << '\n';
  std::cout << "  precondition=" << (rep.precondition_satisfied ? "satisfied" : "violated") << '\n';
}

void write_images(Csv& csv, const PoincareSection& s, const HorseshoeReport& rep, double lam) {
  std::map<std::string, std::pair<Point2, Point2>> ends = {
      {"N0D", {s.n0[2], s.n0[3]}}, {"N0U", {s.n0[0], s.n0[1]}}, {"N1D", {s.n1[2], s.n1[3]}},
      {"N1U", {s.n1[0], s.n1[1]}}, {"N0R", {s.n0[1], s.n0[2]}}, {"N0L", {s.n0[3], s.n0[0]}},
      {"N1R", {s.n1[1], s.n1[2]}}, {"N1L", {s.n1[3], s.n1[0]}},
  };
  const int n = rep.samples;
  for (const auto& e : rep.edges) {
    const auto& [p, q] = ends.at(e.name);
    for (int k = 0; k < n; ++k) {
      const double w = static_cast<double>(k) / (n - 1);
      csv.cells({format_double(lam), e.name, std::to_string(k), format_double(p.y + w * (q.y - p.y)),
                 format_double(p.z + w * (q.z - p.z)), format_double(e.images[k].y), format_double(e.images[k].z),
                 to_string(e.regions[k])});
    }
  }
}

void run_horseshoe(const HorseshoeArgs& a) {
  if (a.system == "chua" && !a.lambdas.empty()) throw InvalidInput("--lambdas needs --system chua-augmented");
  if (a.samples < 2) throw InvalidInput("--samples must be >= 2");
  std::vector<double> lams = a.lambdas;
  if (lams.empty()) lams.push_back(a.system == "chua" ? kNaN : a.lambda);
  std::unique_ptr<Csv> csv;
  if (!a.out.empty()) {
    csv = std::make_unique<Csv>(
        a.out, std::vector<std::string>{"lambda", "edge", "k", "src_y", "src_z", "img_y", "img_z", "region"});
  }
  int passed = 0;
  double first_pass = kNaN;
  bool stable = true;
  for (double lam : lams) {
    const SectionSystem sys = section_system(a.system, lam);
    std::cout << "horseshoe: system=" << a.system;
    if (a.system != "chua") std::cout << " lambda=" << fmt(lam);
    std::cout << " samples=" << a.samples << '\n';
    const HorseshoeReport rep =
        check_horseshoe_precondition(sys.field, sys.section, a.samples, std::nullopt, a.threads);
    print_report(rep);
    if (a.doubling) {
      const HorseshoeReport twice =
          check_horseshoe_precondition(sys.field, sys.section, 2 * a.samples, std::nullopt, a.threads);
      const bool same = same_classification(rep, twice);
      stable = stable && same;
      std::cout << "  doubling to " << 2 * a.samples << " samples: " << (same ? "stable" : "changed") << '\n';
    }
    if (rep.precondition_satisfied) {
      if (passed++ == 0) first_pass = lam;
    }
    if (csv) write_images(*csv, sys.section, rep, lam);
  }
  if (csv) csv->close();
  summary() << "horseshoe: system=" << a.system << " passed=" << passed << '/' << lams.size();
  if (a.system != "chua") summary() << " smallest_passing_lambda=" << (passed ? fmt(first_pass) : "none");
  if (a.doubling) summary() << " doubling=" << (stable ? "stable" : "changed");
  summary() << '\n';
}

// ---------------------------------------------------------------------------
// bifurcate, cobweb, periodic

struct BifurcateArgs {
  MapArgs map;
  double eta_min = kNaN;
  double eta_max = kNaN;
  int n_eta = 500;
  std::vector<double> m0;
  long burn_in = 1000;
  long keep = 200;
  int coordinate = 0;
  bool rescaled = false;
  std::string out;
};

void run_bifurcate(const BifurcateArgs& a) {
  if (std::isnan(a.eta_min) || std::isnan(a.eta_max)) throw InvalidInput("--eta-min and --eta-max are required");
  if (a.rescaled && a.map.map != "logistic") throw InvalidInput("--rescaled applies to --map logistic only");
  if (a.out.empty()) throw InvalidInput("--out is required");
  const int dim = market_map(a.map, std::max(a.eta_min, 1e-9)).dimension();
  const Profile m0 = broadcast(a.m0, dim);
  BifurcationOptions opt;
  opt.burn_in = a.burn_in;
  opt.keep = a.keep;
  opt.coordinate = a.coordinate;
  if (a.coordinate < 0 || a.coordinate >= static_cast<int>(m0.size())) throw InvalidInput("--coordinate out of range");
  const MapArgs args = a.map;
  const auto rows = bifurcation_scan([&args](double eta) { return market_map(args, eta); }, a.eta_min, a.eta_max,
                                     a.n_eta, m0, opt);
  Csv csv(a.out, {"eta", "value"});
  long diverged = 0;
  for (const auto& r : rows) {
    diverged += r.diverged;
    csv.row({r.eta, a.rescaled ? logistic_scale(r.eta) * r.value : r.value});
  }
  csv.close();
  summary() << "bifurcate: map=" << a.map.map << " eta=[" << fmt(a.eta_min) << ", " << fmt(a.eta_max)
            << "] rates=" << a.n_eta << " rows=" << rows.size() << " diverged=" << diverged << '\n';
}

struct CurveArgs {
  std::string out;
  double lo = kNaN;
  double hi = kNaN;
  int points = 1000;
};

void add_curve_options(CLI::App* sub, CurveArgs& c) {
  sub->add_option("--curve-out", c.out, "CSV of the map and its compositions on [lo, hi]");
  sub->add_option("--lo", c.lo, "left end of the plotted or searched interval");
  sub->add_option("--hi", c.hi, "right end of the plotted or searched interval");
  sub->add_option("--points", c.points, "grid points on the curve");
}

// Columns m, F1, ..., Fk where Fj is the j-fold composition.
void write_curve(const CurveArgs& c, const ScalarMap& f, int k) {
  if (std::isnan(c.lo) || std::isnan(c.hi) || !(c.lo < c.hi)) throw InvalidInput("--lo < --hi is required");
  if (c.points < 2) throw InvalidInput("--points must be >= 2");
  std::vector<std::string> header{"m"};
  for (int j = 1; j <= k; ++j) header.push_back("F" + std::to_string(j));
  Csv csv(c.out, header);
  for (int i = 0; i < c.points; ++i) {
    const double m = c.lo + (c.hi - c.lo) * i / (c.points - 1);
    std::vector<double> row{m};
    double y = m;
    for (int j = 1; j <= k; ++j) {
      y = f(y);
      row.push_back(y);
    }
    csv.row(row);
  }
  csv.close();
}

struct CobwebArgs {
  MapArgs map;
  double m0 = kNaN;
  int steps = 50;
  CurveArgs curve;
  std::string out;
};

void run_cobweb(const CobwebArgs& a) {
  if (std::isnan(a.m0)) throw InvalidInput("--m0 is required");
  if (a.out.empty()) throw InvalidInput("--out is required");
  const double eta = rate_of(a.map);
  const ScalarMap f = scalar_map(a.map, eta);
  const auto segs = cobweb_trace(f, a.m0, a.steps);
  Csv csv(a.out, {"x0", "y0", "x1", "y1"});
  for (const auto& s : segs) csv.row({s.x0, s.y0, s.x1, s.y1});
  csv.close();
  if (!a.curve.out.empty()) write_curve(a.curve, f, 1);
  summary() << "cobweb: map=" << a.map.map << " eta=" << fmt(eta) << " steps=" << a.steps
            << " final=" << fmt(segs.back().y1) << '\n';
}

struct PeriodicArgs {
  MapArgs map;
  int k = 3;
  CurveArgs curve;
  std::string out;
};

void run_periodic(const PeriodicArgs& a) {
  if (a.k < 1) throw InvalidInput("--k must be >= 1");
  if (std::isnan(a.curve.lo) || std::isnan(a.curve.hi)) throw InvalidInput("--lo and --hi are required");
  const double eta = rate_of(a.map);
  const ScalarMap f = scalar_map(a.map, eta);
  const auto orbits = find_periodic_orbits(f, a.k, a.curve.lo, a.curve.hi);
  if (!a.out.empty()) {
    Csv csv(a.out, {"point", "j", "m"});
    for (std::size_t i = 0; i < orbits.size(); ++i) {
      for (std::size_t j = 0; j < orbits[i].orbit.size(); ++j) {
        csv.row({static_cast<double>(i), static_cast<double>(j), orbits[i].orbit[j]});
      }
    }
    csv.close();
  }
  if (!a.curve.out.empty()) write_curve(a.curve, f, std::max(a.k, 3));
  summary() << "periodic: map=" << a.map.map << " eta=" << fmt(eta) << " k=" << a.k << " points=" << orbits.size();
  if (!orbits.empty()) summary() << " orbit=" << fmt(orbits.front().orbit);
  summary() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autobidding dynamics: markets, reductions, Chua simulation and chaos diagnostics"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 0;
  app.add_option("--seed", seed, "seed for randomized sampling");

  DiscreteArgs dis;
  auto* s_dis = app.add_subcommand("discrete", "iterate a discrete-time autobidding map");
  add_map_options(s_dis, dis.map, true);
  s_dis->add_option("--m0", dis.m0, "initial multipliers; one value is broadcast")->delimiter(',')->required();
  s_dis->add_option("--steps", dis.steps, "number of steps")->required();
  s_dis->add_option("--burn-in", dis.burn_in, "steps dropped from the reported means (default 20%)");
  s_dis->add_flag("--rescaled", dis.rescaled, "add the logistic coordinate x = (r-1)/(2r) m");
  s_dis->add_option("--out", dis.out, "CSV path, - for stdout");

  SimulateArgs sim;
  auto* s_sim = app.add_subcommand("simulate", "integrate market dynamics or a compiled target");
  s_sim->add_option("--market", sim.market, "market file: integrate dm/dt = u(m)");
  s_sim->add_option("--target", sim.target, "target file: compile and verify");
  s_sim->add_option("--builtin", sim.builtin, "builtin target (chua)");
  s_sim->add_option("--m0", sim.m0, "initial multipliers for --market")->delimiter(',');
  s_sim->add_option("--x0", sim.x0, "initial target state (default: box center)")->delimiter(',');
  s_sim->add_option("--t-end", sim.t_end, "time horizon")->required();
  s_sim->add_option("--dt", sim.dt, "output spacing for --market (0: every step)");
  s_sim->add_option("--lambda", sim.lambda, "negation rate (0: automatic)");
  s_sim->add_option("--epsilon", sim.epsilon, "requested field accuracy");
  s_sim->add_flag("--discrete", sim.discrete, "discretize nonlinear gadgets into items");
  s_sim->add_option("--method", sim.method, "rk45 or rk4 for --market; rk4 suits markets with items")
      ->check(CLI::IsMember({"rk45", "rk4"}));
  s_sim->add_option("--step", sim.step, "rk4 step");
  s_sim->add_option("--out", sim.out, "CSV path, - for stdout");

  ReduceArgs red;
  auto* s_red = app.add_subcommand("reduce", "compile a target system into a market");
  s_red->add_option("--target", red.target, "target file");
  s_red->add_option("--builtin", red.builtin, "builtin target (chua)");
  s_red->add_option("--lambda", red.lambda, "negation rate (0: automatic)");
  s_red->add_option("--epsilon", red.epsilon, "requested field accuracy");
  s_red->add_flag("--discrete", red.discrete, "discretize nonlinear gadgets into items");
  s_red->add_option("--max-items", red.max_items, "item budget for --discrete");
  s_red->add_option("--out", red.out, "compiled market JSON");
  s_red->add_option("--market-out", red.market_out, "market file of the compiled instance");
  s_red->add_option("--check", red.check, "random box points checked against the target field");

  ChuaArgs chu;
  auto* s_chu = app.add_subcommand("chua", "integrate Chua's circuit or a system simulating it");
  s_chu->add_flag("--raw", chu.raw, "three-dimensional circuit (default)");
  s_chu->add_flag("--augmented", chu.augmented, "six-dimensional augmented system");
  s_chu->add_flag("--compiled", chu.compiled, "compiled market, reported as the augmented state");
  s_chu->add_option("--lambda", chu.lambda, "negation rate");
  s_chu->add_option("--lambdas", chu.lambdas, "sweep of negation rates")->delimiter(',');
  s_chu->add_option("--t-end", chu.t_end, "time horizon");
  s_chu->add_option("--dt", chu.dt, "output spacing");
  s_chu->add_option("--x0", chu.x0, "initial (x, y, z); bars start at 3 - x")->delimiter(',');
  s_chu->add_option("--units", chu.units, "circuit or multiplier")->check(CLI::IsMember({"circuit", "multiplier"}));
  s_chu->add_option("--out", chu.out, "CSV path")->required();

  LyapunovArgs lya;
  auto* s_lya = app.add_subcommand("lyapunov", "largest Lyapunov exponent by Benettin renormalization");
  s_lya->add_option("--system", lya.system, "chua, chua-augmented, chua-compiled or linear")
      ->check(CLI::IsMember({"chua", "chua-augmented", "chua-compiled", "linear"}));
  s_lya->add_option("--lambda", lya.lambda, "negation rate");
  s_lya->add_option("--rate", lya.rate, "growth rate a of the linear field dx/dt = a x");
  s_lya->add_option("--x0", lya.x0, "initial state")->delimiter(',');
  s_lya->add_option("--d0", lya.cfg.d0, "perturbation size");
  s_lya->add_option("--renorm-dt", lya.cfg.renorm_dt, "renormalization interval");
  s_lya->add_option("--t-total", lya.cfg.t_total, "total time");
  s_lya->add_option("--transient", lya.cfg.transient, "time discarded before averaging");
  s_lya->add_option("--out", lya.out, "CSV of the running estimate");

  PoincareArgs poi;
  auto* s_poi = app.add_subcommand("poincare", "return map on the plane x = 1");
  s_poi->add_option("--system", poi.system, "chua or chua-augmented")
      ->check(CLI::IsMember({"chua", "chua-augmented"}));
  s_poi->add_option("--lambda", poi.lambda, "negation rate");
  s_poi->add_option("--y", poi.y, "in-plane y")->required();
  s_poi->add_option("--z", poi.z, "in-plane z")->required();
  s_poi->add_option("--returns", poi.returns, "number of returns");
  s_poi->add_option("--t-cap", poi.t_cap, "time allowed per return");
  s_poi->add_option("--out", poi.out, "CSV of successive returns");

  HorseshoeArgs hor;
  auto* s_hor = app.add_subcommand("horseshoe", "check the deformed-horseshoe precondition");
  s_hor->add_option("--system", hor.system, "chua or chua-augmented")
      ->check(CLI::IsMember({"chua", "chua-augmented"}));
  s_hor->add_option("--lambda", hor.lambda, "negation rate");
  s_hor->add_option("--lambdas", hor.lambdas, "scan of negation rates")->delimiter(',');
  s_hor->add_option("--samples", hor.samples, "samples per quadrangle edge");
  s_hor->add_flag("--check-doubling", hor.doubling, "repeat with twice the samples");
  s_hor->add_option("--threads", hor.threads, "worker threads (0: all cores)");
  s_hor->add_option("--out", hor.out, "CSV of edge samples and their images");

  BifurcateArgs bif;
  auto* s_bif = app.add_subcommand("bifurcate", "bifurcation diagram over the learning rate");
  add_map_options(s_bif, bif.map, false);
  s_bif->add_option("--eta-min", bif.eta_min, "smallest rate")->required();
  s_bif->add_option("--eta-max", bif.eta_max, "largest rate")->required();
  s_bif->add_option("--n-eta", bif.n_eta, "number of rates");
  s_bif->add_option("--m0", bif.m0, "initial multipliers")->delimiter(',')->required();
  s_bif->add_option("--burn-in", bif.burn_in, "iterations dropped per rate");
  s_bif->add_option("--keep", bif.keep, "iterations kept per rate");
  s_bif->add_option("--coordinate", bif.coordinate, "bidder reported");
  s_bif->add_flag("--rescaled", bif.rescaled, "report x = (r-1)/(2r) m for the logistic map");
  s_bif->add_option("--out", bif.out, "CSV path")->required();

  CobwebArgs cob;
  auto* s_cob = app.add_subcommand("cobweb", "cobweb trace of a one-dimensional map");
  add_map_options(s_cob, cob.map, true);
  s_cob->add_option("--m0", cob.m0, "starting point")->required();
  s_cob->add_option("--steps", cob.steps, "iterations");
  add_curve_options(s_cob, cob.curve);
  s_cob->add_option("--out", cob.out, "CSV path")->required();

  PeriodicArgs per;
  auto* s_per = app.add_subcommand("periodic", "period-k points of a one-dimensional map");
  add_map_options(s_per, per.map, true);
  s_per->add_option("--k", per.k, "period");
  add_curve_options(s_per, per.curve);
  s_per->add_option("--out", per.out, "CSV of the orbits found");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (s_dis->parsed()) run_discrete(dis);
    if (s_sim->parsed()) run_simulate(sim);
    if (s_red->parsed()) run_reduce(red, seed);
    if (s_chu->parsed()) run_chua(chu);
    if (s_lya->parsed()) run_lyapunov(lya);
    if (s_poi->parsed()) run_poincare(poi);
    if (s_hor->parsed()) run_horseshoe(hor);
    if (s_bif->parsed()) run_bifurcate(bif);
    if (s_cob->parsed()) run_cobweb(cob);
    if (s_per->parsed()) run_periodic(per);
  } catch (const VerificationError& e) {
    std::cerr << "error (VerificationError): " << e.what() << '\n';
    return 4;
  } catch (const DivergenceError& e) {
    std::cerr << "error (DivergenceError): " << e.what() << '\n';
    return 3;
  } catch (const StiffnessError& e) {
    std::cerr << "error (StiffnessError): " << e.what() << '\n';
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error (NumericalError): " << e.what() << '\n';
    return 3;
  } catch (const InvalidInput& e) {
    std::cerr << "error (InvalidInput): " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
