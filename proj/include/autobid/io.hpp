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
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "autobid/error.hpp"
#include "autobid/market.hpp"
#include "autobid/reduction.hpp"
#include "autobid/scalar_function.hpp"

namespace autobid {

using Json = nlohmann::ordered_json;

inline constexpr const char* kMarketFormat = "autobid-market/1";
inline constexpr const char* kTargetFormat = "autobid-target/1";
inline constexpr const char* kCompiledFormat = "autobid-compiled/1";

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path) {
    out_.open(path, std::ios::binary);
    if (!out_) throw InvalidInput("cannot write " + path);
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
    columns_ = header.size();
  }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_) throw InvalidInput(path_ + ": row width does not match the header");
    for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << format_double(values[i]);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw InvalidInput("failed writing " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t columns_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  CsvTable t;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::stringstream ss(line);
    std::string cell;
    if (line_no == 1) {
      while (std::getline(ss, cell, ',')) t.header.push_back(cell);
      continue;
    }
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw InvalidInput(path + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
      }
    }
    if (row.size() != t.header.size()) {
      throw InvalidInput(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                         " columns");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const std::vector<std::string>& names) {
  std::vector<std::string> header{"t"};
  header.insert(header.end(), names.begin(), names.end());
  CsvWriter w(path, header);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::vector<double> row{traj.times[k]};
    row.insert(row.end(), traj.states[k].begin(), traj.states[k].end());
    w.row(row);
  }
  w.close();
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline const Json& field(const Json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw InvalidInput(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw InvalidInput(where + "." + key + ": missing field");
  return *it;
}

inline double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw InvalidInput(where + ": expected a number");
  return j.get<double>();
}

inline std::optional<double> optional_number(const Json& j, const std::string& where) {
  if (j.is_null()) return std::nullopt;
  return number(j, where);
}

inline int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw InvalidInput(where + ": expected an integer");
  return j.get<int>();
}

inline std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw InvalidInput(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline std::pair<double, double> pair_of(const Json& j, const std::string& where) {
  const auto v = numbers(j, where);
  if (v.size() != 2) throw InvalidInput(where + ": expected two numbers");
  return {v[0], v[1]};
}

inline Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

inline Json parse(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidInput(source + ": " + e.what());
  }
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInput("cannot write " + path);
  out << text;
  out.close();
  if (!out) throw InvalidInput("failed writing " + path);
}

inline void check_format(const Json& j, const char* expected, const std::string& where) {
  const Json& f = field(j, "format", where);
  if (!f.is_string() || f.get<std::string>() != expected) {
    throw InvalidInput(where + ".format: expected \"" + std::string(expected) + "\"");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Scalar functions

inline Json to_json(const ScalarFunction& f) {
  return Json{{"shape", std::string(to_string(f.shape))},
              {"params", f.params},
              {"outer", f.outer},
              {"inner", f.inner},
              {"shift", f.shift},
              {"linear", f.linear},
              {"offset", f.offset}};
}

inline ScalarFunction function_from_json(const Json& j, const std::string& where) {
  using namespace detail;
  const Json& shape = field(j, "shape", where);
  if (!shape.is_string()) throw InvalidInput(where + ".shape: expected a string");
  ScalarFunction f;
  try {
    f.shape = shape_from_string(shape.get<std::string>());
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ".shape: " + e.what());
  }
  f.params = numbers(field(j, "params", where), where + ".params");
  f.outer = number(field(j, "outer", where), where + ".outer");
  f.inner = number(field(j, "inner", where), where + ".inner");
  f.shift = number(field(j, "shift", where), where + ".shift");
  f.linear = number(field(j, "linear", where), where + ".linear");
  f.offset = number(field(j, "offset", where), where + ".offset");
  try {
    f.validate();
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ": " + e.what());
  }
  return f;
}

// ---------------------------------------------------------------------------
// Market instances

inline Json to_json(const Density& d) {
  Json j{{"kind", to_string(d.kind)}};
  switch (d.kind) {
    case DensityKind::kConstant:
    case DensityKind::kNegation: j["c"] = d.c; break;
    case DensityKind::kDerived: j["h"] = to_json(d.h); break;
    case DensityKind::kTabulated: {
      Json knots = Json::array();
      for (const auto& [p, rho] : d.table) knots.push_back({p, rho});
      j["knots"] = knots;
      break;
    }
  }
  return j;
}

inline Density density_from_json(const Json& j, const std::string& where) {
  using namespace detail;
  const Json& kind = field(j, "kind", where);
  if (!kind.is_string()) throw InvalidInput(where + ".kind: expected a string");
  const std::string k = kind.get<std::string>();
  if (k == to_string(DensityKind::kConstant)) return Density::constant(number(field(j, "c", where), where + ".c"));
  if (k == to_string(DensityKind::kNegation)) return Density::negation(number(field(j, "c", where), where + ".c"));
  if (k == to_string(DensityKind::kDerived)) return Density::derived(function_from_json(field(j, "h", where), where + ".h"));
  if (k == to_string(DensityKind::kTabulated)) {
    const Json& knots = field(j, "knots", where);
    if (!knots.is_array()) throw InvalidInput(where + ".knots: expected an array");
    std::vector<std::pair<double, double>> table;
    for (std::size_t i = 0; i < knots.size(); ++i) {
      table.push_back(pair_of(knots[i], where + ".knots[" + std::to_string(i) + "]"));
    }
    return Density::tabulated(std::move(table));
  }
  throw InvalidInput(where + ".kind: unknown density kind '" + k + "'");
}

inline Json to_json(const MarketInstance& inst) {
  Json items = Json::array();
  for (const auto& it : inst.items) {
    items.push_back(Json{{"values", it.values}, {"reserve_price", detail::optional_json(it.reserve_price)}});
  }
  Json segs = Json::array();
  for (const auto& s : inst.segments) {
    segs.push_back(Json{{"owners", s.owners},
                        {"per_unit_value", s.per_unit_value},
                        {"p_lo", s.p_lo},
                        {"p_hi", s.p_hi},
                        {"density", to_json(s.density)}});
  }
  return Json{{"format", kMarketFormat}, {"n_bidders", inst.n_bidders}, {"items", items}, {"segments", segs}};
}

inline MarketInstance market_from_json(const Json& j, const std::string& where = "market") {
  using namespace detail;
  check_format(j, kMarketFormat, where);
  MarketInstance inst;
  inst.n_bidders = integer(field(j, "n_bidders", where), where + ".n_bidders");
  const Json& items = field(j, "items", where);
  if (!items.is_array()) throw InvalidInput(where + ".items: expected an array");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const std::string w = where + ".items[" + std::to_string(i) + "]";
    DiscreteItem it;
    it.values = numbers(field(items[i], "values", w), w + ".values");
    it.reserve_price = optional_number(field(items[i], "reserve_price", w), w + ".reserve_price");
    inst.items.push_back(std::move(it));
  }
  const Json& segs = field(j, "segments", where);
  if (!segs.is_array()) throw InvalidInput(where + ".segments: expected an array");
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string w = where + ".segments[" + std::to_string(i) + "]";
    ContinuumSegment s;
    const Json& owners = field(segs[i], "owners", w);
    if (!owners.is_array()) throw InvalidInput(w + ".owners: expected an array");
    for (std::size_t k = 0; k < owners.size(); ++k) {
      s.owners.push_back(integer(owners[k], w + ".owners[" + std::to_string(k) + "]"));
    }
    s.per_unit_value = number(field(segs[i], "per_unit_value", w), w + ".per_unit_value");
    s.p_lo = number(field(segs[i], "p_lo", w), w + ".p_lo");
    s.p_hi = number(field(segs[i], "p_hi", w), w + ".p_hi");
    s.density = density_from_json(field(segs[i], "density", w), w + ".density");
    inst.segments.push_back(std::move(s));
  }
  try {
    validate(inst);
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ": " + e.what());
  }
  return inst;
}

inline std::string market_to_string(const MarketInstance& inst) { return to_json(inst).dump(2) + "\n"; }

inline MarketInstance load_market(const std::string& path) {
  return market_from_json(detail::parse(detail::slurp(path), path), path);
}

inline void save_market(const std::string& path, const MarketInstance& inst) {
  validate(inst);
  detail::spit(path, market_to_string(inst));
}

// ---------------------------------------------------------------------------
// Target systems

inline Json to_json(const TargetSystem& t) {
  Json h = Json::array();
  for (const auto& f : t.h) h.push_back(to_json(f));
  Json box = Json::array();
  for (const auto& [lo, hi] : t.box) box.push_back({lo, hi});
  Json shift = Json::array();
  for (double s : t.slope_shift) shift.push_back(std::isnan(s) ? Json(nullptr) : Json(s));
  return Json{{"format", kTargetFormat},
              {"A", t.A},
              {"h", h},
              {"box", box},
              {"normalized", t.normalized},
              {"lipschitz", detail::optional_json(t.lipschitz)},
              {"slope_shift", shift}};
}

inline TargetSystem target_from_json(const Json& j, const std::string& where = "target") {
  using namespace detail;
  check_format(j, kTargetFormat, where);
  TargetSystem t;
  const Json& a = field(j, "A", where);
  if (!a.is_array()) throw InvalidInput(where + ".A: expected an array of rows");
  for (std::size_t i = 0; i < a.size(); ++i) t.A.push_back(numbers(a[i], where + ".A[" + std::to_string(i) + "]"));
  const Json& h = field(j, "h", where);
  if (!h.is_array()) throw InvalidInput(where + ".h: expected an array");
  for (std::size_t i = 0; i < h.size(); ++i) t.h.push_back(function_from_json(h[i], where + ".h[" + std::to_string(i) + "]"));
  const Json& box = field(j, "box", where);
  if (!box.is_array()) throw InvalidInput(where + ".box: expected an array");
  for (std::size_t i = 0; i < box.size(); ++i) t.box.push_back(pair_of(box[i], where + ".box[" + std::to_string(i) + "]"));
  const Json& norm = field(j, "normalized", where);
  if (!norm.is_boolean()) throw InvalidInput(where + ".normalized: expected true or false");
  t.normalized = norm.get<bool>();
  t.lipschitz = optional_number(field(j, "lipschitz", where), where + ".lipschitz");
  const Json& shift = field(j, "slope_shift", where);
  if (!shift.is_array()) throw InvalidInput(where + ".slope_shift: expected an array");
  for (std::size_t i = 0; i < shift.size(); ++i) {
    t.slope_shift.push_back(optional_number(shift[i], where + ".slope_shift[" + std::to_string(i) + "]")
                                .value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  try {
    validate(t);
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ": " + e.what());
  }
  return t;
}

inline std::string target_to_string(const TargetSystem& t) { return to_json(t).dump(2) + "\n"; }

inline TargetSystem load_target(const std::string& path) {
  return target_from_json(detail::parse(detail::slurp(path), path), path);
}

inline void save_target(const std::string& path, const TargetSystem& t) {
  validate(t);
  detail::spit(path, target_to_string(t));
}

// ---------------------------------------------------------------------------
// Compiled markets

inline Json to_json(const CompiledMarket& cm) {
  Json coords = Json::array();
  for (const auto& c : cm.decode) coords.push_back(Json{{"alpha", c.alpha}, {"beta", c.beta}});
  return Json{{"format", kCompiledFormat},
              {"lambda", cm.lambda},
              {"primary", cm.primary},
              {"negation", cm.negation},
              {"auxiliary", cm.auxiliary},
              {"coords", coords},
              {"speed_bound", cm.speed_bound},
              {"negation_error", cm.negation_error},
              {"discretization_error", cm.discretization_error},
              {"field_error_bound", cm.field_error_bound},
              {"item_labels", cm.item_labels},
              {"segment_labels", cm.segment_labels},
              {"target", to_json(cm.normalized)},
              {"market", to_json(cm.instance)}};
}

inline void save_compiled(const std::string& path, const CompiledMarket& cm) {
  detail::spit(path, to_json(cm).dump(2) + "\n");
}

}  // namespace autobid
