// Copyright 2026 The photonic-vqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// File formats: strict JSON (schema_version 1, complex numbers as [re, im],
// 1-based modes) and RFC-4180 CSV.

#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "photonic/core.hpp"
#include "photonic/mesh.hpp"
#include "photonic/optimize.hpp"

namespace photonic::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

/// File could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path.string());
  return ss.str();
}

/// Creates missing parent directories.
inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ValidationError(what + ": invalid JSON: " + e.what());
  }
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Strict field access

/// Non-finite doubles are written as null and read back as NaN.
inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace detail {

template <class T>
T convert(const Json& j, const std::string& where) {
  if constexpr (std::is_same_v<T, bool>) {
    if (!j.is_boolean()) throw ValidationError(where + ": expected a boolean");
    return j.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw ValidationError(where + ": expected a string");
    return j.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (j.is_null()) return std::numeric_limits<T>::quiet_NaN();
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    return j.get<T>();
  } else if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (!j.is_number_unsigned() && j.get<std::int64_t>() < 0)
        throw ValidationError(where + ": expected a non-negative integer");
      return static_cast<T>(j.get<std::uint64_t>());
    } else {
      return static_cast<T>(j.get<std::int64_t>());
    }
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
      out.push_back(convert<double>(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
  } else {
    static_assert(sizeof(T) == 0, "unsupported field type");
  }
}

}  // namespace detail

/// Reads an object's fields by name and rejects any key never asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ValidationError(where_ + ": expected an object");
  }

  [[nodiscard]] bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  [[nodiscard]] const Json& at(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ValidationError(where_ + ": missing key '" + key + "'");
    return j_.at(key);
  }

  template <class T>
  [[nodiscard]] T get(const std::string& key, T fallback) {
    return has(key) ? detail::convert<T>(j_.at(key), path(key)) : fallback;
  }

  template <class T>
  [[nodiscard]] T require(const std::string& key) {
    return detail::convert<T>(at(key), path(key));
  }

  [[nodiscard]] std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError(where_ + ": unknown key '" + key + "'");
  }

 private:
  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline void check_schema(ObjectReader& r) {
  const int v = r.require<int>("schema_version");
  if (v != kSchemaVersion)
    throw ValidationError(r.path("schema_version") + ": unsupported version " + std::to_string(v));
}

// ---------------------------------------------------------------------------
// Complex numbers and matrices

inline Json complex_to_json(Complex z) { return Json::array({number(z.real()), number(z.imag())}); }

inline Complex complex_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2) throw ValidationError(where + ": expected [re, im]");
  return {detail::convert<double>(j[0], where), detail::convert<double>(j[1], where)};
}

inline Json matrix_entries(const CMatrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMatrix matrix_from_entries(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw ValidationError(where + ": expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw DimensionError(where + ": ragged rows");
    for (Eigen::Index k = 0; k < cols; ++k)
      m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)],
                                  where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  if (!all_finite(m)) throw ValidationError(where + ": non-finite entry");
  return m;
}

/// {"schema_version", "description"?, "rows", "cols", "entries"}.
inline Json matrix_to_json(const CMatrix& m, const std::string& description = {}) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  if (!description.empty()) j["description"] = description;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["entries"] = matrix_entries(m);
  return j;
}

inline CMatrix matrix_from_json(const Json& j, const std::string& where = "matrix") {
  ObjectReader r(j, where);
  check_schema(r);
  (void)r.get<std::string>("description", {});
  const auto rows = r.require<std::size_t>("rows");
  const auto cols = r.require<std::size_t>("cols");
  CMatrix m = matrix_from_entries(r.at("entries"), r.path("entries"));
  r.finish();
  if (static_cast<std::size_t>(m.rows()) != rows || static_cast<std::size_t>(m.cols()) != cols)
    throw DimensionError(where + ": rows/cols disagree with the entries");
  return m;
}

inline CMatrix load_matrix(const std::filesystem::path& path) {
  return matrix_from_json(parse_json(read_file(path), path.string()), path.string());
}

inline CVector vector_from_json(const Json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ValidationError(where + ": expected a non-empty array of [re, im]");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = complex_from_json(j[i], where + "[" + std::to_string(i) + "]");
  return v;
}

inline Json vector_to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

// ---------------------------------------------------------------------------
// Meshes

inline Json mesh_to_json(const MeshParams& p) {
  Json units = Json::array();
  for (const auto& u : p.units)
    units.push_back({{"pair", {u.mode + 1, u.mode + 2}}, {"theta", u.theta}, {"phi", u.phi}});
  return {{"modes", p.mode_count}, {"units", units}, {"output_phases", p.output_phases}};
}

inline MeshParams mesh_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  MeshParams p;
  p.mode_count = r.require<std::size_t>("modes");
  const Json& units = r.at("units");
  if (!units.is_array()) throw ValidationError(r.path("units") + ": expected an array");
  for (std::size_t i = 0; i < units.size(); ++i) {
    ObjectReader u(units[i], r.path("units") + "[" + std::to_string(i) + "]");
    const Json& pair = u.at("pair");
    if (!pair.is_array() || pair.size() != 2) throw ValidationError(u.path("pair") + ": expected [i, i+1]");
    const auto a = detail::convert<std::size_t>(pair[0], u.path("pair"));
    const auto b = detail::convert<std::size_t>(pair[1], u.path("pair"));
    if (a < 1 || b != a + 1) throw ValidationError(u.path("pair") + ": modes must be adjacent and 1-based");
    p.units.push_back({a - 1, u.require<double>("theta"), u.require<double>("phi")});
    u.finish();
  }
  p.output_phases = r.require<std::vector<double>>("output_phases");
  r.finish();
  p.validate();
  return p;
}

inline Json realization_to_json(const SvdRealization& r) {
  return {{"schema_version", kSchemaVersion},
          {"norm", r.norm},
          {"singular_factors", r.singular_factors},
          {"left_mesh", mesh_to_json(r.left_mesh)},
          {"right_mesh", mesh_to_json(r.right_mesh)}};
}

// ---------------------------------------------------------------------------
// CSV

/// Shortest text that parses back to the same double; "nan"/"inf" otherwise.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    Row& operator<<(const std::string& s) {
      cells_.push_back(s);
      return *this;
    }
    Row& operator<<(const char* s) { return *this << std::string(s); }
    Row& operator<<(double v) { return *this << format_number(v); }
    template <class T>
      requires std::is_integral_v<T>
    Row& operator<<(T v) {
      return *this << std::to_string(v);
    }

   private:
    friend class CsvTable;
    std::vector<std::string> cells_;
  };

  void add(const Row& row) {
    if (row.cells_.size() != header_.size())
      throw DimensionError("CsvTable: row has " + std::to_string(row.cells_.size()) + " cells, header has " +
                           std::to_string(header_.size()));
    rows_.push_back(row.cells_);
  }

  [[nodiscard]] std::size_t size() const { return rows_.size(); }

  /// RFC 4180: CRLF line ends, fields quoted when they hold a comma, quote
  /// or line break, quotes doubled.
  [[nodiscard]] std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += escape(cells[i]);
      }
      out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  static std::string escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Minimal RFC-4180 reader (used to check emitted files).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else {
      cell += c;
      any = true;
    }
  }
  if (quoted) throw ValidationError("parse_csv: unterminated quoted field");
  if (any || !cell.empty() || !row.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Optimizer records

inline Json evaluation_to_json(const Evaluation& e) {
  return {{"cost", number(e.cost)},       {"l2", number(e.l2)}, {"phase_l2", number(e.phase_l2)},
          {"success", number(e.success)}, {"f1", number(e.f1)}, {"f2", number(e.f2)}};
}

inline Evaluation evaluation_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  Evaluation e;
  e.cost = r.require<double>("cost");
  e.l2 = r.require<double>("l2");
  e.phase_l2 = r.require<double>("phase_l2");
  e.success = r.require<double>("success");
  e.f1 = r.require<double>("f1");
  e.f2 = r.require<double>("f2");
  r.finish();
  return e;
}

/// Wall-clock time is left out so results stay byte-identical across runs.
inline Json generation_to_json(const GenerationRecord& g) {
  return {{"generation", g.generation},
          {"best_cost", number(g.best_cost)},
          {"mean_cost", number(g.mean_cost)},
          {"evaluations", g.evaluations},
          {"nonfinite", g.nonfinite},
          {"best", evaluation_to_json(g.best_metrics)},
          {"best_params", g.best_params}};
}

inline GenerationRecord generation_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  GenerationRecord g;
  g.generation = r.require<std::size_t>("generation");
  g.best_cost = r.require<double>("best_cost");
  g.mean_cost = r.require<double>("mean_cost");
  g.evaluations = r.require<std::size_t>("evaluations");
  g.nonfinite = r.require<std::size_t>("nonfinite");
  g.best_metrics = evaluation_from_json(r.at("best"), r.path("best"));
  g.best_params = r.require<std::vector<double>>("best_params");
  r.finish();
  return g;
}

inline Json training_to_json(const TrainingRecord& t) {
  Json hist = Json::array();
  for (const auto& g : t.history) hist.push_back(generation_to_json(g));
  return {{"evaluations", t.evaluations},
          {"best", evaluation_to_json(t.best)},
          {"best_params", t.best_params},
          {"history", hist}};
}

inline TrainingRecord training_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  TrainingRecord t;
  t.evaluations = r.require<std::size_t>("evaluations");
  t.best = evaluation_from_json(r.at("best"), r.path("best"));
  t.best_params = r.require<std::vector<double>>("best_params");
  const Json& hist = r.at("history");
  if (!hist.is_array()) throw ValidationError(r.path("history") + ": expected an array");
  for (std::size_t i = 0; i < hist.size(); ++i)
    t.history.push_back(generation_from_json(hist[i], r.path("history") + "[" + std::to_string(i) + "]"));
  r.finish();
  return t;
}

/// generation, best_cost, mean_cost, l2, success, f1, f2 (best-so-far metrics).
inline CsvTable history_csv(const TrainingRecord& t) {
  CsvTable csv({"generation", "evaluations", "best_cost", "mean_cost", "l2", "success", "f1", "f2"});
  for (const auto& g : t.history) {
    CsvTable::Row row;
    row << g.generation << g.evaluations << g.best_cost << g.mean_cost << g.best_metrics.l2
        << g.best_metrics.success << g.best_metrics.f1 << g.best_metrics.f2;
    csv.add(row);
  }
  return csv;
}

inline Json round_to_json(const RoundRecord& r) {
  return {{"round", r.round},
          {"ga_seed", r.ga_seed},
          {"generations", r.generations},
          {"evaluations", r.evaluations},
          {"ga_best", evaluation_to_json(r.ga_best)},
          {"polished", evaluation_to_json(r.polished)}};
}

inline RoundRecord round_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  RoundRecord out;
  out.round = r.require<std::size_t>("round");
  out.ga_seed = r.require<std::uint64_t>("ga_seed");
  out.generations = r.require<std::size_t>("generations");
  out.evaluations = r.require<std::size_t>("evaluations");
  out.ga_best = evaluation_from_json(r.at("ga_best"), r.path("ga_best"));
  out.polished = evaluation_from_json(r.at("polished"), r.path("polished"));
  r.finish();
  return out;
}

inline Json search_to_json(const SearchResult& s) {
  Json rounds = Json::array();
  for (const auto& r : s.rounds) rounds.push_back(round_to_json(r));
  return {{"evaluations", s.evaluations},
          {"best", evaluation_to_json(s.best)},
          {"best_params", s.best_params},
          {"rounds", rounds},
          {"training", training_to_json(s.history)}};
}

inline SearchResult search_from_json(const Json& j, const std::string& where) {
  ObjectReader r(j, where);
  SearchResult s;
  s.evaluations = r.require<std::size_t>("evaluations");
  s.best = evaluation_from_json(r.at("best"), r.path("best"));
  s.best_params = r.require<std::vector<double>>("best_params");
  const Json& rounds = r.at("rounds");
  if (!rounds.is_array()) throw ValidationError(r.path("rounds") + ": expected an array");
  for (std::size_t i = 0; i < rounds.size(); ++i)
    s.rounds.push_back(round_from_json(rounds[i], r.path("rounds") + "[" + std::to_string(i) + "]"));
  s.history = training_from_json(r.at("training"), r.path("training"));
  r.finish();
  if (s.best_params.empty() && !s.rounds.empty()) throw ValidationError(where + ": rounds without a best point");
  if (s.rounds.empty()) s.best.cost = std::numeric_limits<double>::infinity();
  return s;
}

// ---------------------------------------------------------------------------
// Optimizer settings

inline Json ga_config_to_json(const GaConfig& c) {
  return {{"population_size", c.population_size}, {"generations", c.generations},
          {"elite_count", c.elite_count},         {"tournament_size", c.tournament_size},
          {"crossover_rate", c.crossover_rate},   {"mutation_rate", c.mutation_rate},
          {"mutation_sigma", c.mutation_sigma},   {"init_scale", c.init_scale}};
}

/// Missing keys keep the values already in `c`. The seed is set elsewhere.
inline GaConfig ga_config_from_json(const Json& j, GaConfig c, const std::string& where) {
  ObjectReader r(j, where);
  c.population_size = r.get("population_size", c.population_size);
  c.generations = r.get("generations", c.generations);
  c.elite_count = r.get("elite_count", c.elite_count);
  c.tournament_size = r.get("tournament_size", c.tournament_size);
  c.crossover_rate = r.get("crossover_rate", c.crossover_rate);
  c.mutation_rate = r.get("mutation_rate", c.mutation_rate);
  c.mutation_sigma = r.get("mutation_sigma", c.mutation_sigma);
  c.init_scale = r.get("init_scale", c.init_scale);
  r.finish();
  c.validate();
  return c;
}

inline Json polish_config_to_json(const PolishConfig& c) {
  return {{"tolerance", c.tolerance},
          {"max_evaluations", c.max_evaluations},
          {"initial_step", c.initial_step},
          {"restart", c.restart}};
}

inline PolishConfig polish_config_from_json(const Json& j, PolishConfig c, const std::string& where) {
  ObjectReader r(j, where);
  c.tolerance = r.get("tolerance", c.tolerance);
  c.max_evaluations = r.get("max_evaluations", c.max_evaluations);
  c.initial_step = r.get("initial_step", c.initial_step);
  c.restart = r.get("restart", c.restart);
  r.finish();
  if (!(c.tolerance > 0.0)) throw ValidationError(where + ".tolerance: must be positive");
  if (!(c.initial_step > 0.0 && c.initial_step <= 1.0))
    throw ValidationError(where + ".initial_step: must lie in (0, 1]");
  if (c.max_evaluations == 0) throw ValidationError(where + ".max_evaluations: must be positive");
  return c;
}

inline Json search_config_to_json(const SearchConfig& c) {
  return {{"budget", c.max_evaluations},
          {"max_rounds", c.max_rounds},
          {"ga", ga_config_to_json(c.ga)},
          {"polish", polish_config_to_json(c.polish)}};
}

inline SearchConfig search_config_from_json(const Json& j, SearchConfig c, const std::string& where) {
  ObjectReader r(j, where);
  c.max_evaluations = r.get("budget", c.max_evaluations);
  c.max_rounds = r.get("max_rounds", c.max_rounds);
  if (r.has("ga")) c.ga = ga_config_from_json(r.at("ga"), c.ga, r.path("ga"));
  if (r.has("polish")) c.polish = polish_config_from_json(r.at("polish"), c.polish, r.path("polish"));
  r.finish();
  c.validate();
  return c;
}

}  // namespace photonic::io
