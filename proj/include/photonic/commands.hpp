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

// Experiment configs and the command implementations behind the CLI. Result
// files depend only on (config, seed); timing goes to metadata.json.

#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "photonic/chip_sim.hpp"
#include "photonic/fock.hpp"
#include "photonic/io.hpp"
#include "photonic/mesh.hpp"
#include "photonic/optimize.hpp"
#include "photonic/stochastic.hpp"

namespace photonic::cli {

using io::Json;
namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "0.1.0";

/// A result violated a property the code guarantees.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum ExitCode : int { kOk = 0, kInputError = 2, kIoError = 3, kInternalError = 4 };

// ---------------------------------------------------------------------------
// Config types

struct TrainCnotParams {
  std::string space = "scaled-orthogonal";  // or "real", "complex"
  double bound = 2.0;                       // entry bound, or largest scale for scaled-orthogonal
  double alpha = kCnotAlpha;
  SearchConfig search = cnot_default_search(0);
  std::string resume;  // checkpoint.json of an interrupted run
};

struct EvalCnotParams {
  std::string matrix;
  double alpha = kCnotAlpha;
};

struct StochasticSetting {
  double p = 0.5;
  double q1 = 0.3;
  double q2 = 0.8;
  int steps = 4;  // training steps k = 0..steps-1
  double alpha = kStochasticAlpha;
  int validation_k = 10;
  double tail_epsilon = stochastic::kDefaultTailEpsilon;
};

struct TrainStochasticParams {
  StochasticSetting setting;
  SearchConfig search = cnot_default_search(0);
  std::string resume;
};

struct EvalStochasticParams {
  StochasticSetting setting;
  std::string unitary;
};

struct EntropySweepParams {
  std::vector<double> p{0.2, 0.5, 0.8};
  std::vector<double> q1{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> q2{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  double tail_epsilon = stochastic::kDefaultTailEpsilon;
};

struct DecomposeParams {
  std::string matrix;
  int photon_count = 3;
};

struct TomographySpec {
  std::size_t qubit = 1;  // 1-based
  Vector2c target = Vector2c(1.0, 0.0);
};

struct SimulateParams {
  std::string matrix;
  std::size_t qubits = 2;
  std::size_t ancillas = 0;
  std::string bits;  // either bits or amplitudes
  CVector amplitudes;
  std::optional<TomographySpec> tomography;
};

using TaskParams = std::variant<TrainCnotParams, EvalCnotParams, TrainStochasticParams, EvalStochasticParams,
                                EntropySweepParams, DecomposeParams, SimulateParams>;

inline const std::vector<std::string>& task_names() {
  static const std::vector<std::string> names{"train-cnot",   "eval-cnot", "train-stochastic", "eval-stochastic",
                                              "entropy-sweep", "decompose", "simulate"};
  return names;
}

struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string output = "out";
  bool sampled = false;
  std::uint64_t shots = 100'000;
  TaskParams params;
  fs::path base_dir;  // relative input paths resolve here; not serialized

  [[nodiscard]] std::string task() const { return task_names()[params.index()]; }
  [[nodiscard]] fs::path resolve(const std::string& p) const {
    const fs::path path(p);
    return path.is_absolute() ? path : (base_dir / path).lexically_normal();
  }
};

// ---------------------------------------------------------------------------
// Config (de)serialization

namespace detail {

inline Json setting_to_json(const StochasticSetting& s) {
  return {{"p", s.p},
          {"q1", s.q1},
          {"q2", s.q2},
          {"steps", s.steps},
          {"alpha", s.alpha},
          {"validation_k", s.validation_k},
          {"tail_epsilon", s.tail_epsilon}};
}

inline void read_setting(io::ObjectReader& r, StochasticSetting& s) {
  s.p = r.get("p", s.p);
  s.q1 = r.get("q1", s.q1);
  s.q2 = r.get("q2", s.q2);
  s.steps = r.get("steps", s.steps);
  s.alpha = r.get("alpha", s.alpha);
  s.validation_k = r.get("validation_k", s.validation_k);
  s.tail_epsilon = r.get("tail_epsilon", s.tail_epsilon);
  stochastic::DualPoissonParams{s.p, s.q1, s.q2}.validate();
  if (s.steps < 1) throw ValidationError(r.path("steps") + ": must be at least 1");
  if (!(s.alpha >= 0.0)) throw ValidationError(r.path("alpha") + ": must be non-negative");
  if (s.validation_k < 0) throw ValidationError(r.path("validation_k") + ": must be non-negative");
  (void)stochastic::truncation_for(stochastic::DualPoissonParams{s.p, s.q1, s.q2}, s.tail_epsilon);
}

inline void check_probability_list(const std::vector<double>& v, const std::string& where, bool open) {
  if (v.empty()) throw ValidationError(where + ": empty grid");
  for (double x : v)
    if (!(open ? (x > 0.0 && x < 1.0) : (x >= 0.0 && x <= 1.0)))
      throw ValidationError(where + ": value " + io::format_number(x) + " out of range");
}

}  // namespace detail

inline Json params_to_json(const TaskParams& params) {
  return std::visit(
      [](const auto& p) -> Json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TrainCnotParams>) {
          Json j{{"space", p.space}, {"bound", p.bound}, {"alpha", p.alpha}};
          j["search"] = io::search_config_to_json(p.search);
          j["resume"] = p.resume;
          return j;
        } else if constexpr (std::is_same_v<T, EvalCnotParams>) {
          return {{"matrix", p.matrix}, {"alpha", p.alpha}};
        } else if constexpr (std::is_same_v<T, TrainStochasticParams>) {
          Json j = detail::setting_to_json(p.setting);
          j["search"] = io::search_config_to_json(p.search);
          j["resume"] = p.resume;
          return j;
        } else if constexpr (std::is_same_v<T, EvalStochasticParams>) {
          Json j = detail::setting_to_json(p.setting);
          j["unitary"] = p.unitary;
          return j;
        } else if constexpr (std::is_same_v<T, EntropySweepParams>) {
          return {{"p", p.p}, {"q1", p.q1}, {"q2", p.q2}, {"tail_epsilon", p.tail_epsilon}};
        } else if constexpr (std::is_same_v<T, DecomposeParams>) {
          return {{"matrix", p.matrix}, {"photon_count", p.photon_count}};
        } else {
          Json j{{"matrix", p.matrix}, {"qubits", p.qubits}, {"ancillas", p.ancillas}};
          if (!p.bits.empty())
            j["input"] = {{"bits", p.bits}};
          else
            j["input"] = {{"amplitudes", io::vector_to_json(p.amplitudes)}};
          if (p.tomography)
            j["tomography"] = {{"qubit", p.tomography->qubit},
                               {"target", io::vector_to_json(p.tomography->target)}};
          return j;
        }
      },
      params);
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["schema_version"] = io::kSchemaVersion;
  j["task"] = c.task();
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["mode"] = c.sampled ? "sampled" : "exact";
  j["shots"] = c.shots;
  j["params"] = params_to_json(c.params);
  return j;
}

inline TaskParams params_from_json(const std::string& task, const Json& j) {
  io::ObjectReader r(j, "params");
  TaskParams out;
  if (task == "train-cnot") {
    TrainCnotParams p;
    p.space = r.get("space", p.space);
    if (p.space != "scaled-orthogonal" && p.space != "real" && p.space != "complex")
      throw ValidationError("params.space: expected scaled-orthogonal, real or complex");
    p.bound = r.get("bound", p.bound);
    if (!(p.bound > 0.0) || (p.space == "scaled-orthogonal" && p.bound < 1.0))
      throw ValidationError("params.bound: out of range");
    p.alpha = r.get("alpha", p.alpha);
    if (!(p.alpha >= 0.0)) throw ValidationError("params.alpha: must be non-negative");
    if (r.has("search")) p.search = io::search_config_from_json(r.at("search"), p.search, "params.search");
    p.resume = r.get("resume", p.resume);
    out = p;
  } else if (task == "eval-cnot") {
    EvalCnotParams p;
    p.matrix = r.require<std::string>("matrix");
    p.alpha = r.get("alpha", p.alpha);
    out = p;
  } else if (task == "train-stochastic") {
    TrainStochasticParams p;
    detail::read_setting(r, p.setting);
    if (r.has("search")) p.search = io::search_config_from_json(r.at("search"), p.search, "params.search");
    p.resume = r.get("resume", p.resume);
    out = p;
  } else if (task == "eval-stochastic") {
    EvalStochasticParams p;
    detail::read_setting(r, p.setting);
    p.unitary = r.require<std::string>("unitary");
    out = p;
  } else if (task == "entropy-sweep") {
    EntropySweepParams p;
    p.p = r.get("p", p.p);
    p.q1 = r.get("q1", p.q1);
    p.q2 = r.get("q2", p.q2);
    p.tail_epsilon = r.get("tail_epsilon", p.tail_epsilon);
    detail::check_probability_list(p.p, "params.p", true);
    detail::check_probability_list(p.q1, "params.q1", false);
    detail::check_probability_list(p.q2, "params.q2", false);
    if (!(p.tail_epsilon > 0.0 && p.tail_epsilon <= 1e-3))
      throw ValidationError("params.tail_epsilon: must lie in (0, 1e-3]");
    out = p;
  } else if (task == "decompose") {
    DecomposeParams p;
    p.matrix = r.require<std::string>("matrix");
    p.photon_count = r.get("photon_count", p.photon_count);
    if (p.photon_count < 1 || p.photon_count > kMaxPhotons)
      throw ValidationError("params.photon_count: must lie in [1, " + std::to_string(kMaxPhotons) + "]");
    out = p;
  } else if (task == "simulate") {
    SimulateParams p;
    p.matrix = r.require<std::string>("matrix");
    p.qubits = r.get("qubits", p.qubits);
    p.ancillas = r.get("ancillas", p.ancillas);
    if (p.qubits < 1) throw ValidationError("params.qubits: must be at least 1");
    io::ObjectReader in(r.at("input"), "params.input");
    const bool has_bits = in.has("bits");
    const bool has_amps = in.has("amplitudes");
    if (has_bits == has_amps) throw ValidationError("params.input: give exactly one of bits or amplitudes");
    if (has_bits) {
      p.bits = in.require<std::string>("bits");
      if (p.bits.size() != p.qubits) throw ValidationError("params.input.bits: one bit per qubit expected");
      for (char c : p.bits)
        if (c != '0' && c != '1') throw ValidationError("params.input.bits: bits must be 0 or 1");
    } else {
      p.amplitudes = io::vector_from_json(in.at("amplitudes"), "params.input.amplitudes");
      if (static_cast<std::size_t>(p.amplitudes.size()) != (std::size_t{1} << p.qubits))
        throw ValidationError("params.input.amplitudes: expected 2^qubits entries");
    }
    in.finish();
    if (r.has("tomography")) {
      io::ObjectReader t(r.at("tomography"), "params.tomography");
      TomographySpec spec;
      spec.qubit = t.get("qubit", spec.qubit);
      if (spec.qubit < 1 || spec.qubit > p.qubits) throw ValidationError("params.tomography.qubit: out of range");
      const CVector target = io::vector_from_json(t.at("target"), "params.tomography.target");
      if (target.size() != 2 || target.norm() == 0.0)
        throw ValidationError("params.tomography.target: expected a non-zero qubit state");
      spec.target = target;
      t.finish();
      p.tomography = spec;
    }
    out = p;
  } else {
    throw ValidationError("task: unknown task '" + task + "'");
  }
  r.finish();
  return out;
}

inline ExperimentConfig config_from_json(const Json& j, fs::path base_dir = {}) {
  io::ObjectReader r(j, "config");
  io::check_schema(r);
  ExperimentConfig c;
  const auto task = r.require<std::string>("task");
  c.seed = r.get("seed", c.seed);
  c.output = r.get("output", c.output);
  const auto mode = r.get<std::string>("mode", "exact");
  if (mode != "exact" && mode != "sampled") throw ValidationError("config.mode: expected exact or sampled");
  c.sampled = mode == "sampled";
  c.shots = r.get("shots", c.shots);
  if (c.shots < 1) throw ValidationError("config.shots: must be at least 1");
  c.params = params_from_json(task, r.has("params") ? r.at("params") : Json::object());
  r.finish();
  c.base_dir = std::move(base_dir);
  return c;
}

// ---------------------------------------------------------------------------
// Running

struct Options {
  fs::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<std::uint64_t> shots;
};

struct RunContext {
  ExperimentConfig config;
  fs::path out_dir;
  std::size_t jobs = 1;
  std::ostream* log = &std::cerr;
  Json metadata = Json::object();

  void write(const std::string& name, const std::string& content) const { io::write_file(out_dir / name, content); }
  void write_json(const std::string& name, const Json& j) const { write(name, io::dump(j)); }
};

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

inline std::string bit_string(std::size_t index, std::size_t bits) {
  std::string s(bits, '0');
  for (std::size_t b = 0; b < bits; ++b)
    if ((index >> (bits - 1 - b)) & 1U) s[b] = '1';
  return s;
}

inline std::string occupation_string(const PhotonConfig& c) {
  std::string s;
  for (int n : c.occupations()) s += std::to_string(n);
  return s;
}

inline Json summary_header(const ExperimentConfig& c) {
  return {{"schema_version", io::kSchemaVersion}, {"task", c.task()}, {"seed", c.seed}};
}

/// Generation timing is non-deterministic, so it goes to metadata only.
inline Json generation_timing(const TrainingRecord& t) {
  Json out = Json::array();
  for (const auto& g : t.history) out.push_back(g.wall_seconds);
  return out;
}

inline void write_training(const RunContext& ctx, const SearchResult& s) {
  ctx.write("history.csv", io::history_csv(s.history).str());
  Json j = summary_header(ctx.config);
  j["search"] = io::search_to_json(s);
  ctx.write_json("history.json", j);
}

inline std::optional<SearchResult> load_checkpoint(const RunContext& ctx, const std::string& resume) {
  if (resume.empty()) return std::nullopt;
  const fs::path path = ctx.config.resolve(resume);
  const Json j = io::parse_json(io::read_file(path), path.string());
  io::ObjectReader r(j, "checkpoint");
  io::check_schema(r);
  const Json saved = r.at("config");
  SearchResult s = io::search_from_json(r.at("search"), "checkpoint.search");
  r.finish();
  // Everything that shapes the search must match. Output, resume and the
  // stopping limits may differ, so an interrupted run can be extended.
  Json a = config_to_json(ctx.config);
  Json b = saved;
  for (Json* x : {&a, &b}) {
    x->erase("output");
    Json& params = (*x)["params"];
    if (params.contains("resume")) params.erase("resume");
    if (params.contains("search")) {
      params["search"].erase("budget");
      params["search"].erase("max_rounds");
    }
  }
  if (a != b) throw ValidationError("checkpoint: configuration does not match " + path.string());
  return s;
}

inline std::function<void(const SearchResult&)> checkpoint_writer(const RunContext& ctx) {
  return [&ctx](const SearchResult& s) {
    Json j;
    j["schema_version"] = io::kSchemaVersion;
    j["config"] = config_to_json(ctx.config);
    j["search"] = io::search_to_json(s);
    ctx.write_json("checkpoint.json", j);
    *ctx.log << "round " << s.rounds.size() << ": evaluations " << s.evaluations << ", best cost "
             << io::format_number(s.best.cost) << "\n";
  };
}

// -- CNOT ---------------------------------------------------------------------

inline SearchSpace cnot_space(const TrainCnotParams& p) {
  if (p.space == "real") return SearchSpace::real_matrix(5, p.bound);
  if (p.space == "complex") return SearchSpace::complex_matrix(5, p.bound);
  return SearchSpace::scaled_orthogonal(5, p.bound);
}

/// Exact truth table and, in sampled mode, a shot-based one.
inline void write_cnot_report(const RunContext& ctx, const CMatrix& w, double alpha, Json summary) {
  const auto layout = DualRailLayout::adjacent(2, 1);
  const ModeTransform mt(w);
  const auto e = cnot_cost(mt, layout, alpha);
  const auto logical = extract_logical(mt, layout);
  summary["l2"] = io::number(e.l2);
  summary["phase_l2"] = io::number(e.phase_l2);
  summary["success"] = io::number(e.success);
  summary["cost"] = io::number(e.cost);
  summary["alpha"] = alpha;
  summary["norm"] = spectral_norm(mt);

  io::CsvTable table({"input", "output", "probability"});
  Json correct = Json::object();
  const std::size_t expected[] = {0, 1, 3, 2};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto run = run_exact(mt, prepare_logical_input(bit_string(i, 2), layout), layout);
    for (std::size_t o = 0; o < 4; ++o) {
      io::CsvTable::Row row;
      row << bit_string(i, 2) << bit_string(o, 2) << run.outcome_probs[o];
      table.add(row);
    }
    correct[bit_string(i, 2)] = io::number(run.outcome_probs[expected[i]]);
  }
  summary["truth_table_correct_probability"] = correct;
  ctx.write("truth_table.csv", table.str());
  ctx.write_json("ubar.json", io::matrix_to_json(logical.matrix, "post-selected logical operator"));

  if (ctx.config.sampled) {
    io::CsvTable sampled({"input", "output", "count", "valid", "lost", "shots"});
    for (std::size_t i = 0; i < 4; ++i) {
      const auto rec = sample_counts(mt, prepare_logical_input(bit_string(i, 2), layout), layout,
                                     ctx.config.shots, hash_seed({ctx.config.seed, 0x7474ULL, i}));
      const auto counts = logical_counts(rec, layout);
      for (std::size_t o = 0; o < 4; ++o) {
        io::CsvTable::Row row;
        row << bit_string(i, 2) << bit_string(o, 2) << counts[o] << rec.valid_count << rec.lost << ctx.config.shots;
        sampled.add(row);
      }
    }
    ctx.write("truth_table_sampled.csv", sampled.str());
  }
  ctx.write_json("summary.json", summary);
}

inline void train_cnot(RunContext& ctx, const TrainCnotParams& p) {
  const auto layout = DualRailLayout::adjacent(2, 1);
  const SearchSpace space = cnot_space(p);
  const double alpha = p.alpha;
  const CostFunction cost = [&space, &layout, alpha](const Params& x, std::uint64_t) {
    return cnot_cost(ModeTransform(space.decode_matrix(x)), layout, alpha);
  };
  SearchConfig sc = p.search;
  sc.ga.seed = ctx.config.seed;
  const auto resume = load_checkpoint(ctx, p.resume);
  const SearchResult s = ga_polish_search(cost, space, sc, ctx.jobs, resume, checkpoint_writer(ctx));
  write_training(ctx, s);
  const CMatrix w = space.decode_matrix(s.best_params);
  ctx.write_json("best_w.json", io::matrix_to_json(w, "best transform found"));
  Json summary = summary_header(ctx.config);
  summary["evaluations"] = s.evaluations;
  summary["rounds"] = s.rounds.size();
  summary["space"] = p.space;
  write_cnot_report(ctx, w, alpha, summary);
  ctx.metadata["generation_wall_seconds"] = generation_timing(s.history);
}

inline void eval_cnot(RunContext& ctx, const EvalCnotParams& p) {
  const CMatrix w = io::load_matrix(ctx.config.resolve(p.matrix));
  if (w.rows() != 5 || w.cols() != 5) throw DimensionError("eval-cnot: expected a 5x5 matrix");
  write_cnot_report(ctx, w, p.alpha, summary_header(ctx.config));
}

// -- stochastic -----------------------------------------------------------------

inline stochastic::DualPoissonParams dual_poisson(const StochasticSetting& s) { return {s.p, s.q1, s.q2}; }

inline StochasticMode stochastic_mode(const ExperimentConfig& c) { return {c.sampled, c.shots}; }

/// Per-k fidelities for k = 0..max(steps-1, validation_k), KL of the realized
/// transition model and the relation residual at the validation step.
inline void write_stochastic_report(const RunContext& ctx, const CMatrix& u, const StochasticSetting& s,
                                    Json summary) {
  const auto dp = dual_poisson(s);
  const int last = std::max(s.steps - 1, s.validation_k);
  auto table_for = [&](const StochasticMode& mode, std::uint64_t seed) {
    const auto detail = stochastic_cost_detail(u, dp, last + 1, s.alpha, mode, seed);
    io::CsvTable t({"k", "role", "fidelity_reset_free", "fidelity_reset", "f1", "p_survive", "p_survive_target"});
    for (const auto& st : detail.steps) {
      const char* role = st.k < s.steps ? "train" : (st.k == s.validation_k ? "validation" : "other");
      io::CsvTable::Row row;
      row << st.k << role << st.fidelity_reset_free << st.fidelity_reset
          << 0.5 * (st.fidelity_reset_free + st.fidelity_reset) << st.p_survive << st.p_survive_target;
      t.add(row);
    }
    return std::pair{t, detail};
  };
  const auto [exact_table, exact] = table_for({}, 0);
  ctx.write("fidelities.csv", exact_table.str());

  double f1_train = 0.0;
  double f1_train_min = 1.0;
  for (int k = 0; k < s.steps; ++k) {
    const auto& st = exact.steps[static_cast<std::size_t>(k)];
    f1_train += (st.fidelity_reset_free + st.fidelity_reset) / (2.0 * s.steps);
    f1_train_min = std::min({f1_train_min, st.fidelity_reset_free, st.fidelity_reset});
  }
  const auto& val = exact.steps[static_cast<std::size_t>(s.validation_k)];
  const auto train_eval = stochastic_cost(u, dp, s.steps, s.alpha, {});
  summary["cost"] = io::number(train_eval.cost);
  summary["f1_train"] = io::number(f1_train);
  summary["f1_train_min_branch"] = io::number(f1_train_min);
  summary["f2_train"] = io::number(train_eval.f2);
  summary["f1_validation"] = io::number(0.5 * (val.fidelity_reset_free + val.fidelity_reset));
  summary["validation_k"] = s.validation_k;

  const auto st = stochastic::stationary_distribution(dp, s.tail_epsilon);
  const auto kl = stochastic::kl_divergence(stochastic::transition_model(dp, st.k_max),
                                            realized_transition_model(u, dp, st.k_max), st.pi);
  summary["kl_stationary_weighted"] = io::number(kl.stationary_weighted);
  summary["kl_uniform_weighted"] = io::number(kl.uniform_weighted);
  summary["kl_states"] = st.k_max + 1;
  const auto res = stochastic::target_relation_residual(u, dp, s.validation_k);
  summary["relation_residual_validation"] = {{"strict", io::number(res.strict)},
                                             {"phase_relaxed", io::number(res.phase_relaxed)}};
  if (ctx.config.sampled) {
    const auto [sampled_table, sampled] = table_for(stochastic_mode(ctx.config), hash_seed({ctx.config.seed, 0x7370ULL}));
    ctx.write("fidelities_sampled.csv", sampled_table.str());
    summary["sampled_shots"] = ctx.config.shots;
  }
  ctx.write_json("summary.json", summary);
}

inline void train_stochastic(RunContext& ctx, const TrainStochasticParams& p) {
  const auto dp = dual_poisson(p.setting);
  const SearchSpace space = stochastic_default_space();
  const StochasticMode mode = stochastic_mode(ctx.config);
  const int steps = p.setting.steps;
  const double alpha = p.setting.alpha;
  const CostFunction cost = [&space, dp, steps, alpha, mode](const Params& x, std::uint64_t seed) {
    return stochastic_cost(space.decode_matrix(x), dp, steps, alpha, mode, seed);
  };
  SearchConfig sc = p.search;
  sc.ga.seed = ctx.config.seed;
  const auto resume = load_checkpoint(ctx, p.resume);
  const SearchResult s = ga_polish_search(cost, space, sc, ctx.jobs, resume, checkpoint_writer(ctx));
  write_training(ctx, s);
  const CMatrix u = space.decode_matrix(s.best_params);
  ctx.write_json("unitary.json", io::matrix_to_json(u, "trained memory-ancilla coupling, index 2*memory + ancilla"));
  Json mesh = io::mesh_to_json(space.decode_mesh(s.best_params));
  mesh["schema_version"] = io::kSchemaVersion;
  ctx.write_json("mesh.json", mesh);
  Json summary = summary_header(ctx.config);
  summary["evaluations"] = s.evaluations;
  summary["rounds"] = s.rounds.size();
  summary["training_cost"] = io::number(s.best.cost);
  write_stochastic_report(ctx, u, p.setting, summary);
  ctx.metadata["generation_wall_seconds"] = generation_timing(s.history);
}

inline void eval_stochastic(RunContext& ctx, const EvalStochasticParams& p) {
  const CMatrix u = io::load_matrix(ctx.config.resolve(p.unitary));
  if (u.rows() != 4 || u.cols() != 4) throw DimensionError("eval-stochastic: expected a 4x4 unitary");
  write_stochastic_report(ctx, u, p.setting, summary_header(ctx.config));
}

// -- entropy ------------------------------------------------------------------------

inline void entropy_sweep(RunContext& ctx, const EntropySweepParams& p) {
  Json files = Json::array();
  for (std::size_t ip = 0; ip < p.p.size(); ++ip) {
    io::CsvTable t({"p", "q1", "q2", "Cc", "Cq", "Dq_truncated"});
    for (double q1 : p.q1)
      for (double q2 : p.q2) {
        const stochastic::DualPoissonParams dp{p.p[ip], q1, q2};
        const double cc = stochastic::classical_entropy(dp, p.tail_epsilon);
        const double cq = stochastic::quantum_entropy(dp, p.tail_epsilon);
        if (!(cq <= cc + 1e-12))
          throw InvariantError("entropy-sweep: Cq > Cc at p=" + io::format_number(dp.p) +
                               " q1=" + io::format_number(q1) + " q2=" + io::format_number(q2) +
                               " (Cq=" + io::format_number(cq) + ", Cc=" + io::format_number(cc) + ")");
        io::CsvTable::Row row;
        row << dp.p << q1 << q2 << cc << cq << stochastic::state_count(dp, p.tail_epsilon).count;
        t.add(row);
      }
    const std::string name = "entropy_p" + std::to_string(ip + 1) + ".csv";
    ctx.write(name, t.str());
    files.push_back({{"file", name}, {"p", p.p[ip]}, {"rows", t.size()}});
  }
  Json summary = summary_header(ctx.config);
  summary["files"] = files;
  ctx.write_json("summary.json", summary);
}

// -- decompose ------------------------------------------------------------------------

inline void decompose(RunContext& ctx, const DecomposeParams& p) {
  const CMatrix w = io::load_matrix(ctx.config.resolve(p.matrix));
  if (w.rows() != w.cols()) throw DimensionError("decompose: matrix must be square");
  const ModeTransform mt(w);
  const auto r = realize(mt);
  ctx.write_json("chip.json", io::realization_to_json(r));
  const CMatrix back = reconstruct(r).matrix() * r.norm;
  Json report = summary_header(ctx.config);
  report["modes"] = w.rows();
  report["norm"] = r.norm;
  report["singular_factors"] = r.singular_factors;
  report["reconstruction_error"] = (back - w).norm() / std::max(r.norm, 1e-300);
  report["photon_count"] = p.photon_count;
  report["success_bound"] = success_bound(mt, p.photon_count);
  report["left_units"] = r.left_mesh.units.size();
  report["right_units"] = r.right_mesh.units.size();
  ctx.write_json("report.json", report);
}

// -- simulate ---------------------------------------------------------------------------

inline void simulate(RunContext& ctx, const SimulateParams& p) {
  const CMatrix w = io::load_matrix(ctx.config.resolve(p.matrix));
  if (w.rows() != w.cols()) throw DimensionError("simulate: matrix must be square");
  const auto modes = static_cast<std::size_t>(w.rows());
  if (2 * p.qubits + p.ancillas > modes) throw DimensionError("simulate: layout needs more modes than the matrix has");
  const auto layout = DualRailLayout::adjacent(p.qubits, p.ancillas, modes);
  const ModeTransform mt(w);
  const FockAmplitudeMap input = p.bits.empty() ? prepare_logical_input(p.amplitudes, layout)
                                                : prepare_logical_input(p.bits, layout);
  const auto run = run_exact(mt, input, layout);
  Json summary = summary_header(ctx.config);
  summary["success_probability"] = run.success_probability;
  Json logical = Json::object();
  std::size_t top = 0;
  for (std::size_t i = 0; i < run.outcome_probs.size(); ++i) {
    logical[bit_string(i, p.qubits)] = run.outcome_probs[i];
    if (run.outcome_probs[i] > run.outcome_probs[top]) top = i;
  }
  summary["logical_probabilities"] = logical;
  summary["top_valid_outcome"] = bit_string(top, p.qubits);

  if (!ctx.config.sampled) {
    io::CsvTable t({"config", "valid", "logical", "probability"});
    double kept = 0.0;
    for (const auto& [cfg, amp] : run.output) {
      const auto idx = layout.logical_index(cfg);
      io::CsvTable::Row row;
      row << occupation_string(cfg) << (idx ? 1 : 0) << (idx ? bit_string(*idx, p.qubits) : std::string())
          << std::norm(amp);
      t.add(row);
      kept += std::norm(amp);
    }
    io::CsvTable::Row lost;
    lost << "lost" << 0 << "" << std::max(0.0, 1.0 - kept);
    t.add(lost);
    ctx.write("outcomes.csv", t.str());
  } else {
    const auto rec = sample_counts(mt, input, layout, ctx.config.shots, hash_seed({ctx.config.seed, 0x5349ULL}));
    io::CsvTable t({"config", "valid", "logical", "count"});
    for (const auto& [cfg, n] : rec.counts) {
      const auto idx = layout.logical_index(cfg);
      io::CsvTable::Row row;
      row << occupation_string(cfg) << (idx ? 1 : 0) << (idx ? bit_string(*idx, p.qubits) : std::string()) << n;
      t.add(row);
    }
    io::CsvTable::Row lost;
    lost << "lost" << 0 << "" << rec.lost;
    t.add(lost);
    ctx.write("outcomes.csv", t.str());
    summary["shots"] = rec.shots_requested;
    summary["valid_count"] = rec.valid_count;
    summary["lost"] = rec.lost;
    summary["valid_fraction"] = static_cast<double>(rec.valid_count) / static_cast<double>(rec.shots_requested);
  }

  if (p.tomography) {
    const std::size_t q = p.tomography->qubit - 1;
    const std::size_t shift = p.qubits - 1 - q;
    TomographyCounts counts;
    double ex = 0.0, ey = 0.0, ez = 0.0;
    for (Basis b : {Basis::X, Basis::Y, Basis::Z}) {
      double e = 0.0;
      if (!ctx.config.sampled) {
        const auto probs = measure_in_basis(mt, input, layout, q, b);
        for (std::size_t i = 0; i < probs.size(); ++i) e += ((i >> shift) & 1U) ? -probs[i] : probs[i];
      } else {
        const auto rec = sample_in_basis(mt, input, layout, q, b, ctx.config.shots,
                                         hash_seed({ctx.config.seed, 0x746fULL, static_cast<std::uint64_t>(b)}));
        const auto n = logical_counts(rec, layout);
        std::uint64_t n0 = 0, n1 = 0;
        for (std::size_t i = 0; i < n.size(); ++i) (((i >> shift) & 1U) ? n1 : n0) += n[i];
        if (b == Basis::X) { counts.x0 = n0; counts.x1 = n1; }
        if (b == Basis::Y) { counts.y0 = n0; counts.y1 = n1; }
        if (b == Basis::Z) { counts.z0 = n0; counts.z1 = n1; }
      }
      if (b == Basis::X) ex = e;
      if (b == Basis::Y) ey = e;
      if (b == Basis::Z) ez = e;
    }
    const DensityMatrix2 rho = ctx.config.sampled ? tomography(counts) : tomography_from_expectations(ex, ey, ez);
    Json tj;
    tj["schema_version"] = io::kSchemaVersion;
    tj["qubit"] = p.tomography->qubit;
    tj["density_matrix"] = io::matrix_entries(rho.matrix());
    tj["target"] = io::vector_to_json(p.tomography->target);
    tj["fidelity"] = fidelity(rho, p.tomography->target);
    if (ctx.config.sampled)
      tj["counts"] = {{"x", {counts.x0, counts.x1}}, {"y", {counts.y0, counts.y1}}, {"z", {counts.z0, counts.z1}}};
    ctx.write_json("tomography.json", tj);
  }
  ctx.write_json("summary.json", summary);
}

}  // namespace detail

/// Loads the config, applies flag overrides, runs the task, writes results
/// plus metadata.json. Returns the process exit code.
inline int run(const Options& opt, std::ostream& log = std::cerr) {
  const auto started = std::chrono::steady_clock::now();
  RunContext ctx;
  ctx.log = &log;
  try {
    const std::string text = io::read_file(opt.config);
    ctx.config = config_from_json(io::parse_json(text, opt.config.string()),
                                  fs::absolute(opt.config).parent_path());
    if (opt.seed) ctx.config.seed = *opt.seed;
    if (opt.out) ctx.config.output = *opt.out;
    if (opt.mode) {
      if (*opt.mode != "exact" && *opt.mode != "sampled") throw ValidationError("--mode: expected exact or sampled");
      ctx.config.sampled = *opt.mode == "sampled";
    }
    if (opt.shots) {
      if (*opt.shots < 1) throw ValidationError("--shots: must be at least 1");
      ctx.config.shots = *opt.shots;
    }
    ctx.jobs = opt.jobs.value_or(std::max(1U, std::thread::hardware_concurrency()));
    if (ctx.jobs < 1) throw ValidationError("--jobs: must be at least 1");
    // --out is taken relative to the working directory, a config's output
    // relative to the config file.
    ctx.out_dir = opt.out ? fs::path(*opt.out) : ctx.config.resolve(ctx.config.output);
    ctx.metadata["started_utc"] = detail::utc_now();

    ctx.write_json("config.json", config_to_json(ctx.config));
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, TrainCnotParams>) detail::train_cnot(ctx, p);
          if constexpr (std::is_same_v<T, EvalCnotParams>) detail::eval_cnot(ctx, p);
          if constexpr (std::is_same_v<T, TrainStochasticParams>) detail::train_stochastic(ctx, p);
          if constexpr (std::is_same_v<T, EvalStochasticParams>) detail::eval_stochastic(ctx, p);
          if constexpr (std::is_same_v<T, EntropySweepParams>) detail::entropy_sweep(ctx, p);
          if constexpr (std::is_same_v<T, DecomposeParams>) detail::decompose(ctx, p);
          if constexpr (std::is_same_v<T, SimulateParams>) detail::simulate(ctx, p);
        },
        ctx.config.params);

    Json meta;
    meta["schema_version"] = io::kSchemaVersion;
    meta["tool_version"] = kToolVersion;
    meta["task"] = ctx.config.task();
    meta["config_path"] = fs::absolute(opt.config).string();
    meta["jobs"] = ctx.jobs;
    meta["started_utc"] = ctx.metadata["started_utc"];
    meta["finished_utc"] = detail::utc_now();
    meta["wall_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    for (const auto& [k, v] : ctx.metadata.items())
      if (!meta.contains(k)) meta[k] = v;
    ctx.write_json("metadata.json", meta);
    log << ctx.config.task() << ": results in " << ctx.out_dir.string() << "\n";
    return kOk;
  } catch (const io::IoError& e) {
    log << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const InvariantError& e) {
    log << "internal error: " << e.what() << "\n";
    return kInternalError;
  } catch (const ValidationError& e) {
    log << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const DimensionError& e) {
    log << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const DegenerateInputError& e) {
    log << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    return kInternalError;
  }
}

}  // namespace photonic::cli
