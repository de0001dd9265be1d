// Scenario runner: parse experiment configs, execute energy / resolvent /
// flow / q-ladder / refinement jobs, emit traces and plot-ready data files.
//
// Configs are single JSON documents. Every artifact embeds the FNV hash of
// the canonical config text; all randomness flows from the scenario seed.
#pragma once

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lgflow/fields.hpp"
#include "lgflow/flow.hpp"
#include "lgflow/trace_io.hpp"

namespace lgflow {

using json = nlohmann::json;

struct ScenarioError : std::runtime_error {
  ScenarioError(const std::string& key, const std::string& what)
      : std::runtime_error(key + ": " + what), key(key) {}
  std::string key;
};

// ---- integrand catalog ids -------------------------------------------------

namespace detail {

inline std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char c : s) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(cur);
      cur.clear();
      continue;
    }
    cur += c;
  }
  parts.push_back(cur);
  return parts;
}

inline std::string strip(const std::string& s) {
  auto a = s.find_first_not_of(" \t");
  auto b = s.find_last_not_of(" \t");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

} // namespace detail

// Parse catalog ids like "euclid", "area", "xweight", "kweight(seed=7)",
// "qpow(euclid,1.5)", "moreau(area,0.1)", "perturbed(euclid,0.5)". The
// nowhere-dense set is realized at `cells` intervals on (0, extent).
template <typename Scalar>
Integrand<Scalar> parse_integrand(const std::string& id, const Projector<Scalar>& proj,
                                  std::uint64_t seed, int cells, Scalar extent = Scalar(1)) {
  const std::string s = detail::strip(id);
  const auto paren = s.find('(');
  const std::string head = paren == std::string::npos ? s : s.substr(0, paren);
  std::string args;
  if (paren != std::string::npos) {
    if (s.back() != ')') throw ScenarioError("integrand", "unbalanced parentheses in '" + id + "'");
    args = s.substr(paren + 1, s.size() - paren - 2);
  }
  if (head == "euclid") return Integrand<Scalar>::euclid(proj);
  if (head == "area") return Integrand<Scalar>::area(proj);
  if (head == "xweight") return Integrand<Scalar>::x_weighted(proj);
  if (head == "kweight") {
    std::uint64_t k_seed = seed;
    if (!args.empty()) {
      const std::string a = detail::strip(args);
      if (a.rfind("seed=", 0) == 0) k_seed = std::stoull(a.substr(5));
      else k_seed = std::stoull(a);
    }
    return Integrand<Scalar>::nowhere_dense_weighted(
        CantorSet::build(k_seed, cells, static_cast<double>(extent)), proj);
  }
  auto two_args = [&](const char* what) {
    auto parts = detail::split_top_level(args);
    if (parts.size() != 2) throw ScenarioError("integrand", std::string(what) + " needs 2 arguments");
    return std::pair<std::string, Scalar>(detail::strip(parts[0]),
                                          static_cast<Scalar>(std::stod(parts[1])));
  };
  if (head == "qpow") {
    auto [base, q] = two_args("qpow");
    return qpower(parse_integrand(base, proj, seed, cells, extent), q);
  }
  if (head == "moreau") {
    auto [base, lam] = two_args("moreau");
    return Integrand<Scalar>::moreau_of(parse_integrand(base, proj, seed, cells, extent), lam);
  }
  if (head == "perturbed") {
    auto [base, amp] = two_args("perturbed");
    return Integrand<Scalar>::perturbed(parse_integrand(base, proj, seed, cells, extent), amp);
  }
  throw ScenarioError("integrand", "unknown catalog id '" + id + "'");
}

// ---- scenario --------------------------------------------------------------

template <typename Scalar>
struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  OperatorKind op_kind = OperatorKind::FullGradient;
  int components = 1;
  std::string integrand_id = "euclid";
  std::vector<int> shape{64};
  Scalar h = Scalar(1) / Scalar(64);
  BoundaryCondition bc = BoundaryCondition::Neumann;
  json dirichlet;   // optional boundary spec
  json initial;     // initial / argument field spec
  std::string job_type = "energy";
  json job;         // raw job parameters
  SolverOptions<Scalar> solver;
  std::string output = "out";
  json raw;         // canonical config for hashing
};

namespace detail {

template <typename T>
T require(const json& j, const std::string& path, const std::string& key) {
  if (!j.contains(key)) throw ScenarioError(path + key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError(path + key, "has the wrong type");
  }
}

template <typename T>
T optional_of(const json& j, const std::string& path, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ScenarioError(path + key, "has the wrong type");
  }
}

} // namespace detail

template <typename Scalar>
Scenario<Scalar> parse_scenario(const json& cfg) {
  Scenario<Scalar> s;
  s.raw = cfg;
  s.name = detail::require<std::string>(cfg, "", "name");
  s.seed = detail::optional_of<std::uint64_t>(cfg, "", "seed", 0);

  const json op = detail::require<json>(cfg, "", "operator");
  s.op_kind = operator_kind_from_string(detail::require<std::string>(op, "operator.", "kind"));
  s.components = detail::optional_of<int>(op, "operator.", "components", 1);
  if (s.components < 1) throw ScenarioError("operator.components", "must be positive");

  s.integrand_id = detail::require<std::string>(cfg, "", "integrand");

  const json grid = detail::require<json>(cfg, "", "grid");
  s.shape = detail::require<std::vector<int>>(grid, "grid.", "shape");
  if (s.shape.empty() || s.shape.size() > 2) throw ScenarioError("grid.shape", "must have 1 or 2 axes");
  for (int c : s.shape)
    if (c < 1) throw ScenarioError("grid.shape", "cells per axis must be positive");
  s.h = static_cast<Scalar>(detail::require<double>(grid, "grid.", "h"));
  if (!(s.h > 0)) throw ScenarioError("grid.h", "must be positive");

  const std::string bc = detail::optional_of<std::string>(cfg, "", "bc", "neumann");
  if (bc == "neumann") s.bc = BoundaryCondition::Neumann;
  else if (bc == "dirichlet") s.bc = BoundaryCondition::TraceCarrying;
  else throw ScenarioError("bc", "must be 'neumann' or 'dirichlet'");
  if (s.bc == BoundaryCondition::TraceCarrying) {
    Projector<Scalar> proj(s.op_kind, s.components, static_cast<int>(s.shape.size()));
    if (!proj.is_c_elliptic())
      throw ScenarioError("bc", "dirichlet mode requires a C-elliptic operator kind");
    s.dirichlet = detail::require<json>(cfg, "", "dirichlet");
  }

  s.initial = detail::optional_of<json>(cfg, "", "initial", json{{"type", "constant"}, {"value", 0.0}});

  const json job = detail::require<json>(cfg, "", "job");
  s.job_type = detail::require<std::string>(job, "job.", "type");
  const bool known = s.job_type == "energy" || s.job_type == "resolvent" ||
                     s.job_type == "flow" || s.job_type == "qladder" ||
                     s.job_type == "refinement-study";
  if (!known) throw ScenarioError("job.type", "unknown job '" + s.job_type + "'");
  s.job = job;

  if (s.job_type == "resolvent") {
    const double lam = detail::require<double>(job, "job.", "lambda");
    if (!(lam > 0)) throw ScenarioError("job.lambda", "must be positive");
  }
  if (s.job_type == "flow" || s.job_type == "qladder") {
    const double dt = detail::require<double>(job, "job.", "dt");
    if (!(dt > 0)) throw ScenarioError("job.dt", "must be positive");
    const int steps = s.job_type == "flow" ? detail::require<int>(job, "job.", "steps") : 0;
    if (s.job_type == "flow" && steps < 0) throw ScenarioError("job.steps", "must be nonnegative");
  }
  if (s.job_type == "qladder") {
    const auto qs = detail::require<std::vector<double>>(job, "job.", "q_list");
    if (qs.empty()) throw ScenarioError("job.q_list", "must be nonempty");
    for (double q : qs)
      if (!(q > 1.0 && q <= 2.0)) throw ScenarioError("job.q_list", "entries must lie in (1, 2]");
    const double t_star = detail::require<double>(job, "job.", "t_star");
    if (!(t_star > 0)) throw ScenarioError("job.t_star", "must be positive");
  }
  if (s.job_type == "refinement-study") {
    const auto res = detail::require<std::vector<int>>(job, "job.", "resolutions");
    if (res.empty()) throw ScenarioError("job.resolutions", "must be nonempty");
    for (int r : res)
      if (r < 2) throw ScenarioError("job.resolutions", "entries must be at least 2");
  }
  if (job.contains("q")) {
    const double q = detail::require<double>(job, "job.", "q");
    if (!(q > 1.0 && q <= 2.0)) throw ScenarioError("job.q", "must lie in (1, 2]");
  }
  if (job.contains("moreau_lambda")) {
    const double l = detail::require<double>(job, "job.", "moreau_lambda");
    if (!(l > 0)) throw ScenarioError("job.moreau_lambda", "must be positive");
  }

  if (cfg.contains("solver")) {
    const json sol = cfg.at("solver");
    s.solver.max_iters = detail::optional_of<int>(sol, "solver.", "max_iters", s.solver.max_iters);
    if (s.solver.max_iters < 1) throw ScenarioError("solver.max_iters", "must be positive");
    s.solver.gap_tol = static_cast<Scalar>(
        detail::optional_of<double>(sol, "solver.", "gap_tol", double(s.solver.gap_tol)));
    s.solver.residual_tol = static_cast<Scalar>(detail::optional_of<double>(
        sol, "solver.", "residual_tol", double(s.solver.residual_tol)));
    s.solver.div_budget_factor = static_cast<Scalar>(detail::optional_of<double>(
        sol, "solver.", "div_budget_factor", double(s.solver.div_budget_factor)));
  }

  s.output = detail::optional_of<std::string>(cfg, "", "output", s.name);
  return s;
}

// ---- field construction ----------------------------------------------------

template <typename Scalar>
GridFunction<Scalar> build_initial(const Scenario<Scalar>& s, const Grid<Scalar>& g) {
  const json& init = s.initial;
  const std::string type = detail::require<std::string>(init, "initial.", "type");
  const int m = s.components;
  if (type == "constant")
    return constant_field<Scalar>(g, m,
                                  static_cast<Scalar>(detail::optional_of<double>(
                                      init, "initial.", "value", 0.0)));
  if (type == "ramp") return ramp_field<Scalar>(g, m);
  if (type == "box") {
    if (m != 1) throw ScenarioError("initial.type", "box fields are scalar");
    return box_field<Scalar>(
        g, static_cast<Scalar>(detail::require<double>(init, "initial.", "lo")),
        static_cast<Scalar>(detail::require<double>(init, "initial.", "hi")),
        static_cast<Scalar>(detail::optional_of<double>(init, "initial.", "inside", 1.0)),
        static_cast<Scalar>(detail::optional_of<double>(init, "initial.", "outside", 0.0)));
  }
  if (type == "sine")
    return sine_field<Scalar>(g, m, detail::optional_of<int>(init, "initial.", "mode", 1),
                              static_cast<Scalar>(
                                  detail::optional_of<double>(init, "initial.", "amplitude", 1.0)));
  if (type == "rotation") {
    if (m != 2 || g.dim() != 2) throw ScenarioError("initial.type", "rotation needs a 2d vector field");
    return rotation_field<Scalar>(g, static_cast<Scalar>(detail::optional_of<double>(
                                          init, "initial.", "rate", 1.0)));
  }
  if (type == "random-smooth")
    return random_smooth_field<Scalar>(
        g, m, s.seed + detail::optional_of<std::uint64_t>(init, "initial.", "offset", 0),
        detail::optional_of<int>(init, "initial.", "modes", 3),
        static_cast<Scalar>(detail::optional_of<double>(init, "initial.", "amplitude", 1.0)));
  throw ScenarioError("initial.type", "unknown field type '" + type + "'");
}

template <typename Scalar>
DirichletData<Scalar> build_dirichlet(const Scenario<Scalar>& s, const Grid<Scalar>& g,
                                      const GridFunction<Scalar>& initial) {
  DirichletData<Scalar> d;
  d.u1 = MatrixX<Scalar>::Zero(s.components, g.num_faces());
  const std::string mode = detail::optional_of<std::string>(s.dirichlet, "dirichlet.", "mode",
                                                            "constant");
  if (mode == "from-initial") {
    d.u1 = boundary_trace(initial);
    d.extension = initial;
    return d;
  }
  if (mode != "constant") throw ScenarioError("dirichlet.mode", "must be 'constant' or 'from-initial'");
  if (g.dim() == 1) {
    const auto left = detail::require<std::vector<double>>(s.dirichlet, "dirichlet.", "left");
    const auto right = detail::require<std::vector<double>>(s.dirichlet, "dirichlet.", "right");
    if (static_cast<int>(left.size()) != s.components ||
        static_cast<int>(right.size()) != s.components)
      throw ScenarioError("dirichlet.left", "needs one value per component");
    for (int fi = 0; fi < g.num_faces(); ++fi) {
      const auto& v = g.faces()[fi].side == 0 ? left : right;
      for (int r = 0; r < s.components; ++r) d.u1(r, fi) = static_cast<Scalar>(v[r]);
    }
  } else {
    const auto value = detail::require<std::vector<double>>(s.dirichlet, "dirichlet.", "value");
    if (static_cast<int>(value.size()) != s.components)
      throw ScenarioError("dirichlet.value", "needs one value per component");
    for (int fi = 0; fi < g.num_faces(); ++fi)
      for (int r = 0; r < s.components; ++r) d.u1(r, fi) = static_cast<Scalar>(value[r]);
  }
  d.extension = initial; // any grid function with the right trace works here
  return d;
}

// ---- jobs ------------------------------------------------------------------

struct RunResult {
  int exit_code = 0; // 0 ok, 2 validation, 3 non-convergence, 4 io
  std::string message;
  std::filesystem::path artifact_dir;
};

namespace detail {

template <typename Scalar>
json energy_report_json(const EnergyReport<Scalar>& rep) {
  return json{{"primal", double(rep.primal)},     {"dual", double(rep.dual)},
              {"gap", double(rep.gap)},           {"boundary_term", double(rep.boundary_term)},
              {"iterations", rep.iterations},     {"converged", rep.converged}};
}

template <typename Scalar>
json certificate_json(const CertificateReport<Scalar>& c) {
  return json{{"euler_lagrange_residual", double(c.euler_lagrange_residual)},
              {"normal_trace_residual", double(c.normal_trace_residual)},
              {"fenchel_gap", double(c.fenchel_gap)},
              {"boundary_subgradient_residual", double(c.boundary_subgradient_residual)},
              {"admissible", c.admissible},
              {"offending_cell", c.offending_cell}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw TraceIoError("cannot write " + p.string());
  out << text;
}

} // namespace detail

template <typename Scalar>
RunResult run_scenario(const Scenario<Scalar>& s, const std::filesystem::path& output_root) {
  RunResult rr;
  const std::filesystem::path dir = output_root / s.output;
  rr.artifact_dir = dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    rr.exit_code = 4;
    rr.message = "cannot create output directory " + dir.string();
    return rr;
  }

  const int dim = static_cast<int>(s.shape.size());
  Grid<Scalar> grid(s.shape, s.h);
  Projector<Scalar> proj(s.op_kind, s.components, dim);
  const Scalar extent = s.h * static_cast<Scalar>(s.shape[0]);
  Integrand<Scalar> f = parse_integrand<Scalar>(s.integrand_id, proj, s.seed, s.shape[0], extent);

  GridFunction<Scalar> u0 = build_initial(s, grid);
  std::optional<DirichletData<Scalar>> dirichlet;
  if (s.bc == BoundaryCondition::TraceCarrying) dirichlet = build_dirichlet(s, grid, u0);
  const DirichletData<Scalar>* dptr = dirichlet ? &*dirichlet : nullptr;

  const std::string config_hash = hash_hex(s.raw.dump());
  json meta{{"name", s.name},
            {"config", s.raw},
            {"config_hash", config_hash},
            {"grid", {{"shape", s.shape}, {"h", double(s.h)}, {"dim", dim}}},
            {"operator", {{"kind", to_string(s.op_kind)}, {"components", s.components}}},
            {"integrand", f.id()},
            {"bc", s.bc == BoundaryCondition::Neumann ? "neumann" : "dirichlet"},
            {"seed", s.seed},
            {"job", s.job_type}};
  meta["timestamp"] = static_cast<long long>(std::time(nullptr));
  json result{{"config_hash", config_hash}, {"job", s.job_type}};
  bool converged = true;

  try {
    if (s.job_type == "energy") {
      EnergyReport<Scalar> rep = relaxed_energy(f, u0, s.bc, dptr, s.solver);
      converged = rep.converged;
      result["energy"] = detail::energy_report_json(rep);
      if (s.bc == BoundaryCondition::TraceCarrying) {
        EnergyReport<Scalar> rep2 = dirichlet_energy(f, u0, *dirichlet, s.solver);
        result["dirichlet_representation"] = detail::energy_report_json(rep2);
        result["representation_defect"] = double(std::abs(rep2.dual - rep.dual));
        converged = converged && rep2.converged;
      }
    } else if (s.job_type == "resolvent") {
      const Scalar lam = static_cast<Scalar>(s.job.at("lambda").get<double>());
      ResolventResult<Scalar> res = resolve(f, u0, lam, s.bc, dptr, s.solver);
      converged = res.converged;
      result["certificate"] = detail::certificate_json(res.certificate);
      result["iterations"] = res.iterations;
      result["converged"] = res.converged;
      // solution profile for plotting
      std::ostringstream sol;
      sol << "node,x0" << (dim == 2 ? ",x1" : "");
      for (int r = 0; r < s.components; ++r) sol << ",u" << r;
      sol << "\n";
      for (int k = 0; k < grid.num_nodes(); ++k) {
        const PointX<Scalar> p = grid.node_position(k);
        sol << k << "," << format_number(double(p[0]));
        if (dim == 2) sol << "," << format_number(double(p[1]));
        for (int r = 0; r < s.components; ++r)
          sol << "," << format_number(double(res.u.values(r, k)));
        sol << "\n";
      }
      detail::write_text(dir / "solution.csv", sol.str());
    } else if (s.job_type == "flow") {
      const Scalar dt = static_cast<Scalar>(s.job.at("dt").get<double>());
      const int steps = s.job.at("steps").get<int>();
      const bool dump_states = detail::optional_of<bool>(s.job, "job.", "dump_states", false);
      FlowTrace<Scalar> trace;
      if (s.job.contains("moreau_lambda")) {
        const Scalar ml = static_cast<Scalar>(s.job.at("moreau_lambda").get<double>());
        const Scalar q = static_cast<Scalar>(s.job.at("q").get<double>());
        trace = moreau_flow(f, ml, q, u0, dt, steps, s.bc, dptr, s.solver);
      } else if (s.job.contains("q")) {
        const Scalar q = static_cast<Scalar>(s.job.at("q").get<double>());
        trace = qflow(f, q, u0, dt, steps, s.bc, dptr, s.solver);
      } else {
        trace = evolve(f, u0, dt, steps, s.bc, dptr, s.solver);
      }
      converged = trace.completed;
      result["steps_completed"] = static_cast<int>(trace.times.size()) - 1;
      result["energy_monotone"] = trace.energy_monotone;
      result["final_energy"] = double(trace.energies.back());
      result["mass_drift"] =
          double(std::abs(trace.masses.back() - trace.masses.front()));
      write_trace(dir, trace, meta, dump_states);
    } else if (s.job_type == "qladder") {
      const Scalar dt = static_cast<Scalar>(s.job.at("dt").get<double>());
      const Scalar t_star = static_cast<Scalar>(s.job.at("t_star").get<double>());
      const int steps = std::max(1, static_cast<int>(std::llround(double(t_star / dt))));
      std::vector<double> q_list = s.job.at("q_list").get<std::vector<double>>();
      std::sort(q_list.rbegin(), q_list.rend());
      FlowTrace<Scalar> base = evolve(f, u0, dt, steps, s.bc, dptr, s.solver);
      converged = base.completed;
      write_trace(dir / "flow-q1", base, meta, false);
      std::ostringstream ladder;
      ladder << "q,distance_l2\n";
      json distances = json::array();
      for (double q : q_list) {
        FlowTrace<Scalar> tq = qflow(f, static_cast<Scalar>(q), u0, dt, steps, s.bc, dptr, s.solver);
        converged = converged && tq.completed;
        const Scalar d = state_distance(tq, base, steps);
        ladder << format_number(q) << "," << format_number(double(d)) << "\n";
        distances.push_back({{"q", q}, {"distance", double(d)}});
        std::ostringstream sub;
        sub << "flow-q" << q;
        write_trace(dir / sub.str(), tq, meta, false);
      }
      detail::write_text(dir / "qladder.csv", ladder.str());
      result["distances"] = distances;
    } else if (s.job_type == "refinement-study") {
      const std::vector<int> res_list = s.job.at("resolutions").get<std::vector<int>>();
      std::ostringstream table;
      table << "cells,primal,dual,gap,iterations\n";
      json rows = json::array();
      for (int cells : res_list) {
        Grid<Scalar> gN(std::vector<int>{cells}, extent / static_cast<Scalar>(cells));
        Projector<Scalar> projN(s.op_kind, s.components, 1);
        Integrand<Scalar> fN = parse_integrand<Scalar>(s.integrand_id, projN, s.seed, cells, extent);
        GridFunction<Scalar> uN = ramp_field<Scalar>(gN, s.components);
        EnergyReport<Scalar> rep = relaxed_energy(fN, uN, BoundaryCondition::Neumann, nullptr, s.solver);
        converged = converged && rep.converged;
        table << cells << "," << format_number(double(rep.primal)) << ","
              << format_number(double(rep.dual)) << "," << format_number(double(rep.gap))
              << "," << rep.iterations << "\n";
        rows.push_back({{"cells", cells},
                        {"primal", double(rep.primal)},
                        {"dual", double(rep.dual)},
                        {"gap", double(rep.gap)}});
      }
      detail::write_text(dir / "refinement.csv", table.str());
      result["refinement"] = rows;
    }
  } catch (const ScenarioError& e) {
    rr.exit_code = 2;
    rr.message = e.what();
    return rr;
  } catch (const TraceIoError& e) {
    rr.exit_code = 4;
    rr.message = e.what();
    return rr;
  }

  result["converged"] = converged;
  try {
    detail::write_text(dir / "result.json", result.dump(2) + "\n");
    if (s.job_type != "flow" && s.job_type != "qladder") // those already wrote metadata
      detail::write_text(dir / "metadata.json", meta.dump(2) + "\n");
  } catch (const TraceIoError& e) {
    rr.exit_code = 4;
    rr.message = e.what();
    return rr;
  }
  if (!converged) {
    rr.exit_code = 3;
    rr.message = "solver did not converge; partial artifacts written";
  }
  return rr;
}

// Dry construction of every ingredient; throws on any schema or
// compatibility violation.
template <typename Scalar>
Scenario<Scalar> validate_scenario(const json& cfg) {
  Scenario<Scalar> s = parse_scenario<Scalar>(cfg);
  Grid<Scalar> grid(s.shape, s.h);
  Projector<Scalar> proj(s.op_kind, s.components, grid.dim());
  parse_integrand<Scalar>(s.integrand_id, proj, s.seed, s.shape[0],
                          s.h * static_cast<Scalar>(s.shape[0]));
  GridFunction<Scalar> u0 = build_initial(s, grid);
  if (s.bc == BoundaryCondition::TraceCarrying) build_dirichlet(s, grid, u0);
  return s;
}

// ---- reports ---------------------------------------------------------------

// Post-process a run directory into plot-ready columns and a short summary.
inline RunResult report_directory(const std::filesystem::path& dir) {
  RunResult rr;
  rr.artifact_dir = dir;
  try {
    json meta;
    json result;
    {
      std::ifstream in(dir / "result.json");
      if (!in) throw TraceIoError("missing result file " + (dir / "result.json").string());
      try {
        in >> result;
      } catch (const json::exception& e) {
        throw TraceIoError("corrupt result file " + (dir / "result.json").string() + ": " + e.what());
      }
    }
    const bool has_meta = std::filesystem::exists(dir / "metadata.json");
    if (has_meta) meta = read_metadata(dir);
    const std::filesystem::path rep = dir / "report";
    std::filesystem::create_directories(rep);
    std::ostringstream summary;
    summary << "scenario report\n";
    if (has_meta && meta.contains("name")) summary << "name: " << meta["name"].get<std::string>() << "\n";
    summary << "config_hash: " << result.value("config_hash", std::string("?")) << "\n";
    const std::string job = result.value("job", std::string("?"));
    summary << "job: " << job << "\n";

    if (std::filesystem::exists(dir / "trace.csv")) {
      auto rows = read_trace_csv(dir / "trace.csv");
      std::ostringstream out;
      out << "time,energy\n";
      bool monotone = true;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out << format_number(rows[i].time) << "," << format_number(rows[i].energy) << "\n";
        if (i > 0 && rows[i].energy > rows[i - 1].energy + 1e-10 * (1 + std::abs(rows[i].energy)))
          monotone = false;
      }
      detail::write_text(rep / "energy_vs_time.csv", out.str());
      summary << "states: " << rows.size() << "\n";
      summary << "energy range: [" << format_number(rows.back().energy) << ", "
              << format_number(rows.front().energy) << "]\n";
      summary << "energy non-increasing: " << (monotone ? "yes" : "no") << "\n";
      double drift = std::abs(rows.back().mass - rows.front().mass);
      summary << "mass drift: " << format_number(drift) << "\n";
    }
    if (std::filesystem::exists(dir / "qladder.csv")) {
      std::ifstream in(dir / "qladder.csv");
      std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      detail::write_text(rep / "q_vs_distance.csv", text);
      summary << "q-ladder rows: " << std::max<std::size_t>(1, std::count(text.begin(), text.end(), '\n')) - 1
              << "\n";
    }
    if (std::filesystem::exists(dir / "refinement.csv")) {
      // add the observed convergence order from successive dual differences
      std::ifstream in(dir / "refinement.csv");
      std::string line;
      std::getline(in, line);
      std::vector<std::pair<long, double>> pairs;
      while (std::getline(in, line)) {
        long cells;
        double primal, dual, gap;
        long iters;
        if (std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%ld", &cells, &primal, &dual, &gap,
                        &iters) >= 3)
          pairs.emplace_back(cells, dual);
      }
      std::ostringstream out;
      out << "cells,dual,observed_order\n";
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        out << pairs[i].first << "," << format_number(pairs[i].second);
        if (i + 2 < pairs.size()) {
          const double d1 = std::abs(pairs[i].second - pairs[i + 1].second);
          const double d2 = std::abs(pairs[i + 1].second - pairs[i + 2].second);
          out << "," << format_number(d2 > 0 ? std::log2(d1 / d2) : 0.0);
        } else {
          out << ",";
        }
        out << "\n";
      }
      detail::write_text(rep / "cells_vs_dual.csv", out.str());
      summary << "refinement rows: " << pairs.size() << "\n";
    }
    if (result.contains("energy")) {
      summary << "primal: " << format_number(result["energy"]["primal"].get<double>()) << "\n";
      summary << "dual: " << format_number(result["energy"]["dual"].get<double>()) << "\n";
      summary << "gap: " << format_number(result["energy"]["gap"].get<double>()) << "\n";
    }
    if (result.contains("certificate")) {
      summary << "euler_lagrange_residual: "
              << format_number(result["certificate"]["euler_lagrange_residual"].get<double>())
              << "\n";
      summary << "fenchel_gap: "
              << format_number(result["certificate"]["fenchel_gap"].get<double>()) << "\n";
    }
    detail::write_text(rep / "summary.txt", summary.str());
  } catch (const TraceIoError& e) {
    rr.exit_code = 4;
    rr.message = e.what();
  }
  return rr;
}

// ---- bundled scenarios -------------------------------------------------------

inline const std::map<std::string, std::string>& bundled_scenarios() {
  static const std::map<std::string, std::string> scenarios = {
      {"tvflow-step-1d", R"json({
  "name": "tvflow-step-1d",
  "seed": 7,
  "operator": {"kind": "full-gradient", "components": 1},
  "integrand": "euclid",
  "grid": {"shape": [128], "h": 0.0078125},
  "bc": "neumann",
  "initial": {"type": "box", "lo": 0.25, "hi": 0.75},
  "job": {"type": "flow", "dt": 0.001, "steps": 150},
  "solver": {"max_iters": 60000, "residual_tol": 1e-9},
  "output": "tvflow-step-1d"
})json"},
      {"badf-relaxation", R"json({
  "name": "badf-relaxation",
  "seed": 7,
  "operator": {"kind": "full-gradient", "components": 1},
  "integrand": "kweight",
  "grid": {"shape": [64], "h": 0.015625},
  "bc": "neumann",
  "initial": {"type": "ramp"},
  "job": {"type": "refinement-study", "resolutions": [64, 128, 256, 512]},
  "solver": {"max_iters": 120000},
  "output": "badf-relaxation"
})json"},
      {"qladder-1d", R"json({
  "name": "qladder-1d",
  "seed": 7,
  "operator": {"kind": "full-gradient", "components": 1},
  "integrand": "euclid",
  "grid": {"shape": [64], "h": 0.015625},
  "bc": "neumann",
  "initial": {"type": "box", "lo": 0.25, "hi": 0.75},
  "job": {"type": "qladder", "dt": 0.001, "t_star": 0.05, "q_list": [1.5, 1.25, 1.1, 1.05]},
  "solver": {"max_iters": 30000, "residual_tol": 1e-9},
  "output": "qladder-1d"
})json"},
      {"dirichlet-ramp-1d", R"json({
  "name": "dirichlet-ramp-1d",
  "seed": 11,
  "operator": {"kind": "full-gradient", "components": 1},
  "integrand": "euclid",
  "grid": {"shape": [64], "h": 0.015625},
  "bc": "dirichlet",
  "dirichlet": {"mode": "constant", "left": [1.0], "right": [1.0]},
  "initial": {"type": "constant", "value": 0.0},
  "job": {"type": "energy"},
  "output": "dirichlet-ramp-1d"
})json"},
      {"heatlike-q2-1d", R"json({
  "name": "heatlike-q2-1d",
  "seed": 3,
  "operator": {"kind": "full-gradient", "components": 1},
  "integrand": "euclid",
  "grid": {"shape": [64], "h": 0.015625},
  "bc": "neumann",
  "initial": {"type": "box", "lo": 0.25, "hi": 0.75},
  "job": {"type": "flow", "dt": 0.001, "steps": 60, "q": 2.0},
  "solver": {"max_iters": 30000, "residual_tol": 1e-9},
  "output": "heatlike-q2-1d"
})json"},
      {"bd-rotation-2d", R"json({
  "name": "bd-rotation-2d",
  "seed": 5,
  "operator": {"kind": "symmetric-gradient", "components": 2},
  "integrand": "euclid",
  "grid": {"shape": [16, 16], "h": 0.0625},
  "bc": "neumann",
  "initial": {"type": "rotation"},
  "job": {"type": "flow", "dt": 0.01, "steps": 5},
  "solver": {"max_iters": 20000},
  "output": "bd-rotation-2d"
})json"},
  };
  return scenarios;
}

inline json load_scenario_json(const std::string& path_or_name) {
  const auto& bundled = bundled_scenarios();
  auto it = bundled.find(path_or_name);
  std::string text;
  if (it != bundled.end()) {
    text = it->second;
  } else {
    std::ifstream in(path_or_name);
    if (!in) throw TraceIoError("cannot open scenario '" + path_or_name + "'");
    text.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ScenarioError("(config)", std::string("not valid JSON: ") + e.what());
  }
}

} // namespace lgflow
