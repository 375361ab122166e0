#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "gibbs_ot/annealing_analysis.hpp"
#include "gibbs_ot/datasets.hpp"
#include "gibbs_ot/errors.hpp"
#include "gibbs_ot/gibbs_sampler.hpp"
#include "gibbs_ot/io.hpp"
#include "gibbs_ot/parallel.hpp"
#include "gibbs_ot/sinkhorn.hpp"
#include "gibbs_ot/wlm_nmf.hpp"

namespace gibbs_ot::cli {
namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
  // problem
  std::string preset;
  std::size_t grid = 64;
  std::string p_path, q_path, cost;
  // solver
  std::string method = "gibbs";
  std::size_t iters = 0;
  std::string schedule;
  double epsilon = 0.0;
  std::uint64_t seed = 1;
  std::size_t tau = kDefaultMixLag;
  bool with_exact = false;
  std::string out_dir = "out";
  std::string checkpoint_out;
  // experiment
  std::string budgets = "1,10,50,200,1000,5000";
  // nmf
  std::string images;
  std::size_t synthetic = 0;
  std::size_t side = 8;
  std::size_t k = 40;
  double gamma = 2.0;
  std::size_t epochs = 30;
  double eta = 0.5;
  double t0 = 0.0;
  std::size_t max_sweeps = 200;
  std::size_t exact_every = 5;
  bool batch = false;
  // analyze
  std::string checkpoint;
  std::size_t replay = 0;
  double bound_K = 1.0;
  double bound_eps = 0.5;
  double bound_gamma = 1.0;
  double bound_a = 1.0;
  double temperature = -1.0;
};

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_metadata(const fs::path& dir, const std::vector<std::string>& args) {
  io::write_json(dir / "metadata.json", {{"timestamp", utc_timestamp()}, {"args", args}});
}

std::string jsonl(const std::vector<json>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.dump() + "\n";
  return out;
}

double relative_gap(double estimate, double exact) {
  return std::abs(estimate - exact) / std::max(std::abs(exact), 1e-300);
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

double parse_number(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(what + ": not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(what + ": not a number: '" + s + "'");
  return v;
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  const double v = parse_number(s, what);
  if (!(v >= 0.0) || v != std::floor(v)) throw ConfigError(what + ": expected a nonnegative integer");
  return static_cast<std::size_t>(v);
}

// Problem assembly --------------------------------------------------------

datasets::Problem load_problem(const Options& o) {
  if (!o.preset.empty()) {
    if (!o.p_path.empty() || !o.q_path.empty())
      throw ConfigError("--preset and --p/--q are mutually exclusive");
    if (o.preset == "toy1d") return datasets::toy1d(o.grid);
    if (o.preset == "coulomb1d") return datasets::coulomb1d(o.grid);
    if (o.preset.rfind("random:", 0) == 0) {
      const auto dims = split(o.preset.substr(7), 'x');
      if (dims.size() != 2) throw ConfigError("--preset random:M1xM2 expected");
      const auto m1 = parse_count(dims[0], "--preset"), m2 = parse_count(dims[1], "--preset");
      if (m1 == 0 || m2 == 0) throw ConfigError("--preset random: dimensions must be positive");
      return datasets::random_problem(m1, m2, o.seed);
    }
    throw ConfigError("unknown preset '" + o.preset + "'");
  }
  if (o.p_path.empty() || o.q_path.empty()) throw ConfigError("--p and --q are required without --preset");
  if (o.cost.empty()) throw ConfigError("--cost is required without --preset");
  auto p = io::read_measure(o.p_path);
  auto q = io::read_measure(o.q_path);

  const auto colon = o.cost.find(':');
  const std::string kind = o.cost.substr(0, colon);
  const std::optional<std::string> arg =
      colon == std::string::npos ? std::nullopt : std::optional(o.cost.substr(colon + 1));
  CostMatrix cost;
  if (kind == "euclidean" || kind == "coulomb") {
    if (!p.support || !q.support)
      throw InputError("--cost " + kind + " needs support points in both measures");
    if (kind == "euclidean") {
      cost = euclidean_cost(*p.support, *q.support, arg ? parse_number(*arg, "--cost") : 2.0);
    } else {
      auto flat = [](const std::vector<Point>& pts) {
        std::vector<double> xs;
        for (const auto& pt : pts) {
          if (pt.size() != 1) throw InputError("--cost coulomb needs 1-D support points");
          xs.push_back(pt[0]);
        }
        return xs;
      };
      const double cap = arg ? parse_number(*arg, "--cost")
                             : 2.0 * static_cast<double>(std::max(p.size(), q.size()));
      cost = coulomb_cost(flat(*p.support), flat(*q.support), cap);
    }
  } else {
    try {
      cost = custom_cost(io::read_matrix_csv(o.cost));
    } catch (const std::invalid_argument& e) {
      throw InputError(o.cost + ": " + e.what());
    }
  }
  if (cost.rows() != p.size() || cost.cols() != q.size())
    throw InputError("cost matrix is " + std::to_string(cost.rows()) + "x" +
                     std::to_string(cost.cols()) + " but the measures have " +
                     std::to_string(p.size()) + " and " + std::to_string(q.size()) + " points");
  return {std::move(p), std::move(q), std::move(cost)};
}

double mean_cost(const Matrix& M) {
  const auto& d = M.data();
  return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
}

// solve -------------------------------------------------------------------

int cmd_solve(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const auto prob = load_problem(o);
  const Matrix& M = prob.cost.entries;
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);

  json summary{{"method", o.method}, {"m1", prob.p.size()}, {"m2", prob.q.size()}};
  double estimate = 0.0;
  TransportPlan plan;

  if (o.method == "exact") {
    const auto sol = solve_exact(prob.p, prob.q, prob.cost);
    estimate = sol.cost;
    plan = sol.plan;
    summary["pivots"] = sol.pivots;
  } else if (o.method == "gibbs") {
    const std::size_t grid = std::max(prob.p.size(), prob.q.size());
    std::size_t sweeps = o.iters;
    TemperatureSchedule sched =
        parse_schedule(o.schedule.empty() ? "geometric:2.0" : o.schedule, sweeps ? sweeps : 1000, grid);
    if (sweeps == 0) sweeps = sched.kind() == TemperatureSchedule::Kind::geometric ? sched.budget() : 1000;
    GibbsChain chain(prob.p.weights, prob.q.weights, M, o.seed);
    std::vector<json> rows;
    if (sched.kind() == TemperatureSchedule::Kind::constant) {
      const auto mix = chain.run_until_mixed(sched.next(), o.tau, sweeps);
      for (const auto& r : mix.trace) rows.push_back(io::trace_to_json(r));
      summary["mixed"] = mix.mixed;
      summary["sweeps"] = mix.sweeps_used;
    } else {
      anneal(chain, sched, sweeps, [&](const TraceRecord& r) { rows.push_back(io::trace_to_json(r)); });
      summary["sweeps"] = sweeps;
    }
    io::write_text(dir / "trace.jsonl", jsonl(rows));
    const json ckpt = io::checkpoint_to_json(chain.state(), sched);
    io::write_json(o.checkpoint_out.empty() ? dir / "checkpoint.json" : fs::path(o.checkpoint_out), ckpt);
    estimate = chain.energy_z();
    plan = chain.recover_plan();
    summary["schedule"] = sched.describe();
    summary["V_gh"] = chain.energy_gh();
    summary["feas"] = chain.dual_feasibility_residual();
  } else if (o.method == "sinkhorn") {
    SinkhornConfig cfg;
    cfg.epsilon = o.epsilon > 0.0 ? o.epsilon : 0.01 * mean_cost(M);
    if (o.iters) cfg.max_iters = o.iters;
    const auto res = sinkhorn(prob.p.weights, prob.q.weights, M, cfg);
    plan = res.plan;
    estimate = transport_cost(plan, M);
    summary["epsilon"] = cfg.epsilon;
    summary["iterations"] = res.iterations_used;
    summary["converged"] = res.converged;
    summary["residual"] = res.residual;
  } else {
    throw ConfigError("unknown method '" + o.method + "' (gibbs, sinkhorn, exact)");
  }

  std::optional<double> exact_cost, gap;
  if (o.with_exact) {
    exact_cost = o.method == "exact" ? estimate : solve_exact(prob.p, prob.q, prob.cost).cost;
    gap = relative_gap(estimate, *exact_cost);
  }
  summary["cost_estimate"] = estimate;
  summary["plan_cost"] = transport_cost(plan, M);
  summary["exact_cost"] = nullable(exact_cost);
  summary["relative_gap"] = nullable(gap);

  io::write_json(dir / "plan.json", io::plan_to_json(plan));
  io::write_json(dir / "summary.json", summary);
  write_metadata(dir, args);
  out << o.method << " cost " << estimate;
  if (gap) out << " exact " << *exact_cost << " gap " << *gap;
  out << "\n";
  return 0;
}

// experiment --------------------------------------------------------------

int cmd_experiment(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.preset != "toy1d" && o.preset != "coulomb1d")
    throw ConfigError("experiment needs --preset toy1d or coulomb1d");
  if (o.grid < 2) throw ConfigError("--n must be at least 2");
  std::vector<std::size_t> budgets;
  for (const auto& b : split(o.budgets, ',')) {
    const auto v = parse_count(b, "--budgets");
    if (v == 0) throw ConfigError("--budgets entries must be positive");
    budgets.push_back(v);
  }
  const auto prob = o.preset == "toy1d" ? datasets::toy1d(o.grid) : datasets::coulomb1d(o.grid);
  const Matrix& M = prob.cost.entries;
  const auto& p = prob.p.weights;
  const auto& q = prob.q.weights;
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);

  const auto exact = solve_exact(prob.p, prob.q, prob.cost);
  const auto [res_p, res_q] = marginal_residual(exact.plan, p, q);
  io::write_matrix_csv(dir / "exact_plan.csv", exact.plan.to_dense());

  const double eps = o.epsilon > 0.0 ? o.epsilon : 0.5 / static_cast<double>(o.grid);
  const double T0 = 2.0;

  struct Row {
    double gibbs_V = 0.0, gibbs_plan = 0.0, sinkhorn_cost = 0.0, sinkhorn_residual = 0.0;
    std::string trace;
    Matrix gibbs_dense, sinkhorn_dense;
  };
  std::vector<Row> rows(budgets.size());
  parallel_for(budgets.size(), [&](std::size_t b) {
    const std::size_t l = budgets[b];
    GibbsChain chain(p, q, M, o.seed);
    auto sched = TemperatureSchedule::geometric(T0, l, o.grid);
    std::vector<json> lines;
    anneal(chain, sched, l, [&](const TraceRecord& r) { lines.push_back(io::trace_to_json(r)); });
    const auto plan = chain.recover_plan();
    rows[b].gibbs_V = chain.energy_z();
    rows[b].gibbs_plan = transport_cost(plan, M);
    rows[b].gibbs_dense = plan.to_dense();
    rows[b].trace = jsonl(lines);
    const auto sk = sinkhorn(p, q, M, {eps, l, 1e-14});
    rows[b].sinkhorn_cost = transport_cost(sk.plan, M);
    rows[b].sinkhorn_residual = sk.residual;
    rows[b].sinkhorn_dense = sk.plan.to_dense();
  });

  std::ostringstream table;
  table << "budget,gibbs_V,gibbs_plan_cost,sinkhorn_cost,exact_cost,gibbs_gap,sinkhorn_gap\n";
  table << std::setprecision(17);
  json entries = json::array();
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    const auto& r = rows[b];
    const std::string tag = std::to_string(budgets[b]);
    io::write_matrix_csv(dir / ("gibbs_plan_" + tag + ".csv"), r.gibbs_dense);
    io::write_matrix_csv(dir / ("sinkhorn_plan_" + tag + ".csv"), r.sinkhorn_dense);
    io::write_text(dir / ("gibbs_trace_" + tag + ".jsonl"), r.trace);
    const double gg = relative_gap(r.gibbs_V, exact.cost);
    const double sg = relative_gap(r.sinkhorn_cost, exact.cost);
    table << budgets[b] << ',' << r.gibbs_V << ',' << r.gibbs_plan << ',' << r.sinkhorn_cost << ','
          << exact.cost << ',' << gg << ',' << sg << '\n';
    entries.push_back({{"budget", budgets[b]},
                       {"gibbs_V", r.gibbs_V},
                       {"gibbs_plan_cost", r.gibbs_plan},
                       {"gibbs_gap", gg},
                       {"sinkhorn_cost", r.sinkhorn_cost},
                       {"sinkhorn_gap", sg},
                       {"sinkhorn_residual", r.sinkhorn_residual}});
  }
  io::write_text(dir / "summary.csv", table.str());
  io::write_json(dir / "summary.json", {{"preset", o.preset},
                                        {"N", o.grid},
                                        {"seed", o.seed},
                                        {"epsilon", eps},
                                        {"T0", T0},
                                        {"exact_cost", exact.cost},
                                        {"exact_residual", {res_p, res_q}},
                                        {"budgets", entries}});
  write_metadata(dir, args);
  out << table.str();
  return 0;
}

// nmf ---------------------------------------------------------------------

struct Corpus {
  NMFDataset data;
  std::size_t rows = 0, cols = 0;
};

Corpus load_corpus(const Options& o) {
  Corpus c;
  if (!o.images.empty() && o.synthetic)
    throw ConfigError("--images and --synthetic are mutually exclusive");
  if (o.synthetic) {
    c.data = datasets::synthetic_nmf(o.synthetic, o.side, o.seed);
    c.rows = c.cols = o.side;
    return c;
  }
  if (o.images.empty()) throw ConfigError("nmf needs --images DIR or --synthetic COUNT");
  if (!fs::is_directory(o.images)) throw InputError(o.images + ": not a directory");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(o.images)) {
    const auto ext = e.path().extension().string();
    if (e.is_regular_file() && (ext == ".pgm" || ext == ".csv")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError(o.images + ": no .pgm or .csv images");
  for (const auto& f : files) {
    const auto r = io::read_raster(f);
    if (c.data.instances.empty()) {
      c.rows = r.rows;
      c.cols = r.cols;
    } else if (r.rows != c.rows || r.cols != c.cols) {
      throw InputError(f.string() + ": image is " + std::to_string(r.rows) + "x" +
                       std::to_string(r.cols) + ", expected " + std::to_string(c.rows) + "x" +
                       std::to_string(c.cols));
    }
    try {
      c.data.instances.push_back(io::raster_to_measure(r));
    } catch (const std::invalid_argument& e) {
      throw InputError(f.string() + ": " + e.what());
    }
  }
  c.data.shared_support = io::pixel_grid(c.rows, c.cols);
  return c;
}

int cmd_nmf(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  const Corpus corpus = load_corpus(o);
  TrainConfig cfg;
  cfg.K = o.k;
  cfg.gamma = o.gamma;
  cfg.epochs = o.epochs;
  cfg.seed = o.seed;
  cfg.tau = o.tau;
  cfg.eta = o.eta;
  cfg.initial_T = o.t0;
  cfg.max_sweeps = o.max_sweeps;
  cfg.exact_every = o.exact_every;
  cfg.batch = o.batch;
  if (cfg.K == 0) throw ConfigError("--k must be positive");
  if (!(cfg.gamma > 0.0)) throw ConfigError("--gamma must be positive");
  if (cfg.tau == 0) throw ConfigError("--tau must be positive");

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  NMFTrainer trainer(corpus.data, cfg);
  std::vector<json> lines;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto rep = trainer.epoch();
    lines.push_back(io::epoch_to_json(rep));
    out << "epoch " << rep.epoch << " T " << rep.T << " proxy " << rep.objective_proxy;
    if (rep.exact_objective) out << " exact " << *rep.exact_objective;
    out << "\n";
  }
  io::write_text(dir / "trace.jsonl", jsonl(lines));
  io::write_json(dir / "model.json", io::model_to_json(trainer.model()));
  const auto& comps = trainer.model().components;
  for (std::size_t k = 0; k < comps.size(); ++k)
    io::write_matrix_csv(dir / ("component_" + std::to_string(k) + ".csv"),
                         Matrix(corpus.rows, corpus.cols, comps[k]));
  write_metadata(dir, args);
  return 0;
}

// analyze -----------------------------------------------------------------

json analysis_record(const GibbsChain& chain, double T, double r) {
  const ZView z = chain.z_view();
  const Half half = chain.state().half_steps % 2 == 1 ? Half::odd : Half::even;
  const auto st = concentration_ingredients(z, T);
  return {{"n", chain.state().half_steps},
          {"T", T},
          {"phi_dot_q", st.C_even},
          {"psi_dot_p", st.C_odd},
          {"D_odd", st.D_odd},
          {"D_even", st.D_even},
          {"drift", expected_drift(z, T, half)},
          {"T_crit", critical_temperature(z, half)},
          {"r", r}};
}

int cmd_analyze(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
  if (o.checkpoint.empty()) throw ConfigError("analyze needs --checkpoint");
  const auto prob = load_problem(o);
  const Matrix& M = prob.cost.entries;
  auto ck = io::checkpoint_from_json(io::read_json(o.checkpoint));
  if (ck.state.g.size() != prob.p.size() || ck.state.h.size() != prob.q.size())
    throw InputError("checkpoint/problem mismatch: checkpoint is " + std::to_string(ck.state.g.size()) +
                     "x" + std::to_string(ck.state.h.size()));
  if (ck.state.half_steps % 2 != 0) throw InputError("checkpoint is not at a sweep boundary");

  std::optional<TemperatureSchedule> sched = ck.schedule;
  if (!o.schedule.empty()) {
    if (sched && ck.state.half_steps > 0 && o.replay > 0)
      throw ConfigError("checkpoint/schedule mismatch: checkpoint already carries a schedule");
    sched = parse_schedule(o.schedule, std::max<std::size_t>(o.replay, 1),
                           std::max(prob.p.size(), prob.q.size()));
  }
  if (o.replay > 0 && !sched) throw ConfigError("checkpoint/schedule mismatch: replay needs a schedule");

  GibbsChain chain(prob.p.weights, prob.q.weights, M, ck.state);
  auto next_T = [&](TemperatureSchedule& s) {
    return s.needs_critical_temperature() ? s.next(critical_temperature(chain.z_view(), Half::even))
                                          : s.next();
  };
  // Temperature of the half-step that produced the checkpoint state; its draws
  // drive the next transition.
  // Fresh checkpoints have none; fall back to the first replay temperature.
  double T0 = 0.0;
  if (o.temperature >= 0.0) {
    T0 = o.temperature;
  } else if (ck.schedule && ck.schedule->index() > 0) {
    T0 = ck.schedule->current();
  } else if (sched) {
    auto copy = *sched;
    T0 = next_T(copy);
  } else {
    throw ConfigError("analyze needs --temperature or a schedule");
  }
  if (!(T0 > 0.0)) throw ConfigError("--temperature must be positive");

  std::vector<json> lines;
  std::vector<double> temps;
  std::vector<SweepStats> stats;
  auto emit = [&](double T, double r) {
    lines.push_back(analysis_record(chain, T, r));
    temps.push_back(T);
    stats.push_back(concentration_ingredients(chain.z_view(), T));
  };

  ResidualTracker tracker(chain, T0);
  emit(T0, tracker.r());
  for (std::size_t s = 0; s < o.replay; ++s) {
    const double T = next_T(*sched);
    chain.half_step_L(T);
    tracker.update(chain, T, Half::odd);
    emit(T, tracker.r());
    chain.half_step_U(T);
    tracker.update(chain, T, Half::even);
    emit(T, tracker.r());
  }

  BoundQuery query;
  query.a.assign(temps.size(), o.bound_a);
  query.K = o.bound_K;
  query.gamma = o.bound_gamma;
  query.epsilon = o.bound_eps;
  const auto bounds = evaluate_bounds(query, temps, stats);

  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  io::write_text(dir / "analysis.jsonl", jsonl(lines));
  io::write_json(dir / "bounds.json", {{"K", query.K},
                                       {"gamma", query.gamma},
                                       {"epsilon", query.epsilon},
                                       {"a", o.bound_a},
                                       {"steps", temps.size()},
                                       {"left_prob", bounds.left_prob},
                                       {"right_prob", bounds.right_prob},
                                       {"right_prob_raw", bounds.right_prob_raw},
                                       {"condition_i", bounds.condition_i},
                                       {"condition_ii", bounds.condition_ii}});
  write_metadata(dir, args);
  out << "records " << lines.size() << " left_prob " << bounds.left_prob << " right_prob "
      << bounds.right_prob << "\n";
  return 0;
}

void add_problem_flags(CLI::App* sub, Options& o) {
  sub->add_option("--preset", o.preset, "toy1d | coulomb1d | random:M1xM2");
  sub->add_option("--n", o.grid, "grid size for 1-D presets");
  sub->add_option("--p", o.p_path, "source measure JSON");
  sub->add_option("--q", o.q_path, "target measure JSON");
  sub->add_option("--cost", o.cost, "cost CSV path, euclidean[:power] or coulomb[:cap]");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--out-dir", o.out_dir, "output directory");
}

}  // namespace

TemperatureSchedule parse_schedule(const std::string& spec, std::size_t sweeps, std::size_t grid) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  if (colon == std::string::npos || colon + 1 == spec.size())
    throw ConfigError("--schedule '" + spec + "': expected kind:value");
  const auto parts = split(spec.substr(colon + 1), ',');
  const double first = parse_number(parts.front(), "--schedule");
  try {
    if (kind == "geometric") {
      std::size_t l = sweeps, N = grid;
      for (std::size_t k = 1; k < parts.size(); ++k) {
        const auto eq = parts[k].find('=');
        if (eq == std::string::npos) throw ConfigError("--schedule: expected key=value in '" + parts[k] + "'");
        const auto key = parts[k].substr(0, eq);
        const auto val = parse_count(parts[k].substr(eq + 1), "--schedule " + key);
        if (key == "l") l = val;
        else if (key == "N") N = val;
        else throw ConfigError("--schedule: unknown key '" + key + "'");
      }
      return TemperatureSchedule::geometric(first, l, N);
    }
    if (parts.size() != 1) throw ConfigError("--schedule '" + spec + "': unexpected extra fields");
    if (kind == "adaptive") return TemperatureSchedule::adaptive(first);
    if (kind == "constant") return TemperatureSchedule::constant(first);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("--schedule: ") + e.what());
  }
  throw ConfigError("--schedule: unknown kind '" + kind + "'");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Gibbs-OT: annealed Gibbs sampling for optimal transport"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "solve one OT problem");
  add_problem_flags(solve, o);
  solve->add_option("--method", o.method, "gibbs | sinkhorn | exact");
  solve->add_option("--iters", o.iters, "sweeps (gibbs) or iterations (sinkhorn)");
  solve->add_option("--schedule", o.schedule, "geometric:T0[,l=L][,N=N] | adaptive:eta | constant:T");
  solve->add_option("--epsilon", o.epsilon, "Sinkhorn regularization");
  solve->add_option("--tau", o.tau, "mixing lag for constant schedules");
  solve->add_flag("--with-exact", o.with_exact, "also solve exactly and report the gap");
  solve->add_option("--checkpoint-out", o.checkpoint_out, "chain checkpoint path");

  auto* exp = app.add_subcommand("experiment", "budget sweep on a 1-D preset");
  add_problem_flags(exp, o);
  exp->add_option("--budgets", o.budgets, "comma separated sweep budgets");
  exp->add_option("--epsilon", o.epsilon, "Sinkhorn regularization (default 0.5/N)");

  auto* nmf = app.add_subcommand("nmf", "Wasserstein NMF on images");
  nmf->add_option("--images", o.images, "directory of PGM/CSV rasters");
  nmf->add_option("--synthetic", o.synthetic, "use COUNT synthetic two-blob images");
  nmf->add_option("--side", o.side, "synthetic image side");
  nmf->add_option("--k", o.k, "components");
  nmf->add_option("--gamma", o.gamma, "step size");
  nmf->add_option("--epochs", o.epochs, "epochs");
  nmf->add_option("--eta", o.eta, "initial temperature factor");
  nmf->add_option("--t0", o.t0, "initial temperature (default: derived from eta)");
  nmf->add_option("--tau", o.tau, "mixing lag");
  nmf->add_option("--max-sweeps", o.max_sweeps, "sweep cap per oracle call");
  nmf->add_option("--exact-every", o.exact_every, "exact objective every E epochs (0 = never)");
  nmf->add_flag("--batch", o.batch, "batch oracle calls per epoch");
  nmf->add_option("--seed", o.seed, "random seed");
  nmf->add_option("--out-dir", o.out_dir, "output directory");

  auto* an = app.add_subcommand("analyze", "drift and bound report from a checkpoint");
  add_problem_flags(an, o);
  an->add_option("--checkpoint", o.checkpoint, "checkpoint JSON");
  an->add_option("--schedule", o.schedule, "schedule for replay");
  an->add_option("--sweeps", o.replay, "sweeps to replay");
  an->add_option("--temperature", o.temperature, "temperature the checkpoint state was produced at (default: its schedule, else 0)");
  an->add_option("--k", o.bound_K, "deviation K");
  an->add_option("--epsilon", o.bound_eps, "failure probability epsilon");
  an->add_option("--gamma", o.bound_gamma, "gamma");
  an->add_option("--a", o.bound_a, "constant a_n");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(o, args, out);
    if (exp->parsed()) return cmd_experiment(o, args, out);
    if (nmf->parsed()) return cmd_nmf(o, args, out);
    return cmd_analyze(o, args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace gibbs_ot::cli
