#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <sstream>

#include "rnamf/adapter.hpp"
#include "rnamf/config.hpp"
#include "rnamf/error.hpp"
#include "rnamf/experiment.hpp"
#include "rnamf/io.hpp"
#include "rnamf/problems.hpp"
#include "rnamf/random.hpp"

namespace rnamf::cli {

namespace fs = std::filesystem;
using io::Json;

namespace {

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    io::write_atomic(path, content);
  }
}

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_run_config(path); }

std::string pick(const std::string& flag, const std::string& from_config) { return flag.empty() ? from_config : flag; }

std::string sibling(const std::string& path, const std::string& suffix) {
  fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::string num(double v) { return io::format_double(v); }

Json report_json(const RnaEmulator& emu) {
  Json j;
  j["kernel"] = to_string(emu.kind());
  j["levels"] = emu.levels();
  j["dataset_fingerprint"] = io::fingerprint(emu.dataset());
  Json lv = Json::array();
  double total = 0.0;
  for (int l = 1; l <= emu.levels(); ++l) {
    const LevelModel& m = emu.level_model(l);
    const Eigen::VectorXd s = m.scales.packed();
    lv.push_back({{"level", l},
                  {"n", m.n()},
                  {"neg_log_likelihood", m.nll},
                  {"log_likelihood", -m.nll},
                  {"alpha", m.alpha},
                  {"tau_sq", m.tau_sq},
                  {"jitter", m.jitter},
                  {"scales", std::vector<double>(s.data(), s.data() + s.size())}});
    total += m.nll;
  }
  j["level_models"] = lv;
  j["total_neg_log_likelihood"] = total;
  return j;
}

Eigen::MatrixXd grid_points(const Box& box, int n) {
  if (n < 1) throw ArgumentError("--grid must be >= 1");
  const Eigen::Index d = box.dim();
  double total = 1.0;
  for (Eigen::Index k = 0; k < d; ++k) total *= n;
  if (total > 1e6) throw ArgumentError("grid would have more than 1e6 points");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(total), d);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    Eigen::Index rest = i;
    for (Eigen::Index k = d - 1; k >= 0; --k) {
      const Eigen::Index idx = rest % n;
      rest /= n;
      const double t = n == 1 ? 0.5 : static_cast<double>(idx) / (n - 1);
      x(i, k) = box.lower[k] + t * (box.upper[k] - box.lower[k]);
    }
  }
  return x;
}

std::string trace_csv(const AlTrace& trace, int dim, int levels) {
  std::ostringstream os;
  os << "step,strategy,level";
  for (int k = 1; k <= dim; ++k) os << ",x_" << k;
  for (int l = 1; l <= levels; ++l) os << ",y_" << l;
  os << ",criterion,accrued_cost,imputed,rmse,crps\n";
  for (const AlRecord& r : trace.records) {
    os << r.step << ',' << to_string(r.strategy) << ',' << r.level;
    for (int k = 0; k < dim; ++k) os << ',' << num(r.location[k]);
    for (int l = 0; l < levels; ++l) {
      os << ',';
      if (l < static_cast<int>(r.outputs.size())) os << num(r.outputs[static_cast<std::size_t>(l)]);
    }
    os << ',' << num(r.criterion_value) << ',' << num(r.accrued_cost) << ',' << (r.imputed ? 1 : 0) << ',';
    if (r.rmse) os << num(*r.rmse);
    os << ',';
    if (r.crps) os << num(*r.crps);
    os << '\n';
  }
  return os.str();
}

SelectOptions select_options(const RunConfig& cfg) {
  SelectOptions s;
  s.acquisition = cfg.acquisition;
  s.alc = cfg.alc;
  s.ald = cfg.ald;
  return s;
}

}  // namespace

Eigen::MatrixXd read_points(const std::string& path, int dim) {
  const std::string text = io::read_file(path);
  std::vector<std::vector<double>> rows;
  if (fs::path(path).extension() == ".json") {
    const Json j = io::parse_json(text, path);
    if (!j.is_array()) throw ParseError(path + ": expected an array of points");
    for (std::size_t i = 0; i < j.size(); ++i) {
      const Json& row = j[i];
      if (row.is_number() && dim == 1) {
        rows.push_back({row.get<double>()});
        continue;
      }
      if (!row.is_array()) throw ParseError(path + "[" + std::to_string(i) + "]: expected an array of numbers");
      std::vector<double> r;
      for (const auto& v : row) {
        if (!v.is_number()) throw ParseError(path + "[" + std::to_string(i) + "]: expected numbers");
        r.push_back(v.get<double>());
      }
      rows.push_back(r);
    }
  } else {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      std::vector<double> r;
      std::istringstream cells(line);
      std::string cell;
      bool numeric = true;
      while (std::getline(cells, cell, ',')) {
        try {
          std::size_t used = 0;
          r.push_back(std::stod(cell, &used));
          if (cell.find_first_not_of(" \t", used) != std::string::npos) numeric = false;
        } catch (const std::exception&) {
          numeric = false;
        }
      }
      if (!numeric) {
        if (rows.empty() && lineno == 1) continue;  // header
        throw ParseError(path + ":" + std::to_string(lineno) + ": non-numeric value");
      }
      rows.push_back(r);
    }
  }
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != dim)
      throw ShapeError(path + ": point " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                       " coordinates, expected " + std::to_string(dim));
    for (int k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<std::size_t>(k)];
  }
  return x;
}

int cmd_design(const DesignArgs& a) {
  std::vector<Eigen::Index> sizes(a.sizes.begin(), a.sizes.end());
  if (!a.problem.empty()) {
    SyntheticProblem p;
    try {
      p = problem_by_name(a.problem);
    } catch (const Error& e) {
      throw ArgumentError(e.what());
    }
    if (sizes.empty()) sizes = p.default_sizes;
    if (static_cast<int>(sizes.size()) != p.levels)
      throw ArgumentError("--sizes needs " + std::to_string(p.levels) + " values for " + p.name);
    const std::vector<double> costs = a.costs.empty() ? p.default_costs : a.costs;
    const MultiFidelityDataset data = make_dataset(p, nested_design(sizes, p.dim, a.seed), costs);
    data.validate();
    emit(a.output, io::dataset_to_json(data).dump(2) + "\n");
    return 0;
  }
  if (a.dim < 1) throw ArgumentError("design needs --problem or --dim");
  if (sizes.empty()) throw ArgumentError("design needs --sizes");
  const NestedDesign d = nested_design(sizes, a.dim, a.seed);
  emit(a.output, io::design_to_json(d).dump(2) + "\n");
  return 0;
}

int cmd_validate(const std::string& path) {
  const MultiFidelityDataset data = io::load_dataset(path);
  Json j;
  j["valid"] = true;
  j["dim"] = data.dim;
  j["levels"] = data.levels();
  std::vector<Eigen::Index> sizes;
  for (int l = 1; l <= data.levels(); ++l) sizes.push_back(data.size(l));
  j["sizes"] = sizes;
  j["costs"] = data.costs;
  j["fingerprint"] = io::fingerprint(data);
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_fit(const FitArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  const MultiFidelityDataset data = io::load_dataset(a.dataset);
  KernelKind kind = cfg.kernel;
  if (a.kernel) {
    try {
      kind = parse_kernel_kind(*a.kernel);
    } catch (const Error& e) {
      throw ArgumentError(e.what());
    }
  }
  FitOptions fit = cfg.fit;
  fit.rng_seed = a.seed.value_or(cfg.seed);
  const std::string out = pick(a.output, cfg.outputs.emulator);
  if (out.empty()) throw ArgumentError("fit needs --output (or outputs.emulator in the config)");
  const RnaEmulator emu = RnaEmulator::fit(data, kind, fit);
  Json j = io::emulator_to_json(emu);
  j["dataset_path"] = fs::absolute(a.dataset).lexically_normal().string();
  io::write_atomic(out, j.dump(2) + "\n");
  emit(pick(a.report, cfg.outputs.report), report_json(emu).dump(2) + "\n");
  return 0;
}

int cmd_predict(const PredictArgs& a) {
  const Json ej = io::parse_json(io::read_file(a.emulator), a.emulator);
  std::string dataset = a.dataset;
  if (dataset.empty()) {
    if (!ej.is_object() || !ej.contains("dataset_path") || !ej["dataset_path"].is_string())
      throw ArgumentError("emulator file has no dataset_path; pass --dataset");
    dataset = ej["dataset_path"].get<std::string>();
  }
  const MultiFidelityDataset data = io::load_dataset(dataset);
  const RnaEmulator emu = io::emulator_from_json(ej, data);
  if (a.points.empty() == (a.grid == 0)) throw ArgumentError("predict needs exactly one of --points or --grid");
  const Eigen::MatrixXd x =
      a.grid > 0 ? grid_points(data.bounds.value_or(emu.fitted_box()), a.grid) : read_points(a.points, data.dim);
  const int L = emu.levels();
  const bool decompose = L <= 3;
  std::ostringstream os;
  for (int k = 1; k <= data.dim; ++k) os << "x_" << k << ',';
  os << "mean,var";
  if (decompose)
    for (int l = 1; l <= L; ++l) os << ",V_" << l;
  os << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Eigen::VectorXd xi = x.row(i).transpose();
    const PosteriorMoments pm = emu.predict(xi, L);
    for (int k = 0; k < data.dim; ++k) os << num(xi[k]) << ',';
    os << num(pm.mean) << ',' << num(pm.var);
    if (decompose) {
      const Decomposition dec = emu.variance_decomposition(xi, a.mc_samples, derive_seed(0, static_cast<std::uint64_t>(i)));
      for (double v : dec.v) os << ',' << num(v);
    }
    os << '\n';
  }
  emit(a.output, os.str());
  return 0;
}

int cmd_al(const AlArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  const MultiFidelityDataset data = io::load_dataset(a.dataset);
  if (a.builtin.empty() == a.adapters.empty()) throw ArgumentError("al needs exactly one of --builtin or --adapter");
  if (a.adapters.size() > 1 && static_cast<int>(a.adapters.size()) != data.levels())
    throw ArgumentError("give one --adapter for all levels or one per level (" + std::to_string(data.levels()) + ")");

  const Strategy strategy = a.strategy ? parse_strategy(*a.strategy) : cfg.strategy;
  const double budget = a.budget.value_or(cfg.budget);
  if (!(budget >= 0.0)) throw ArgumentError("budget must be >= 0");
  const std::vector<double> costs = cfg.costs.value_or(data.costs);
  if (static_cast<int>(costs.size()) != data.levels())
    throw ArgumentError("costs must list one value per level (" + std::to_string(data.levels()) + ")");

  const std::string out = pick(a.output, pick(cfg.outputs.dataset, sibling(a.dataset, ".al.json")));
  const std::string trace_path = pick(a.trace, pick(cfg.outputs.trace, sibling(out, ".trace.csv")));

  AlOptions opts;
  opts.fit = cfg.fit;
  opts.select = select_options(cfg);
  opts.seed = a.seed.value_or(cfg.seed);

  std::optional<TestOracle> oracle;
  Simulator sim;
  std::optional<CachedSimulator> cached;
  std::string cache_path;
  if (!a.builtin.empty()) {
    SyntheticProblem p;
    try {
      p = problem_by_name(a.builtin);
    } catch (const Error& e) {
      throw ArgumentError(e.what());
    }
    if (p.dim != data.dim || p.levels != data.levels())
      throw DatasetError("dataset shape (dim " + std::to_string(data.dim) + ", " + std::to_string(data.levels()) +
                         " levels) does not match builtin " + p.name);
    if (a.test_points > 0) {
      TestOracle o;
      o.points = uniform_points(p.bounds, a.test_points, derive_seed(opts.seed, 0x7e57));
      o.truth.resize(o.points.rows());
      for (Eigen::Index i = 0; i < o.points.rows(); ++i) o.truth[i] = p.evaluate(p.levels, o.points.row(i).transpose());
      oracle = o;
    }
    sim = [p](int level, const Eigen::VectorXd& x) { return p.evaluate(level, x); };
  } else {
    std::vector<AdapterSpec> specs;
    for (const auto& c : a.adapters) specs.push_back({c, cfg.adapter_timeout_s});
    cached.emplace(specs);
    cache_path = pick(a.cache, pick(cfg.outputs.cache, sibling(trace_path, ".cache.json")));
    cached->load(cache_path);
    sim = [&cached](int level, const Eigen::VectorXd& x) { return (*cached)(level, x); };
  }

  const AlTrace trace = al_loop(sim, data, strategy, CostModel(costs), budget, cfg.kernel, opts, oracle);
  if (cached) cached->save(cache_path);
  trace.dataset.validate();
  io::save_dataset(out, trace.dataset);
  io::write_atomic(trace_path, trace_csv(trace, data.dim, data.levels()));
  Json summary;
  summary["steps"] = trace.records.size();
  summary["accrued_cost"] = trace.records.empty() ? 0.0 : trace.records.back().accrued_cost;
  if (trace.initial_rmse) summary["initial_rmse"] = *trace.initial_rmse;
  if (!trace.records.empty() && trace.records.back().rmse) summary["final_rmse"] = *trace.records.back().rmse;
  if (cached) {
    summary["adapter_invocations"] = cached->invocations();
    summary["cache_hits"] = cached->hits();
  }
  summary["dataset"] = out;
  summary["trace"] = trace_path;
  std::cout << summary.dump() << "\n";
  if (trace.aborted) throw AdapterError(trace.error + " (partial trace written to " + trace_path + ")");
  return 0;
}

int cmd_benchmark(const BenchmarkArgs& a) {
  const RunConfig cfg = config_or_default(a.config);
  ExperimentConfig e;
  e.problem = pick(a.problem, cfg.benchmark.problem);
  if (e.problem.empty()) throw ArgumentError("benchmark needs a problem (--problem or benchmark.problem)");
  e.kind = cfg.kernel;
  e.sizes = cfg.benchmark.sizes;
  e.reps = a.reps.value_or(cfg.benchmark.reps);
  e.seed = cfg.seed;
  e.mode = parse_experiment_mode(cfg.benchmark.mode);
  e.strategy = cfg.strategy;
  e.budget = cfg.budget;
  e.costs = cfg.costs.value_or(std::vector<double>{});
  e.test_points = cfg.benchmark.test_points;
  e.baseline = cfg.benchmark.baseline;
  e.fit = cfg.fit;
  e.select = select_options(cfg);
  e.jobs = a.jobs.value_or(cfg.benchmark.jobs);

  const std::string results = pick(a.results, cfg.outputs.results);
  const std::string summary = pick(a.summary, cfg.outputs.summary);
  if (results.empty() || summary.empty())
    throw ArgumentError("benchmark needs --results and --summary (or outputs.results/outputs.summary)");

  const ExperimentResult r = run_experiment(e, [&](const ExperimentRow& row) {
    if (a.quiet) return;
    std::cerr << "rep " << row.rep << " " << row.method << (row.ok ? "" : " FAILED: " + row.error) << "\n";
  });
  io::write_atomic(results, rows_csv(r));
  io::write_atomic(summary, summary_json(r).dump(2) + "\n");
  if (e.mode == ExperimentMode::ActiveLearning) {
    const std::string curves = pick(a.curves, pick(cfg.outputs.curves, sibling(results, ".curves.csv")));
    io::write_atomic(curves, curves_csv(r));
    if (cfg.benchmark.svg) {
      const std::string svg = pick(a.svg, pick(cfg.outputs.svg, sibling(results, ".svg")));
      io::write_atomic(svg, curves_svg(r, "rmse"));
    }
  }
  return 0;
}

}  // namespace rnamf::cli
