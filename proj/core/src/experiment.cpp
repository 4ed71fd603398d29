#include "rnamf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <sstream>
#include <thread>

#include "rnamf/error.hpp"
#include "rnamf/metrics.hpp"
#include "rnamf/random.hpp"

namespace rnamf {

ExperimentMode parse_experiment_mode(const std::string& s) {
  if (s == "emulation") return ExperimentMode::Emulation;
  if (s == "al") return ExperimentMode::ActiveLearning;
  throw ArgumentError("unknown experiment mode '" + s + "' (expected emulation or al)");
}

std::string to_string(ExperimentMode mode) { return mode == ExperimentMode::Emulation ? "emulation" : "al"; }

RepSeeds rep_seeds(std::uint64_t seed, int rep) {
  const std::uint64_t r = derive_seed(seed, static_cast<std::uint64_t>(rep));
  return {derive_seed(r, 1), derive_seed(r, 2), derive_seed(r, 3), derive_seed(r, 4)};
}

Eigen::MatrixXd uniform_points(const Box& box, Eigen::Index n, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, box.dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < box.dim(); ++k) x(i, k) = rng.uniform(box.lower[k], box.upper[k]);
  }
  return x;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct RepOutput {
  std::vector<ExperimentRow> rows;
  std::vector<CurvePoint> curves;
};

void score(const RnaEmulator& emu, const TestOracle& oracle, ExperimentRow& row) {
  std::vector<PosteriorMoments> m;
  m.reserve(static_cast<std::size_t>(oracle.points.rows()));
  Eigen::VectorXd mean(oracle.points.rows());
  for (Eigen::Index i = 0; i < oracle.points.rows(); ++i) {
    m.push_back(emu.predict(oracle.points.row(i).transpose(), emu.levels()));
    mean[i] = m.back().mean;
  }
  row.rmse = rmse(mean, oracle.truth);
  row.crps = crps(m, oracle.truth);
}

template <class F>
ExperimentRow guarded(int rep, const std::string& method, F&& body) {
  ExperimentRow row;
  row.rep = rep;
  row.method = method;
  const auto t0 = Clock::now();
  try {
    body(row);
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = e.what();
  }
  row.seconds = seconds_since(t0);
  return row;
}

RepOutput run_rep(const ExperimentConfig& c, const SyntheticProblem& problem, int rep) {
  RepOutput out;
  const RepSeeds seeds = rep_seeds(c.seed, rep);
  const std::vector<Eigen::Index> sizes = c.sizes.empty() ? problem.default_sizes : c.sizes;
  const std::vector<double> costs = c.costs.empty() ? problem.default_costs : c.costs;

  std::optional<MultiFidelityDataset> data;
  TestOracle oracle;
  const ExperimentRow setup = guarded(rep, "setup", [&](ExperimentRow&) {
    data = make_dataset(problem, nested_design(sizes, problem.dim, seeds.design), costs);
    oracle.points = uniform_points(problem.bounds, c.test_points, seeds.test);
    oracle.truth.resize(oracle.points.rows());
    for (Eigen::Index i = 0; i < oracle.points.rows(); ++i)
      oracle.truth[i] = problem.evaluate(problem.levels, oracle.points.row(i).transpose());
  });
  if (!setup.ok) {
    ExperimentRow failed = setup;
    failed.method = c.mode == ExperimentMode::Emulation ? "rna" : "al_" + to_string(c.strategy);
    out.rows.push_back(failed);
    return out;
  }

  FitOptions fit = c.fit;
  fit.rng_seed = seeds.fit;
  if (c.mode == ExperimentMode::Emulation) {
    out.rows.push_back(guarded(rep, "rna", [&](ExperimentRow& row) {
      score(RnaEmulator::fit(*data, c.kind, fit), oracle, row);
    }));
  } else {
    out.rows.push_back(guarded(rep, "al_" + to_string(c.strategy), [&](ExperimentRow& row) {
      AlOptions opts;
      opts.fit = fit;
      opts.select = c.select;
      opts.seed = seeds.loop;
      const Simulator sim = [&](int level, const Eigen::VectorXd& x) { return problem.evaluate(level, x); };
      const AlTrace trace = al_loop(sim, *data, c.strategy, CostModel(costs), c.budget, c.kind, opts, oracle);
      if (!trace.initial_rmse) throw Error(trace.error.empty() ? "initial fit failed" : trace.error);
      out.curves.push_back({rep, 0, 0, 0.0, *trace.initial_rmse, trace.initial_crps.value_or(0.0)});
      row.initial_rmse = trace.initial_rmse;
      row.rmse = *trace.initial_rmse;
      row.crps = trace.initial_crps.value_or(0.0);
      row.accrued_cost = 0.0;
      for (const AlRecord& r : trace.records) {
        if (!r.rmse) continue;
        out.curves.push_back({rep, r.step, r.level, r.accrued_cost, *r.rmse, r.crps.value_or(0.0)});
        row.rmse = *r.rmse;
        row.crps = r.crps.value_or(0.0);
        row.accrued_cost = r.accrued_cost;
      }
      row.steps = static_cast<int>(trace.records.size());
      if (trace.aborted) {
        row.ok = false;
        row.error = trace.error;
      }
    }));
  }

  if (c.baseline) {
    out.rows.push_back(guarded(rep, "hf_gp", [&](ExperimentRow& row) {
      MultiFidelityDataset hf;
      hf.dim = data->dim;
      hf.bounds = data->bounds;
      hf.designs = {data->designs.back()};
      hf.outputs = {data->outputs.back()};
      hf.costs = {data->costs.back()};
      score(RnaEmulator::fit(hf, c.kind, fit), oracle, row);
    }));
  }
  return out;
}

std::string csv_number(double v) { return std::isfinite(v) ? io::format_double(v) : std::string(); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch == '\n' ? ' ' : ch;
  }
  return q + "\"";
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::function<void(const ExperimentRow&)>& on_row) {
  if (config.reps < 1) throw ArgumentError("reps must be >= 1");
  if (config.jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (config.test_points < 1) throw ArgumentError("test_points must be >= 1");
  if (config.mode == ExperimentMode::ActiveLearning && !(config.budget >= 0.0))
    throw ArgumentError("budget must be >= 0");
  SyntheticProblem problem;
  try {
    problem = problem_by_name(config.problem);
  } catch (const Error& e) {
    throw ArgumentError(e.what());
  }
  if (!config.sizes.empty() && static_cast<int>(config.sizes.size()) != problem.levels)
    throw ArgumentError("sizes must list one count per level (" + std::to_string(problem.levels) + ")");
  if (!config.costs.empty()) {
    if (static_cast<int>(config.costs.size()) != problem.levels)
      throw ArgumentError("costs must list one value per level (" + std::to_string(problem.levels) + ")");
    CostModel check(config.costs);
  }

  std::vector<RepOutput> outputs(static_cast<std::size_t>(config.reps));
  std::mutex report;
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int rep = next++; rep < config.reps; rep = next++) {
      outputs[static_cast<std::size_t>(rep)] = run_rep(config, problem, rep);
      if (on_row) {
        std::lock_guard lock(report);
        for (const auto& row : outputs[static_cast<std::size_t>(rep)].rows) on_row(row);
      }
    }
  };
  const int jobs = std::min(config.jobs, config.reps);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.config = config;
  for (auto& o : outputs) {
    result.rows.insert(result.rows.end(), o.rows.begin(), o.rows.end());
    result.curves.insert(result.curves.end(), o.curves.begin(), o.curves.end());
  }
  return result;
}

Quantiles quantiles(std::vector<double> v) {
  if (v.empty()) throw ArgumentError("quantiles of an empty sample");
  std::sort(v.begin(), v.end());
  auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {v.front(), at(0.25), at(0.5), at(0.75), v.back()};
}

std::string rows_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "rep,method,ok,rmse,crps,seconds,initial_rmse,accrued_cost,steps,error\n";
  for (const auto& r : result.rows) {
    os << r.rep << ',' << r.method << ',' << (r.ok ? 1 : 0) << ',';
    const bool scored = r.ok || r.initial_rmse.has_value();
    os << (scored ? csv_number(r.rmse) : "") << ',' << (scored ? csv_number(r.crps) : "") << ','
       << csv_number(r.seconds) << ',';
    os << (r.initial_rmse ? csv_number(*r.initial_rmse) : "") << ',';
    os << (r.accrued_cost ? csv_number(*r.accrued_cost) : "") << ',';
    os << (r.steps ? std::to_string(*r.steps) : "") << ',' << csv_field(r.error) << '\n';
  }
  return os.str();
}

std::string curves_csv(const ExperimentResult& result) {
  std::ostringstream os;
  os << "rep,step,level,cost,rmse,crps\n";
  for (const auto& p : result.curves) {
    os << p.rep << ',' << p.step << ',' << p.level << ',' << csv_number(p.cost) << ',' << csv_number(p.rmse) << ','
       << csv_number(p.crps) << '\n';
  }
  return os.str();
}

io::Json summary_json(const ExperimentResult& result) {
  const ExperimentConfig& c = result.config;
  io::Json j;
  j["problem"] = c.problem;
  j["kernel"] = to_string(c.kind);
  j["mode"] = to_string(c.mode);
  j["reps"] = c.reps;
  j["seed"] = c.seed;
  j["sizes"] = c.sizes;
  j["test_points"] = c.test_points;
  if (c.mode == ExperimentMode::ActiveLearning) {
    j["strategy"] = to_string(c.strategy);
    j["budget"] = c.budget;
  }
  if (!c.costs.empty()) j["costs"] = c.costs;
  std::vector<std::string> methods;
  for (const auto& r : result.rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  io::Json m = io::Json::object();
  for (const auto& name : methods) {
    std::vector<double> rm, cr, secs, init, cost;
    int failed = 0;
    for (const auto& r : result.rows) {
      if (r.method != name) continue;
      if (!r.ok) {
        ++failed;
        continue;
      }
      rm.push_back(r.rmse);
      cr.push_back(r.crps);
      secs.push_back(r.seconds);
      if (r.initial_rmse) init.push_back(*r.initial_rmse);
      if (r.accrued_cost) cost.push_back(*r.accrued_cost);
    }
    io::Json e;
    e["completed"] = rm.size();
    e["failed"] = failed;
    auto q = [](const std::vector<double>& v) {
      const Quantiles s = quantiles(v);
      return io::Json{{"min", s.min}, {"q25", s.q25}, {"median", s.median}, {"q75", s.q75}, {"max", s.max}};
    };
    if (!rm.empty()) {
      e["rmse"] = q(rm);
      e["crps"] = q(cr);
      e["seconds"] = q(secs);
    }
    if (!init.empty()) e["initial_rmse"] = q(init);
    if (!cost.empty()) e["accrued_cost"] = q(cost);
    m[name] = e;
  }
  j["methods"] = m;
  return j;
}

std::string curves_svg(const ExperimentResult& result, const std::string& metric) {
  if (metric != "rmse" && metric != "crps") throw ArgumentError("metric must be rmse or crps");
  std::vector<std::vector<std::pair<double, double>>> series;
  for (const auto& p : result.curves) {
    if (series.size() <= static_cast<std::size_t>(p.rep)) series.resize(static_cast<std::size_t>(p.rep) + 1);
    series[static_cast<std::size_t>(p.rep)].push_back({p.cost, metric == "rmse" ? p.rmse : p.crps});
  }
  std::erase_if(series, [](const auto& s) { return s.empty(); });

  std::vector<double> grid;
  for (const auto& s : series)
    for (const auto& [cost, v] : s) grid.push_back(cost);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  std::vector<double> med, lo, hi;
  for (double g : grid) {
    std::vector<double> vals;
    for (const auto& s : series) {
      const auto it = std::upper_bound(s.begin(), s.end(), g, [](double c, const auto& p) { return c < p.first; });
      if (it != s.begin()) vals.push_back(std::prev(it)->second);
    }
    const Quantiles q = quantiles(vals);
    med.push_back(q.median);
    lo.push_back(q.min);
    hi.push_back(q.max);
  }

  const double w = 640, h = 400, ml = 70, mr = 20, mt = 30, mb = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string title = result.config.problem + " " + to_string(result.config.strategy) + " (" +
                            std::to_string(series.size()) + " reps)";
  os << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << title << "</text>\n";
  if (grid.empty()) {
    os << "</svg>\n";
    return os.str();
  }
  const double xmax = std::max(grid.back(), 1e-12);
  double ymin = *std::min_element(lo.begin(), lo.end()), ymax = *std::max_element(hi.begin(), hi.end());
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  auto px = [&](double c) { return ml + (w - ml - mr) * c / xmax; };
  auto py = [&](double v) { return h - mb - (h - mt - mb) * (v - ymin) / (ymax - ymin); };
  auto steps = [&](const std::vector<double>& v, bool reverse) {
    std::ostringstream s;
    const std::size_t n = grid.size();
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t i = reverse ? n - 1 - k : k;
      const double x0 = px(grid[i]);
      const double x1 = px(i + 1 < n ? grid[i + 1] : xmax);
      if (reverse) s << x1 << ',' << py(v[i]) << ' ' << x0 << ',' << py(v[i]) << ' ';
      else s << x0 << ',' << py(v[i]) << ' ' << x1 << ',' << py(v[i]) << ' ';
    }
    return s.str();
  };
  os << "<polygon fill=\"#9ecae1\" fill-opacity=\"0.5\" stroke=\"none\" points=\"" << steps(hi, false) << steps(lo, true)
     << "\"/>\n";
  os << "<polyline fill=\"none\" stroke=\"#08519c\" stroke-width=\"2\" points=\"" << steps(med, false) << "\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\"" << h - mb
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    os << "<text x=\"" << x << "\" y=\"" << y << "\" text-anchor=\"" << anchor
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << text << "</text>\n";
  };
  label(ml, h - mb + 15, "0", "middle");
  label(w - mr, h - mb + 15, io::format_double(xmax), "middle");
  label(ml - 5, h - mb, io::format_double(ymin), "end");
  label(ml - 5, mt + 4, io::format_double(ymax), "end");
  label((ml + w - mr) / 2, h - 12, "accrued cost", "middle");
  label(15, (mt + h - mb) / 2, metric, "start");
  os << "</svg>\n";
  return os.str();
}

}  // namespace rnamf
