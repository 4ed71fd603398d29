#include "rnamf/config.hpp"

#include <functional>
#include <map>

#include "rnamf/error.hpp"

namespace rnamf {

namespace {

using io::Json;
using Handler = std::function<void(const Json&, const std::string&)>;

void walk(const Json& j, const std::string& where, const std::map<std::string, Handler>& handlers) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ParseError(where + ": unknown key '" + key + "'");
    it->second(value, where + "." + key);
  }
}

double as_number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

int as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<int>();
}

std::uint64_t as_seed(const Json& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
    throw ParseError(where + ": expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

bool as_bool(const Json& j, const std::string& where) {
  if (!j.is_boolean()) throw ParseError(where + ": expected true or false");
  return j.get<bool>();
}

std::string as_string(const Json& j, const std::string& where) {
  if (!j.is_string()) throw ParseError(where + ": expected a string");
  return j.get<std::string>();
}

template <class F>
auto converted(F&& f, const std::string& where) {
  try {
    return f();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace

RunConfig parse_run_config(const Json& j) {
  RunConfig c;
  auto positive_int = [](const Json& v, const std::string& w) {
    const int n = as_int(v, w);
    if (n < 1) throw ParseError(w + ": must be >= 1");
    return n;
  };
  walk(j, "config",
       {
           {"kernel", [&](const Json& v, const std::string& w) {
              c.kernel = converted([&] { return parse_kernel_kind(as_string(v, w)); }, w);
            }},
           {"seed", [&](const Json& v, const std::string& w) { c.seed = as_seed(v, w); }},
           {"fit", [&](const Json& v, const std::string& w) {
              walk(v, w, {
                             {"restarts", [&](const Json& x, const std::string& p) { c.fit.restarts = positive_int(x, p); }},
                             {"max_iters", [&](const Json& x, const std::string& p) { c.fit.max_iters = positive_int(x, p); }},
                             {"grad_tol", [&](const Json& x, const std::string& p) { c.fit.grad_tol = as_number(x, p); }},
                             {"jitter", [&](const Json& x, const std::string& p) { c.fit.jitter = as_number(x, p); }},
                         });
            }},
           {"strategy", [&](const Json& v, const std::string& w) {
              c.strategy = converted([&] { return parse_strategy(as_string(v, w)); }, w);
            }},
           {"budget", [&](const Json& v, const std::string& w) {
              c.budget = as_number(v, w);
              if (!(c.budget >= 0.0)) throw ParseError(w + ": must be >= 0");
            }},
           {"costs", [&](const Json& v, const std::string& w) {
              if (!v.is_array()) throw ParseError(w + ": expected an array of numbers");
              std::vector<double> costs;
              for (std::size_t i = 0; i < v.size(); ++i) costs.push_back(as_number(v[i], w + "[" + std::to_string(i) + "]"));
              converted([&] { return CostModel(costs).levels(); }, w);
              c.costs = costs;
            }},
           {"alc", [&](const Json& v, const std::string& w) {
              walk(v, w, {
                             {"integration_points", [&](const Json& x, const std::string& p) { c.alc.integration_points = positive_int(x, p); }},
                             {"imputations", [&](const Json& x, const std::string& p) { c.alc.imputations = positive_int(x, p); }},
                         });
            }},
           {"ald", [&](const Json& v, const std::string& w) {
              walk(v, w, {{"mc_samples", [&](const Json& x, const std::string& p) { c.ald.mc_samples = positive_int(x, p); }}});
            }},
           {"acquisition", [&](const Json& v, const std::string& w) {
              walk(v, w, {
                             {"n_starts", [&](const Json& x, const std::string& p) { c.acquisition.n_starts = as_int(x, p); }},
                             {"max_iters", [&](const Json& x, const std::string& p) { c.acquisition.max_iters = positive_int(x, p); }},
                             {"grid_points", [&](const Json& x, const std::string& p) { c.acquisition.grid_points = as_int(x, p); }},
                             {"grid_fallback", [&](const Json& x, const std::string& p) { c.acquisition.grid_fallback = as_bool(x, p); }},
                             {"perturb_scale", [&](const Json& x, const std::string& p) { c.acquisition.perturb_scale = as_number(x, p); }},
                         });
            }},
           {"adapter", [&](const Json& v, const std::string& w) {
              walk(v, w, {{"timeout_s", [&](const Json& x, const std::string& p) {
                             c.adapter_timeout_s = as_number(x, p);
                             if (!(c.adapter_timeout_s > 0.0)) throw ParseError(p + ": must be positive");
                           }}});
            }},
           {"benchmark", [&](const Json& v, const std::string& w) {
              auto& b = c.benchmark;
              walk(v, w, {
                             {"problem", [&](const Json& x, const std::string& p) { b.problem = as_string(x, p); }},
                             {"sizes", [&](const Json& x, const std::string& p) {
                                if (!x.is_array()) throw ParseError(p + ": expected an array of integers");
                                b.sizes.clear();
                                for (std::size_t i = 0; i < x.size(); ++i) b.sizes.push_back(positive_int(x[i], p));
                              }},
                             {"reps", [&](const Json& x, const std::string& p) { b.reps = as_int(x, p); }},
                             {"mode", [&](const Json& x, const std::string& p) {
                                b.mode = as_string(x, p);
                                if (b.mode != "emulation" && b.mode != "al") throw ParseError(p + ": expected 'emulation' or 'al'");
                              }},
                             {"test_points", [&](const Json& x, const std::string& p) { b.test_points = positive_int(x, p); }},
                             {"baseline", [&](const Json& x, const std::string& p) { b.baseline = as_bool(x, p); }},
                             {"svg", [&](const Json& x, const std::string& p) { b.svg = as_bool(x, p); }},
                             {"jobs", [&](const Json& x, const std::string& p) { b.jobs = positive_int(x, p); }},
                         });
            }},
           {"outputs", [&](const Json& v, const std::string& w) {
              auto& o = c.outputs;
              std::map<std::string, Handler> h;
              for (auto [name, slot] : std::initializer_list<std::pair<const char*, std::string*>>{
                       {"emulator", &o.emulator}, {"report", &o.report}, {"trace", &o.trace},
                       {"dataset", &o.dataset}, {"cache", &o.cache}, {"results", &o.results},
                       {"summary", &o.summary}, {"curves", &o.curves}, {"svg", &o.svg}}) {
                h[name] = [slot](const Json& x, const std::string& p) { *slot = as_string(x, p); };
              }
              walk(v, w, h);
            }},
       });
  return c;
}

RunConfig load_run_config(const std::string& path) { return parse_run_config(io::parse_json(io::read_file(path), path)); }

io::Json run_config_to_json(const RunConfig& c) {
  Json j;
  j["kernel"] = to_string(c.kernel);
  j["seed"] = c.seed;
  j["fit"] = {{"restarts", c.fit.restarts}, {"max_iters", c.fit.max_iters}, {"grad_tol", c.fit.grad_tol}, {"jitter", c.fit.jitter}};
  j["strategy"] = to_string(c.strategy);
  j["budget"] = c.budget;
  if (c.costs) j["costs"] = *c.costs;
  j["alc"] = {{"integration_points", c.alc.integration_points}, {"imputations", c.alc.imputations}};
  j["ald"] = {{"mc_samples", c.ald.mc_samples}};
  j["acquisition"] = {{"n_starts", c.acquisition.n_starts},
                      {"max_iters", c.acquisition.max_iters},
                      {"grid_points", c.acquisition.grid_points},
                      {"grid_fallback", c.acquisition.grid_fallback},
                      {"perturb_scale", c.acquisition.perturb_scale}};
  j["adapter"] = {{"timeout_s", c.adapter_timeout_s}};
  const auto& b = c.benchmark;
  j["benchmark"] = {{"problem", b.problem}, {"sizes", b.sizes},         {"reps", b.reps}, {"mode", b.mode},
                    {"test_points", b.test_points}, {"baseline", b.baseline}, {"svg", b.svg},   {"jobs", b.jobs}};
  const auto& o = c.outputs;
  j["outputs"] = {{"emulator", o.emulator}, {"report", o.report},   {"trace", o.trace},
                  {"dataset", o.dataset},   {"cache", o.cache},     {"results", o.results},
                  {"summary", o.summary},   {"curves", o.curves},   {"svg", o.svg}};
  return j;
}

}  // namespace rnamf
