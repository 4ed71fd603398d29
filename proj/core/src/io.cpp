#include "rnamf/io.hpp"

#include <unistd.h>

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rnamf/error.hpp"

namespace rnamf::io {

namespace {

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing key '" + key + "'");
  return *it;
}

double number(const Json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError(where + ": expected a number");
  return j.get<double>();
}

int integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ParseError(where + ": expected an integer");
  return j.get<int>();
}

std::vector<double> numbers(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
  return rows;
}

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ParseError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

Json parse_json(const std::string& text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(what + ": invalid JSON (" + e.what() + ")");
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error("write failed for '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into place at '" + path.string() + "'");
  }
}

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

Json dataset_to_json(const MultiFidelityDataset& data) {
  Json j;
  j["dim"] = data.dim;
  j["levels"] = data.levels();
  if (data.bounds) {
    Json b = Json::array();
    for (Eigen::Index k = 0; k < data.bounds->dim(); ++k) b.push_back({data.bounds->lower[k], data.bounds->upper[k]});
    j["bounds"] = b;
  }
  j["costs"] = data.costs;
  Json designs = Json::array(), outputs = Json::array();
  for (int l = 1; l <= data.levels(); ++l) {
    designs.push_back(matrix_json(data.designs[static_cast<std::size_t>(l - 1)]));
    outputs.push_back(vector_json(data.outputs[static_cast<std::size_t>(l - 1)]));
  }
  j["designs"] = designs;
  j["outputs"] = outputs;
  return j;
}

MultiFidelityDataset dataset_from_json(const Json& j) {
  const std::string where = "dataset";
  if (!j.is_object()) throw ParseError("dataset: expected a JSON object");
  check_keys(j, {"dim", "levels", "bounds", "costs", "designs", "outputs"}, where);
  MultiFidelityDataset data;
  data.dim = integer(field(j, "dim", where), "dataset.dim");
  const int levels = integer(field(j, "levels", where), "dataset.levels");
  data.costs = numbers(field(j, "costs", where), "dataset.costs");
  const Json& designs = field(j, "designs", where);
  const Json& outputs = field(j, "outputs", where);
  if (!designs.is_array() || !outputs.is_array()) throw ParseError("dataset: designs and outputs must be arrays");
  if (static_cast<int>(designs.size()) != levels || static_cast<int>(outputs.size()) != levels)
    throw DatasetError("dataset: 'levels' does not match the number of designs/outputs");
  for (int l = 0; l < levels; ++l) {
    const std::string w = "dataset.designs[" + std::to_string(l) + "]";
    const Json& rows = designs[static_cast<std::size_t>(l)];
    if (!rows.is_array()) throw ParseError(w + ": expected an array of points");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), data.dim);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto pt = numbers(rows[i], w + "[" + std::to_string(i) + "]");
      if (static_cast<int>(pt.size()) != data.dim)
        throw DatasetError(w + "[" + std::to_string(i) + "]: point has " + std::to_string(pt.size()) +
                           " coordinates, expected " + std::to_string(data.dim));
      x.row(static_cast<Eigen::Index>(i)) = to_eigen(pt).transpose();
    }
    data.designs.push_back(std::move(x));
    data.outputs.push_back(to_eigen(numbers(outputs[static_cast<std::size_t>(l)], "dataset.outputs[" + std::to_string(l) + "]")));
  }
  if (const auto it = j.find("bounds"); it != j.end() && !it->is_null()) {
    if (!it->is_array() || static_cast<int>(it->size()) != data.dim) throw ParseError("dataset.bounds: expected dim [lo, hi] pairs");
    Box b{Eigen::VectorXd(data.dim), Eigen::VectorXd(data.dim)};
    for (int k = 0; k < data.dim; ++k) {
      const auto pair = numbers((*it)[static_cast<std::size_t>(k)], "dataset.bounds[" + std::to_string(k) + "]");
      if (pair.size() != 2) throw ParseError("dataset.bounds: expected [lo, hi] pairs");
      b.lower[k] = pair[0];
      b.upper[k] = pair[1];
    }
    data.bounds = b;
  }
  data.validate();
  return data;
}

MultiFidelityDataset load_dataset(const std::filesystem::path& path) {
  return dataset_from_json(parse_json(read_file(path), path.string()));
}

void save_dataset(const std::filesystem::path& path, const MultiFidelityDataset& data) {
  data.validate();
  write_atomic(path, dataset_to_json(data).dump(2) + "\n");
}

Json design_to_json(const NestedDesign& design) {
  Json j;
  j["dim"] = design.dim;
  j["sizes"] = design.sizes;
  Json designs = Json::array();
  for (const auto& x : design.designs) designs.push_back(matrix_json(x));
  j["designs"] = designs;
  return j;
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string fingerprint(const MultiFidelityDataset& data) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(fnv1a(dataset_to_json(data).dump())));
  return buf.data();
}

Json emulator_to_json(const RnaEmulator& emu) {
  Json j;
  j["format"] = "rnamf-emulator";
  j["version"] = 1;
  j["kernel"] = to_string(emu.kind());
  j["dim"] = emu.dim();
  j["levels"] = emu.levels();
  j["dataset_fingerprint"] = fingerprint(emu.dataset());
  Json lv = Json::array();
  for (int l = 1; l <= emu.levels(); ++l) {
    const LevelModel& m = emu.level_model(l);
    Json e;
    e["level"] = l;
    e["input_scales"] = vector_json(m.scales.input_scales);
    if (m.scales.output_scale) e["output_scale"] = *m.scales.output_scale;
    e["jitter"] = m.jitter;
    e["alpha"] = m.alpha;
    e["tau_sq"] = m.tau_sq;
    e["neg_log_likelihood"] = m.nll;
    lv.push_back(e);
  }
  j["level_models"] = lv;
  return j;
}

RnaEmulator emulator_from_json(const Json& j, const MultiFidelityDataset& data) {
  const std::string where = "emulator";
  if (!j.is_object()) throw ParseError("emulator: expected a JSON object");
  check_keys(j, {"format", "version", "kernel", "dim", "levels", "dataset_fingerprint", "level_models", "dataset_path"}, where);
  const Json& format = field(j, "format", where);
  if (!format.is_string() || format.get<std::string>() != "rnamf-emulator") throw ParseError("emulator: not an emulator file");
  if (integer(field(j, "version", where), "emulator.version") != 1) throw ParseError("emulator: unsupported version");
  const Json& kernel = field(j, "kernel", where);
  if (!kernel.is_string()) throw ParseError("emulator.kernel: expected a string");
  KernelKind kind;
  try {
    kind = parse_kernel_kind(kernel.get<std::string>());
  } catch (const Error& e) {
    throw ParseError(std::string("emulator.kernel: ") + e.what());
  }
  const Json& fp = field(j, "dataset_fingerprint", where);
  if (!fp.is_string()) throw ParseError("emulator.dataset_fingerprint: expected a string");
  if (fp.get<std::string>() != fingerprint(data))
    throw StaleModelError("emulator was fitted to a different dataset (fingerprint " + fp.get<std::string>() +
                          ", dataset " + fingerprint(data) + ")");
  if (integer(field(j, "dim", where), "emulator.dim") != data.dim) throw StaleModelError("emulator dimension differs from the dataset");
  const Json& lv = field(j, "level_models", where);
  if (!lv.is_array() || static_cast<int>(lv.size()) != data.levels())
    throw StaleModelError("emulator level count differs from the dataset");
  std::vector<LengthscaleVector> scales;
  std::vector<double> jitters;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const std::string w = "emulator.level_models[" + std::to_string(i) + "]";
    check_keys(lv[i], {"level", "input_scales", "output_scale", "jitter", "alpha", "tau_sq", "neg_log_likelihood"}, w);
    LengthscaleVector s;
    s.input_scales = to_eigen(numbers(field(lv[i], "input_scales", w), w + ".input_scales"));
    if (const auto it = lv[i].find("output_scale"); it != lv[i].end()) s.output_scale = number(*it, w + ".output_scale");
    try {
      s.validate();
    } catch (const Error& e) {
      throw ParseError(w + ": " + e.what());
    }
    scales.push_back(s);
    jitters.push_back(number(field(lv[i], "jitter", w), w + ".jitter"));
  }
  return RnaEmulator::from_hyperparameters(data, kind, scales, jitters);
}

}  // namespace rnamf::io
