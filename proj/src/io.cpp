#include "binreg/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace binreg {

namespace fs = std::filesystem;

std::string fnv1a64_hex(const std::string& text)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const Json& config)
{
  // nlohmann::json objects are std::map backed, so dump() is key-sorted.
  return fnv1a64_hex(config.dump());
}

void write_text_file(const fs::path& path, const std::string& text)
{
  if (path.has_parent_path())
    fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << text;
    if (!out)
      throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_text_file(const fs::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::string fmt(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string provenance_line(const Provenance* prov)
{
  if (!prov)
    return {};
  return "# config_hash=" + prov->config_hash + " seed=" + std::to_string(prov->seed) + "\n";
}

std::vector<std::string> split_fields(const std::string& line)
{
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r' && c != ' ' && c != '\t') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, const std::string& where)
{
  if (s.empty())
    throw ValidationError(where + ": empty field");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError(where + ": not a number '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw ValidationError(where + ": not a finite number '" + s + "'");
  return v;
}

// Non-comment, non-blank lines with their 1-based line numbers.
std::vector<std::pair<int, std::string>> data_lines(const fs::path& path)
{
  std::istringstream in(read_text_file(path));
  std::vector<std::pair<int, std::string>> out;
  std::string line;
  int no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.empty() || line[0] == '#' || line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    out.emplace_back(no, line);
  }
  return out;
}

} // namespace

Dataset read_dataset_csv(const fs::path& path)
{
  const auto lines = data_lines(path);
  const std::string name = path.string();
  if (lines.empty())
    throw ValidationError(name + ": missing header");
  const auto header = split_fields(lines[0].second);
  const int d = static_cast<int>(header.size()) - 1;
  if (d < 1 || d > kMaxDim)
    throw ValidationError(name + ": expected 2 to 4 columns");
  for (int i = 0; i < d; ++i)
    if (header[i] != "x_" + std::to_string(i + 1))
      throw ValidationError(name + ": header must be x_1,...,x_d,y");
  if (header[d] != "y")
    throw ValidationError(name + ": last column must be y");

  const Eigen::Index n = static_cast<Eigen::Index>(lines.size()) - 1;
  Dataset data{ PointMatrix(d, n), Eigen::VectorXd(n) };
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& [no, line] = lines[i + 1];
    const std::string where = name + ":" + std::to_string(no);
    const auto f = split_fields(line);
    if (static_cast<int>(f.size()) != d + 1)
      throw ValidationError(where + ": wrong number of fields");
    for (int k = 0; k < d; ++k)
      data.x(k, i) = parse_number(f[k], where);
    data.y[i] = parse_number(f[d], where);
  }
  try {
    data.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(name + ": " + e.what());
  }
  return data;
}

void write_dataset_csv(const fs::path& path, const Dataset& data, const Provenance* prov)
{
  std::string text = provenance_line(prov);
  for (int i = 0; i < data.dim(); ++i)
    text += "x_" + std::to_string(i + 1) + ",";
  text += "y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    for (int k = 0; k < data.dim(); ++k)
      text += fmt(data.x(k, i)) + ",";
    text += data.y[i] > 0.5 ? "1\n" : "0\n";
  }
  write_text_file(path, text);
}

GridFunction read_grid_csv(const fs::path& path, Interpretation interpretation)
{
  const auto lines = data_lines(path);
  const std::string name = path.string();
  if (lines.empty())
    throw ValidationError(name + ": missing header");
  const auto header = split_fields(lines[0].second);
  if (header.size() != 2)
    throw ValidationError(name + ": header must be d,R_g");
  const double dd = parse_number(header[0], name);
  const double rr = parse_number(header[1], name);
  if (dd != std::floor(dd) || dd < 1 || dd > kMaxDim || rr != std::floor(rr) || rr < 0 ||
      rr * dd > 24)
    throw ValidationError(name + ": unsupported grid shape");
  GridFunction g;
  g.dim = static_cast<int>(dd);
  g.resolution = static_cast<int>(rr);
  g.interpretation = interpretation;
  const Eigen::Index size = Eigen::Index{ 1 } << (g.resolution * g.dim);
  if (static_cast<Eigen::Index>(lines.size()) - 1 != size)
    throw ValidationError(name + ": expected " + std::to_string(size) + " values");
  g.values.resize(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto& [no, line] = lines[i + 1];
    g.values[i] = parse_number(split_fields(line).at(0), name + ":" + std::to_string(no));
  }
  return g;
}

void write_grid_csv(const fs::path& path, const GridFunction& grid, const Provenance* prov)
{
  std::string text = provenance_line(prov);
  text += std::to_string(grid.dim) + "," + std::to_string(grid.resolution) + "\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    text += fmt(grid.values[i]) + "\n";
  write_text_file(path, text);
}

namespace {

Json vec_json(const Eigen::VectorXd& v)
{
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd json_vec(const Json& j, Eigen::Index expected, const std::string& where)
{
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != expected)
    throw ValidationError(where + ": expected an array of " + std::to_string(expected));
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!j[i].is_number())
      throw ValidationError(where + ": non-numeric entry");
    v[i] = j[i].get<double>();
  }
  return v;
}

} // namespace

Json to_json(const CoeffTree& tree)
{
  Json levels = Json::array();
  for (int l = tree.base_level; l <= tree.max_level; ++l) {
    Json blocks = Json::array();
    for (int v = 1; v <= tree.num_orientations(); ++v)
      blocks.push_back(vec_json(tree.detail(l, v)));
    levels.push_back({ { "level", l }, { "details", blocks } });
  }
  return { { "dim", tree.dim },
           { "base_level", tree.base_level },
           { "max_level", tree.max_level },
           { "scaling", vec_json(tree.scaling) },
           { "levels", levels } };
}

CoeffTree coeff_tree_from_json(const Json& j)
{
  try {
    const int dim = j.at("dim").get<int>();
    const int base = j.at("base_level").get<int>();
    const int top = j.at("max_level").get<int>();
    if (dim < 1 || dim > kMaxDim || base < 0 || top < base - 1 || top * dim > 24)
      throw ValidationError("coefficient tree: bad shape");
    CoeffTree t = CoeffTree::zeros(dim, base, top);
    t.scaling = json_vec(j.at("scaling"), block_size(base, dim), "scaling");
    const Json& levels = j.at("levels");
    if (!levels.is_array() || static_cast<int>(levels.size()) != top - base + 1)
      throw ValidationError("coefficient tree: level count mismatch");
    for (int l = base; l <= top; ++l) {
      const Json& entry = levels[l - base];
      if (entry.at("level").get<int>() != l)
        throw ValidationError("coefficient tree: levels out of order");
      const Json& blocks = entry.at("details");
      if (!blocks.is_array() || static_cast<int>(blocks.size()) != t.num_orientations())
        throw ValidationError("coefficient tree: orientation count mismatch");
      for (int v = 1; v <= t.num_orientations(); ++v)
        t.detail(l, v) = json_vec(blocks[v - 1], block_size(l, dim),
                                  "level " + std::to_string(l));
    }
    return t;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("coefficient tree: ") + e.what());
  }
}

Json to_json(const TestOutcome& o)
{
  Json constants = Json::object();
  for (const auto& [k, v] : o.constants)
    constants[k] = v;
  return { { "levels", o.levels },   { "statistics", o.statistics }, { "cutoffs", o.cutoffs },
           { "reject", o.reject },   { "j0", o.j0 },                 { "j0_formula", o.j0_formula },
           { "n", o.n },             { "warnings", o.warnings },     { "constants", constants } };
}

Json to_json(const ExperimentReport& r)
{
  Json summaries = Json::object();
  for (const auto& s : r.summaries)
    summaries[s.name] = { { "value", s.value }, { "se", s.se } };
  Json slopes = Json::object();
  for (const auto& [name, f] : r.slopes)
    slopes[name] = { { "slope", f.slope }, { "intercept", f.intercept }, { "se", f.se },
                     { "ci_lo", f.ci_lo }, { "ci_hi", f.ci_hi } };
  Json constants = Json::object();
  for (const auto& [k, v] : r.constants)
    constants[k] = v;
  return { { "experiment", r.name }, { "seed", r.seed },       { "reps", r.reps },
           { "rows", r.records.rows() }, { "summaries", summaries }, { "slopes", slopes },
           { "constants", constants } };
}

void write_records_csv(const fs::path& path, const ExperimentReport& r, const Provenance* prov)
{
  std::string text = provenance_line(prov);
  for (std::size_t c = 0; c < r.columns.size(); ++c)
    text += (c ? "," : "") + r.columns[c];
  text += "\n";
  for (Eigen::Index i = 0; i < r.records.rows(); ++i) {
    for (Eigen::Index c = 0; c < r.records.cols(); ++c)
      text += (c ? "," : "") + fmt(r.records(i, c));
    text += "\n";
  }
  write_text_file(path, text);
}

std::map<std::string, double> calibrated_constants(const CalibrationResult& r)
{
  auto detail = [&r](const std::string& key) {
    for (const auto& [k, v] : r.details)
      if (k == key)
        return v;
    throw std::logic_error("calibration result lacks " + key);
  };
  if (r.target == "simple.C")
    return { { "simple_C", r.value } };
  if (r.target == "composite.zeta")
    return { { "zeta", r.value } };
  if (r.target == "simple.D" || r.target == "composite.D")
    return { { "D", r.value } };
  if (r.target == "lepski.density")
    return { { "lepski_density", r.value } };
  if (r.target == "lepski.regression")
    return { { "lepski_regression", r.value } };
  if (r.target == "confidence.kappa")
    return { { "C1", detail("C1") }, { "C2", detail("C2") }, { "slack", detail("slack_const") } };
  throw std::logic_error("unknown calibration target " + r.target);
}

Json to_json(const CalibrationResult& r)
{
  Json details = Json::object();
  for (const auto& [k, v] : r.details)
    details[k] = v;
  Json constants = Json::object();
  for (const auto& [k, v] : calibrated_constants(r))
    constants[k] = v;
  return { { "target", r.target }, { "value", r.value },           { "achieved", r.achieved },
           { "seed", r.seed },     { "reps", r.reps },             { "panel_hash", r.panel_hash },
           { "details", details }, { "constants", constants } };
}

std::map<std::string, double> read_calibration_constants(const fs::path& path)
{
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("constants") || !j["constants"].is_object())
    throw ValidationError(path.string() + ": calibration file needs a constants object");
  std::map<std::string, double> out;
  for (const auto& [k, v] : j["constants"].items()) {
    if (!v.is_number())
      throw ValidationError(path.string() + ": constant " + k + " is not a number");
    out[k] = v.get<double>();
  }
  return out;
}

namespace {

void only_keys(const Json& j, const std::string& where, std::initializer_list<const char*> keys)
{
  if (!j.is_object())
    throw ValidationError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* a : keys)
      ok = ok || k == a;
    if (!ok)
      throw ValidationError("unknown key '" + k + "' in " + where);
  }
}

template <class T>
T get_or(const Json& j, const char* key, T fallback, const std::string& where)
{
  if (!j.contains(key))
    return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ValidationError(where + "." + key + " has the wrong type");
  }
}

std::string type_of(const Json& j, const std::string& where)
{
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ValidationError(where + " needs a string 'type'");
  return j["type"].get<std::string>();
}

Json resolve_f(const Json& f)
{
  const std::string t = type_of(f, "model.f");
  if (t == "constant") {
    only_keys(f, "model.f", { "type", "value" });
    return { { "type", t }, { "value", get_or(f, "value", 0.5, "model.f") } };
  }
  if (t == "sine") {
    only_keys(f, "model.f", { "type", "mean", "amplitude" });
    return { { "type", t },
             { "mean", get_or(f, "mean", 0.5, "model.f") },
             { "amplitude", get_or(f, "amplitude", 0.3, "model.f") } };
  }
  if (t == "haar-series") {
    only_keys(f, "model.f", { "type", "beta", "amplitude", "first", "last", "seed" });
    return { { "type", t },
             { "beta", get_or(f, "beta", 1.0, "model.f") },
             { "amplitude", get_or(f, "amplitude", 0.2, "model.f") },
             { "first", get_or(f, "first", 1, "model.f") },
             { "last", get_or(f, "last", 10, "model.f") },
             { "seed", get_or<std::uint64_t>(f, "seed", 1, "model.f") } };
  }
  if (t == "bump") {
    only_keys(f, "model.f", { "type", "k", "beta", "eps", "signs", "resolution" });
    Json r = { { "type", t },
               { "k", get_or(f, "k", 4, "model.f") },
               { "beta", get_or(f, "beta", 1.0, "model.f") },
               { "eps", get_or(f, "eps", 0.1, "model.f") },
               { "resolution", get_or(f, "resolution", 12, "model.f") } };
    r["signs"] = get_or(f, "signs", std::vector<int>(r["k"].get<int>() > 0 ? r["k"].get<int>() : 0, 1),
                        "model.f");
    return r;
  }
  if (t == "grid") {
    only_keys(f, "model.f", { "type", "path" });
    if (!f.contains("path") || !f["path"].is_string())
      throw ValidationError("model.f grid needs a path");
    return f;
  }
  throw ValidationError("unknown model.f type '" + t + "'");
}

Json resolve_g(const Json& g)
{
  const std::string t = type_of(g, "model.g");
  if (t == "uniform") {
    only_keys(g, "model.g", { "type" });
    return g;
  }
  if (t == "linear") {
    only_keys(g, "model.g", { "type", "slope" });
    return { { "type", t }, { "slope", get_or(g, "slope", 0.8, "model.g") } };
  }
  if (t == "grid") {
    only_keys(g, "model.g", { "type", "path" });
    if (!g.contains("path") || !g["path"].is_string())
      throw ValidationError("model.g grid needs a path");
    return g;
  }
  throw ValidationError("unknown model.g type '" + t + "'");
}

fs::path resolve_path(const std::string& p, const fs::path& base)
{
  const fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

} // namespace

Json resolve_model_json(const Json& j)
{
  only_keys(j, "model", { "dim", "f", "g", "beta", "gamma" });
  Json r;
  r["dim"] = get_or(j, "dim", 1, "model");
  r["f"] = resolve_f(j.contains("f") ? j["f"] : Json{ { "type", "constant" } });
  r["g"] = resolve_g(j.contains("g") ? j["g"] : Json{ { "type", "uniform" } });
  r["beta"] = get_or(j, "beta", 1.0, "model");
  r["gamma"] = get_or(j, "gamma", 1.0, "model");
  return r;
}

ModelSpec model_from_json(const Json& j_in, const fs::path& base_dir)
{
  const Json j = resolve_model_json(j_in);
  ModelSpec m;
  m.dim = j["dim"].get<int>();
  if (m.dim < 1 || m.dim > kMaxDim)
    throw ValidationError("model.dim must be in [1, 3]");
  m.beta = j["beta"].get<double>();
  m.gamma = j["gamma"].get<double>();
  m.f_tag = j["f"].dump();
  m.g_tag = j["g"].dump();

  try {
    const Json& f = j["f"];
    const std::string ft = f["type"].get<std::string>();
    if (ft == "constant") {
      m.f = constant_function(f["value"].get<double>());
    } else if (ft == "sine") {
      m.f = sine_function(f["mean"].get<double>(), f["amplitude"].get<double>());
    } else if (ft == "haar-series") {
      if (m.dim != 1)
        throw ValidationError("haar-series models are one-dimensional");
      m.f = grid_lookup(haar_series_function(f["beta"].get<double>(), f["amplitude"].get<double>(),
                                             f["first"].get<int>(), f["last"].get<int>(),
                                             f["seed"].get<std::uint64_t>()));
    } else if (ft == "bump") {
      m.f = grid_lookup(make_bump_regression(f["k"].get<int>(), f["beta"].get<double>(), m.dim,
                                             f["eps"].get<double>(),
                                             f["signs"].get<std::vector<int>>(),
                                             f["resolution"].get<int>()));
    } else {
      GridFunction grid = read_grid_csv(resolve_path(f["path"].get<std::string>(), base_dir),
                                        Interpretation::regression);
      if (grid.dim != m.dim)
        throw ValidationError("model.f grid dimension differs from model.dim");
      m.f = grid_lookup(std::move(grid));
    }

    const Json& g = j["g"];
    const std::string gt = g["type"].get<std::string>();
    if (gt == "uniform") {
      m.g = uniform_density();
      m.g_upper = 1.0;
    } else if (gt == "linear") {
      if (m.dim != 1)
        throw ValidationError("linear densities are one-dimensional");
      const double slope = g["slope"].get<double>();
      m.g = linear_density(slope);
      m.g_upper = 1.0 + 0.5 * std::abs(slope);
    } else {
      GridFunction grid = read_grid_csv(resolve_path(g["path"].get<std::string>(), base_dir),
                                        Interpretation::density);
      if (grid.dim != m.dim)
        throw ValidationError("model.g grid dimension differs from model.dim");
      m.g_upper = grid.values.maxCoeff();
      m.g = grid_lookup(std::move(grid));
    }
    m.validate(m.dim == 1 ? 10 : m.dim == 2 ? 6 : 4);
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("model: ") + e.what());
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("model: ") + e.what());
  }
  return m;
}

} // namespace binreg
