#include "mixedgp/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mixedgp {

namespace {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open '" + path + "' for writing");
  out << text;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

CategoricalKernelKind kind_from_string(const std::string& name) {
  if (name == "gd") return CategoricalKernelKind::kGd;
  if (name == "cr") return CategoricalKernelKind::kCr;
  if (name == "ehh") return CategoricalKernelKind::kEhh;
  if (name == "hh") return CategoricalKernelKind::kHh;
  if (name == "hh-pls") return CategoricalKernelKind::kHhPls;
  if (name == "ehh-pls") return CategoricalKernelKind::kEhhPls;
  throw std::invalid_argument("unknown categorical kernel kind '" + name + "'");
}

json config_to_json(const KernelConfig& config) {
  json j;
  j["continuous_kernel"] = to_string(config.continuous_kernel);
  j["categorical_kinds"] = json::array();
  for (auto kind : config.categorical_kinds) j["categorical_kinds"].push_back(to_string(kind));
  j["pls_level_count"] = config.pls_level_count;
  if (config.continuous_pls) {
    j["continuous_pls"] = *config.continuous_pls;
  } else {
    j["continuous_pls"] = nullptr;
  }
  j["cr_pls"] = config.cr_pls;
  j["epsilon"] = config.epsilon;
  return j;
}

KernelConfig config_from_json(const json& j) {
  KernelConfig config;
  const std::string cont = j.at("continuous_kernel").get<std::string>();
  if (cont == "squared_exponential") {
    config.continuous_kernel = ContinuousKernelType::kSquaredExponential;
  } else if (cont == "absolute_exponential") {
    config.continuous_kernel = ContinuousKernelType::kAbsoluteExponential;
  } else {
    throw std::invalid_argument("unknown continuous kernel '" + cont + "'");
  }
  for (const auto& kind : j.at("categorical_kinds")) {
    config.categorical_kinds.push_back(kind_from_string(kind.get<std::string>()));
  }
  config.pls_level_count = j.at("pls_level_count").get<int>();
  if (!j.at("continuous_pls").is_null()) {
    config.continuous_pls = j.at("continuous_pls").get<int>();
  }
  config.cr_pls = j.at("cr_pls").get<bool>();
  config.epsilon = j.at("epsilon").get<double>();
  return config;
}

json doe_to_json(const Doe& doe) {
  json j;
  j["points"] = json::array();
  for (const MixedPoint& w : doe.points) {
    j["points"].push_back({{"x", w.x}, {"z", w.z}, {"c", w.c}});
  }
  j["y"] = doe.y;
  return j;
}

Doe doe_from_json(const json& j) {
  Doe doe;
  for (const auto& p : j.at("points")) {
    MixedPoint w;
    w.x = p.at("x").get<std::vector<double>>();
    w.z = p.at("z").get<std::vector<std::int64_t>>();
    w.c = p.at("c").get<std::vector<int>>();
    doe.points.push_back(std::move(w));
  }
  doe.y = j.at("y").get<std::vector<double>>();
  return doe;
}

}  // namespace

DesignSpace design_space_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("design space JSON parse error: ") + e.what());
  }
  std::vector<VariableSpec> variables;
  for (const auto& v : j.at("variables")) {
    VariableSpec spec;
    spec.name = v.at("name").get<std::string>();
    const std::string type = v.at("type").get<std::string>();
    if (type == "continuous") {
      const auto& b = v.at("bounds");
      spec.kind = ContinuousVar{b.at(0).get<double>(), b.at(1).get<double>()};
    } else if (type == "integer") {
      const auto& b = v.at("bounds");
      spec.kind = IntegerVar{b.at(0).get<std::int64_t>(), b.at(1).get<std::int64_t>()};
    } else if (type == "categorical") {
      spec.kind = CategoricalVar{v.at("levels").get<std::vector<std::string>>()};
    } else {
      throw std::invalid_argument("unknown variable type '" + type + "'");
    }
    variables.push_back(std::move(spec));
  }
  return DesignSpace(std::move(variables));
}

std::string design_space_to_json(const DesignSpace& space) {
  json j;
  j["variables"] = json::array();
  for (const VariableSpec& v : space.variables()) {
    json entry;
    entry["name"] = v.name;
    if (v.is_continuous()) {
      entry["type"] = "continuous";
      entry["bounds"] = {v.as_continuous().lower, v.as_continuous().upper};
    } else if (v.is_integer()) {
      entry["type"] = "integer";
      entry["bounds"] = {v.as_integer().lower, v.as_integer().upper};
    } else {
      entry["type"] = "categorical";
      entry["levels"] = v.as_categorical().levels;
    }
    j["variables"].push_back(std::move(entry));
  }
  return j.dump(2) + "\n";
}

DesignSpace load_design_space(const std::string& path) {
  return design_space_from_json(read_text_file(path));
}

void save_design_space(const DesignSpace& space, const std::string& path) {
  write_text_file(path, design_space_to_json(space));
}

Doe load_doe_csv(const DesignSpace& space, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("DoE CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_csv_line(line);
  const std::size_t n_vars = space.num_variables();
  bool has_y = false;
  if (header.size() == n_vars + 1 && header.back() == "y") {
    has_y = true;
  } else if (header.size() != n_vars) {
    throw std::invalid_argument("DoE CSV header does not match the design space");
  }
  for (std::size_t v = 0; v < n_vars; ++v) {
    if (header[v] != space.variables()[v].name) {
      throw std::invalid_argument("DoE CSV column '" + header[v] + "' does not match variable '" +
                                  space.variables()[v].name + "'");
    }
  }

  Doe doe;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != header.size()) {
      throw std::invalid_argument("DoE CSV line " + std::to_string(line_no) +
                                  " has the wrong number of fields");
    }
    MixedPoint w;
    for (std::size_t v = 0; v < n_vars; ++v) {
      const VariableSpec& spec = space.variables()[v];
      const std::string& field = fields[v];
      if (spec.is_categorical()) {
        const auto& levels = spec.as_categorical().levels;
        const auto it = std::find(levels.begin(), levels.end(), field);
        if (it == levels.end()) {
          throw std::invalid_argument("DoE CSV line " + std::to_string(line_no) +
                                      ": unknown level '" + field + "' for variable '" +
                                      spec.name + "'");
        }
        w.c.push_back(static_cast<int>(it - levels.begin()) + 1);
        continue;
      }
      try {
        if (spec.is_continuous()) {
          w.x.push_back(std::stod(field));
        } else {
          w.z.push_back(std::stoll(field));
        }
      } catch (const std::exception&) {
        throw std::invalid_argument("DoE CSV line " + std::to_string(line_no) +
                                    ": cannot parse field '" + field + "'");
      }
    }
    validate_point(space, w);
    doe.points.push_back(std::move(w));
    if (has_y) {
      try {
        doe.y.push_back(std::stod(fields.back()));
      } catch (const std::exception&) {
        throw std::invalid_argument("DoE CSV line " + std::to_string(line_no) +
                                    ": cannot parse response '" + fields.back() + "'");
      }
    }
  }
  if (doe.points.empty()) throw std::invalid_argument("DoE CSV contains no points");
  return doe;
}

void save_doe_csv(const DesignSpace& space, const Doe& doe, const std::string& path) {
  std::string text;
  for (std::size_t v = 0; v < space.num_variables(); ++v) {
    if (v > 0) text += ",";
    text += space.variables()[v].name;
  }
  if (doe.has_responses()) text += ",y";
  text += "\n";

  for (std::size_t i = 0; i < doe.points.size(); ++i) {
    const MixedPoint& w = doe.points[i];
    std::size_t xi = 0, zi = 0, ci = 0;
    for (std::size_t v = 0; v < space.num_variables(); ++v) {
      if (v > 0) text += ",";
      const VariableSpec& spec = space.variables()[v];
      if (spec.is_continuous()) {
        text += format_double(w.x[xi++]);
      } else if (spec.is_integer()) {
        text += std::to_string(w.z[zi++]);
      } else {
        text += spec.as_categorical().levels[w.c[ci++] - 1];
      }
    }
    if (doe.has_responses()) text += "," + format_double(doe.y[i]);
    text += "\n";
  }
  write_text_file(path, text);
}

void save_model(const TrainedGp& gp, const std::string& path) {
  json j;
  j["format"] = "mixedgp-model";
  j["version"] = 1;
  j["space"] = json::parse(design_space_to_json(gp.space()));
  j["config"] = config_to_json(gp.config());
  j["doe"] = doe_to_json(gp.doe());
  j["theta"] = std::vector<double>(gp.theta().data(), gp.theta().data() + gp.theta().size());
  j["mu_hat"] = gp.mu_hat();
  j["sigma2_hat"] = gp.sigma2_hat();
  j["nugget"] = gp.nugget();
  j["constant_model"] = gp.constant_model();
  write_text_file(path, j.dump(2) + "\n");
}

TrainedGp load_model(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("model JSON parse error: ") + e.what());
  }
  if (j.value("format", std::string()) != "mixedgp-model") {
    throw std::invalid_argument("'" + path + "' is not a mixedgp model file");
  }
  const DesignSpace space = design_space_from_json(j.at("space").dump());
  const KernelConfig config = config_from_json(j.at("config"));
  const Doe doe = doe_from_json(j.at("doe"));
  const std::vector<double> theta_values = j.at("theta").get<std::vector<double>>();
  Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(theta_values.data(), theta_values.size());
  return assemble_trained_gp(space, config, doe, theta, j.at("nugget").get<double>());
}

void save_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::string text;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) text += ",";
      text += format_double(m(r, c));
    }
    text += "\n";
  }
  write_text_file(path, text);
}

void save_trace_csv(const DesignSpace& space, const EgoTrace& trace, const std::string& path) {
  std::string text = "iter";
  for (const VariableSpec& v : space.variables()) text += "," + v.name;
  text += ",y,best_so_far\n";
  for (const EgoRecord& rec : trace.records) {
    text += std::to_string(rec.iteration);
    std::size_t xi = 0, zi = 0, ci = 0;
    for (const VariableSpec& v : space.variables()) {
      text += ",";
      if (v.is_continuous()) {
        text += format_double(rec.point.x[xi++]);
      } else if (v.is_integer()) {
        text += std::to_string(rec.point.z[zi++]);
      } else {
        text += v.as_categorical().levels[rec.point.c[ci++] - 1];
      }
    }
    text += "," + (rec.failed ? std::string("nan") : format_double(rec.y));
    text += "," + format_double(rec.best_so_far) + "\n";
  }
  write_text_file(path, text);
}

void save_trace_summary_json(const DesignSpace& space, const EgoTrace& trace,
                             const std::string& path) {
  json j;
  j["evaluations"] = trace.records.size();
  j["failures"] = trace.failures;
  j["best_value"] = trace.best_value;
  j["best_point"] = json::parse(point_to_json(space, trace.best_point));
  write_text_file(path, j.dump(2) + "\n");
}

std::string point_to_json(const DesignSpace& space, const MixedPoint& w) {
  json j;
  std::size_t xi = 0, zi = 0, ci = 0;
  for (const VariableSpec& v : space.variables()) {
    if (v.is_continuous()) {
      j[v.name] = w.x[xi++];
    } else if (v.is_integer()) {
      j[v.name] = w.z[zi++];
    } else {
      j[v.name] = v.as_categorical().levels[w.c[ci++] - 1];
    }
  }
  return j.dump();
}

}  // namespace mixedgp
