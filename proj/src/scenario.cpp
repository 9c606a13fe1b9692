#include "gpcddp/scenario.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace gpcddp {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Walks a parsed document and anchors semantic errors to the line of the
/// offending key in the source text.
class Reader {
 public:
  Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    int line = 1;
    if (!key.empty()) {
      const auto pos = text_.find("\"" + key + "\"");
      if (pos != std::string::npos) line = line_of_offset(text_, pos);
    }
    throw ConfigError(source_ + ":" + std::to_string(line) + ": '" + key + "': " + what);
  }

  const json& require(const json& obj, const std::string& key) const {
    if (!obj.is_object() || !obj.contains(key)) fail(key, "required field is missing");
    return obj.at(key);
  }

  double number(const json& obj, const std::string& key) const {
    const json& v = require(obj, key);
    if (!v.is_number()) fail(key, "expected a number");
    return v.get<double>();
  }
  double number_or(const json& obj, const std::string& key, double fallback) const {
    return obj.is_object() && obj.contains(key) ? number(obj, key) : fallback;
  }
  int integer(const json& obj, const std::string& key) const {
    const json& v = require(obj, key);
    if (!v.is_number_integer()) fail(key, "expected an integer");
    return v.get<int>();
  }
  int integer_or(const json& obj, const std::string& key, int fallback) const {
    return obj.is_object() && obj.contains(key) ? integer(obj, key) : fallback;
  }
  std::uint64_t seed_or(const json& obj, const std::string& key, std::uint64_t fallback) const {
    if (!obj.is_object() || !obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(key, "expected a non-negative integer seed");
    return v.get<std::uint64_t>();
  }
  std::string string(const json& obj, const std::string& key) const {
    const json& v = require(obj, key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  Eigen::VectorXd vector(const json& obj, const std::string& key, int expected = -1) const {
    const json& v = require(obj, key);
    return vector_value(v, key, expected);
  }
  Eigen::VectorXd vector_value(const json& v, const std::string& key, int expected = -1) const {
    if (!v.is_array()) fail(key, "expected an array of numbers");
    Eigen::VectorXd out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) fail(key, "entry " + std::to_string(i) + " is not a number");
      out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    if (expected >= 0 && out.size() != expected)
      fail(key, "expected " + std::to_string(expected) + " entries, got " + std::to_string(out.size()));
    return out;
  }
  /// Scalar broadcast or per-entry array.
  Eigen::VectorXd vector_or_scalar(const json& obj, const std::string& key, int size) const {
    const json& v = require(obj, key);
    if (v.is_number()) return Eigen::VectorXd::Constant(size, v.get<double>());
    return vector_value(v, key, size);
  }

 private:
  const std::string& text_;
  std::string source_;
};

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const int line = line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const Reader rd(text, source);
  if (!doc.is_object()) rd.fail("", "top level must be an object");

  ScenarioConfig c;
  if (doc.contains("name")) c.name = rd.string(doc, "name");
  c.model = rd.string(doc, "model");
  if (c.model != "unicycle" && c.model != "quadrotor") rd.fail("model", "unknown model '" + c.model + "'");

  if (doc.contains("quadrotor")) {
    const json& q = doc.at("quadrotor");
    c.quadrotor.mass = rd.number_or(q, "mass", c.quadrotor.mass);
    c.quadrotor.arm_length = rd.number_or(q, "arm_length", c.quadrotor.arm_length);
    c.quadrotor.gravity = rd.number_or(q, "gravity", c.quadrotor.gravity);
    if (q.contains("inertia")) c.quadrotor.inertia = rd.vector(q, "inertia", 3);
  }
  const auto model = make_model(c.model, c.quadrotor);
  const int n = model->state_dim(), m = model->control_dim();
  const auto names = model->param_names();

  const json& params = rd.require(doc, "parameters");
  if (!params.is_array() || params.size() != names.size())
    rd.fail("parameters", "expected " + std::to_string(names.size()) + " parameter entries for " + c.model);
  for (std::size_t i = 0; i < names.size(); ++i) {
    ParamSpec p;
    p.name = rd.string(params[i], "name");
    if (p.name != names[i]) rd.fail("name", "parameter " + std::to_string(i) + " must be '" + names[i] + "'");
    try {
      p.family = parse_family(rd.string(params[i], "family"));
    } catch (const std::invalid_argument& e) {
      rd.fail("family", e.what());
    }
    if (p.family != PolyFamily::HermiteProbabilists && p.family != PolyFamily::LegendreUniform)
      rd.fail("family", "only hermite and legendre families are implemented");
    p.mean = rd.number(params[i], "mean");
    p.spread = rd.number(params[i], "spread");
    if (p.spread < 0.0) rd.fail("spread", "must be non-negative");
    c.params.push_back(p);
  }

  if (doc.contains("gpc")) {
    const json& g = doc.at("gpc");
    c.order = rd.integer_or(g, "order", c.order);
    c.quadrature_nodes = rd.integer_or(g, "quadrature_nodes", c.quadrature_nodes);
    if (c.order < 0) rd.fail("order", "must be >= 0");
    if (c.quadrature_nodes < 0 || c.quadrature_nodes > 32) rd.fail("quadrature_nodes", "must be in [0, 32]");
  }

  const json& h = rd.require(doc, "horizon");
  c.steps = rd.integer(h, "steps");
  c.prediction = rd.integer(h, "prediction");
  c.dt = rd.number(h, "dt");
  if (c.steps < 1) rd.fail("steps", "must be >= 1");
  if (c.prediction < 1 || c.prediction > c.steps) rd.fail("prediction", "must satisfy 1 <= H <= N");
  if (!(c.dt > 0.0)) rd.fail("dt", "must be positive");

  const json& cost = rd.require(doc, "cost");
  c.cost.state = rd.vector_or_scalar(cost, "state", n);
  c.cost.moments = rd.vector_or_scalar(cost, "moments", n);
  c.cost.control = rd.vector_or_scalar(cost, "control", m);
  c.cost.terminal_state = rd.vector_or_scalar(cost, "terminal_state", n);
  c.cost.terminal_moments = rd.vector_or_scalar(cost, "terminal_moments", n);
  if ((c.cost.state.array() < 0).any() || (c.cost.moments.array() < 0).any() ||
      (c.cost.terminal_state.array() < 0).any() || (c.cost.terminal_moments.array() < 0).any())
    rd.fail("cost", "state weights must be non-negative");
  if ((c.cost.control.array() <= 0).any()) rd.fail("control", "control weights must be positive");

  c.initial_state = rd.vector(doc, "initial_state", n);
  c.target_state = rd.vector(doc, "target_state", n);
  c.initial_control =
      doc.contains("initial_control") ? rd.vector(doc, "initial_control", m) : Eigen::VectorXd::Zero(m);

  const json& chance = rd.require(doc, "chance");
  c.chance.probability = rd.number(chance, "probability");
  c.chance.samples = rd.integer_or(chance, "samples", c.chance.samples);
  if (!(c.chance.probability > 0.0 && c.chance.probability < 1.0)) rd.fail("probability", "must lie in (0, 1)");
  if (c.chance.samples < 100) rd.fail("samples", "must be >= 100");
  {
    const Eigen::VectorXd dims = rd.vector(chance, "position_dims");
    c.chance.position_dims.clear();
    for (Eigen::Index i = 0; i < dims.size(); ++i) {
      const int d = static_cast<int>(dims(i));
      if (d != dims(i) || d < 0 || d >= n) rd.fail("position_dims", "invalid state index");
      c.chance.position_dims.push_back(d);
    }
    if (c.chance.position_dims.empty()) rd.fail("position_dims", "must not be empty");
  }

  if (doc.contains("obstacles")) {
    const json& obs = doc.at("obstacles");
    if (!obs.is_array()) rd.fail("obstacles", "expected an array");
    for (const json& o : obs) {
      CircleObstacle ob;
      ob.center = rd.vector(o, "center", static_cast<int>(c.chance.position_dims.size()));
      ob.radius = rd.number(o, "radius");
      if (!(ob.radius > 0.0)) rd.fail("radius", "must be positive");
      c.obstacles.push_back(ob);
    }
  }

  const json& lim = rd.require(doc, "control_limits");
  const Eigen::VectorXd lo = rd.vector_or_scalar(lim, "lower", m);
  const Eigen::VectorXd hi = rd.vector_or_scalar(lim, "upper", m);
  if ((lo.array() > hi.array()).any()) rd.fail("control_limits", "lower exceeds upper");
  c.limits = BoxLimits(lo, hi);

  if (doc.contains("solver")) {
    const json& s = doc.at("solver");
    c.solver.max_iterations = rd.integer_or(s, "max_iterations", c.solver.max_iterations);
    c.solver.cost_tolerance = rd.number_or(s, "cost_tolerance", c.solver.cost_tolerance);
    c.solver.gradient_tolerance = rd.number_or(s, "gradient_tolerance", c.solver.gradient_tolerance);
    c.solver.reg_init = rd.number_or(s, "reg_init", c.solver.reg_init);
    c.solver.reg_min = rd.number_or(s, "reg_min", c.solver.reg_min);
    c.solver.reg_max = rd.number_or(s, "reg_max", c.solver.reg_max);
    if (c.solver.max_iterations < 1) rd.fail("max_iterations", "must be >= 1");
  }
  if (doc.contains("augmented_lagrangian")) {
    const json& a = doc.at("augmented_lagrangian");
    c.al.mu_init = rd.number_or(a, "mu_init", c.al.mu_init);
    c.al.mu_increase = rd.number_or(a, "mu_increase", c.al.mu_increase);
    c.al.improvement_ratio = rd.number_or(a, "improvement_ratio", c.al.improvement_ratio);
    c.al.mu_max = rd.number_or(a, "mu_max", c.al.mu_max);
    c.al.tolerance = rd.number_or(a, "tolerance", c.al.tolerance);
    c.al.max_outer_iterations = rd.integer_or(a, "max_outer_iterations", c.al.max_outer_iterations);
    if (!(c.al.mu_init > 0.0)) rd.fail("mu_init", "must be positive");
    if (c.al.max_outer_iterations < 1) rd.fail("max_outer_iterations", "must be >= 1");
  }
  if (doc.contains("seeds")) {
    const json& s = doc.at("seeds");
    c.plant_seed = rd.seed_or(s, "plant", c.plant_seed);
    c.chance.seed = rd.seed_or(s, "chance", c.chance.seed);
    c.monte_carlo_seed = rd.seed_or(s, "monte_carlo", c.monte_carlo_seed);
  }
  c.reset_std = Eigen::VectorXd::Zero(n);
  if (doc.contains("measurement")) {
    c.reset_std = rd.vector_or_scalar(doc.at("measurement"), "reset_std", n);
    if ((c.reset_std.array() < 0).any()) rd.fail("reset_std", "must be non-negative");
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ":0: cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path);
}

namespace {
json to_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
}  // namespace

std::string scenario_to_json(const ScenarioConfig& c) {
  json doc;
  doc["name"] = c.name;
  doc["model"] = c.model;
  if (c.model == "quadrotor") {
    doc["quadrotor"] = {{"mass", c.quadrotor.mass},
                        {"arm_length", c.quadrotor.arm_length},
                        {"gravity", c.quadrotor.gravity},
                        {"inertia", to_json(c.quadrotor.inertia)}};
  }
  json params = json::array();
  for (const auto& p : c.params)
    params.push_back({{"name", p.name}, {"family", std::string(family_name(p.family))}, {"mean", p.mean},
                      {"spread", p.spread}});
  doc["parameters"] = params;
  doc["gpc"] = {{"order", c.order}, {"quadrature_nodes", c.nodes_per_dim()}};
  doc["horizon"] = {{"steps", c.steps}, {"prediction", c.prediction}, {"dt", c.dt}};
  doc["cost"] = {{"state", to_json(c.cost.state)},
                 {"moments", to_json(c.cost.moments)},
                 {"control", to_json(c.cost.control)},
                 {"terminal_state", to_json(c.cost.terminal_state)},
                 {"terminal_moments", to_json(c.cost.terminal_moments)}};
  doc["initial_state"] = to_json(c.initial_state);
  doc["target_state"] = to_json(c.target_state);
  doc["initial_control"] = to_json(c.initial_control);
  json obs = json::array();
  for (const auto& o : c.obstacles) obs.push_back({{"center", to_json(o.center)}, {"radius", o.radius}});
  doc["obstacles"] = obs;
  doc["chance"] = {{"probability", c.chance.probability},
                   {"samples", c.chance.samples},
                   {"position_dims", c.chance.position_dims}};
  doc["control_limits"] = {{"lower", to_json(c.limits.lower)}, {"upper", to_json(c.limits.upper)}};
  doc["solver"] = {{"max_iterations", c.solver.max_iterations},
                   {"cost_tolerance", c.solver.cost_tolerance},
                   {"gradient_tolerance", c.solver.gradient_tolerance},
                   {"reg_init", c.solver.reg_init},
                   {"reg_min", c.solver.reg_min},
                   {"reg_max", c.solver.reg_max}};
  doc["augmented_lagrangian"] = {{"mu_init", c.al.mu_init},
                                 {"mu_increase", c.al.mu_increase},
                                 {"improvement_ratio", c.al.improvement_ratio},
                                 {"mu_max", c.al.mu_max},
                                 {"tolerance", c.al.tolerance},
                                 {"max_outer_iterations", c.al.max_outer_iterations}};
  doc["seeds"] = {{"plant", c.plant_seed}, {"chance", c.chance.seed}, {"monte_carlo", c.monte_carlo_seed}};
  doc["measurement"] = {{"reset_std", to_json(c.reset_std)}};
  return doc.dump(2);
}

}  // namespace gpcddp
