#include "hypstab/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace hypstab {

namespace {

using nlohmann::json;

json to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json to_json(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Vector vector_from(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + " must be an array of numbers");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(where + " must contain only numbers");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

Matrix matrix_from(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + " must be an array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const Vector row = vector_from(j[r], where);
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw ConfigError(where + " rows must all have the same length");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  return j.at(key).get<T>();
}

InitialSpec initial_from(const json& j, const std::string& where) {
  InitialSpec init;
  const std::string kind = field_or<std::string>(j, "kind", "constant");
  if (kind == "constant") {
    init.kind = InitialSpec::Kind::Constant;
    if (!j.contains("value")) throw ConfigError(where + ".value is required");
    init.constant = vector_from(j.at("value"), where + ".value");
  } else if (kind == "polynomial") {
    init.kind = InitialSpec::Kind::Polynomial;
    if (!j.contains("coeffs")) throw ConfigError(where + ".coeffs is required");
    for (const auto& c : j.at("coeffs"))
      init.poly_coeffs.push_back(vector_from(c, where + ".coeffs"));
    if (init.poly_coeffs.empty()) throw ConfigError(where + ".coeffs must be nonempty");
  } else if (kind == "samples") {
    init.kind = InitialSpec::Kind::Samples;
    if (!j.contains("x") || !j.contains("values"))
      throw ConfigError(where + " needs both x and values");
    init.sample_x = vector_from(j.at("x"), where + ".x");
    init.sample_values = matrix_from(j.at("values"), where + ".values");
  } else {
    throw ConfigError(where + ".kind must be constant, polynomial or samples");
  }
  return init;
}

json initial_to_json(const InitialSpec& init) {
  json j;
  switch (init.kind) {
    case InitialSpec::Kind::Constant:
      j["kind"] = "constant";
      j["value"] = to_json(init.constant);
      break;
    case InitialSpec::Kind::Polynomial: {
      j["kind"] = "polynomial";
      json coeffs = json::array();
      for (const auto& c : init.poly_coeffs) coeffs.push_back(to_json(c));
      j["coeffs"] = coeffs;
      break;
    }
    case InitialSpec::Kind::Samples:
      j["kind"] = "samples";
      j["x"] = to_json(init.sample_x);
      j["values"] = to_json(init.sample_values);
      break;
  }
  return j;
}

DelayMeasure delay_from(const json& j) {
  DelayMeasure mu;
  if (j.contains("atoms")) {
    for (const auto& a : j.at("atoms")) {
      DelayAtom atom;
      atom.theta = a.at("theta").get<double>();
      atom.weight = matrix_from(a.at("weight"), "system.delay.atoms.weight");
      mu.atoms.push_back(std::move(atom));
    }
  }
  if (j.contains("density")) {
    const auto& d = j.at("density");
    mu.density.breakpoints = d.at("breakpoints").get<std::vector<double>>();
    for (const auto& v : d.at("values"))
      mu.density.values.push_back(matrix_from(v, "system.delay.density.values"));
  }
  return mu;
}

json delay_to_json(const DelayMeasure& mu) {
  json j;
  json atoms = json::array();
  for (const auto& atom : mu.atoms)
    atoms.push_back({{"theta", atom.theta}, {"weight", to_json(atom.weight)}});
  j["atoms"] = atoms;
  if (!mu.density.empty()) {
    json values = json::array();
    for (const auto& v : mu.density.values) values.push_back(to_json(v));
    j["density"] = {{"breakpoints", mu.density.breakpoints}, {"values", values}};
  }
  return j;
}

RootSearchRegion box_from(const json& j) {
  RootSearchRegion box;
  box.re_min = j.at("re_min").get<double>();
  box.re_max = j.at("re_max").get<double>();
  box.im_min = j.at("im_min").get<double>();
  box.im_max = j.at("im_max").get<double>();
  box.samples_per_side = field_or<int>(j, "samples_per_side", 64);
  return box;
}

json box_to_json(const RootSearchRegion& box) {
  return {{"re_min", box.re_min},
          {"re_max", box.re_max},
          {"im_min", box.im_min},
          {"im_max", box.im_max},
          {"samples_per_side", box.samples_per_side}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  try {
    ExperimentConfig cfg;
    cfg.mode = field_or<std::string>(j, "mode", "transport");

    if (j.contains("system")) {
      const auto& s = j.at("system");
      cfg.system.velocities = vector_from(s.at("velocities"), "system.velocities");
      const int n = cfg.system.n();
      if (s.contains("coupling"))
        cfg.system.coupling = matrix_from(s.at("coupling"), "system.coupling");
      else
        cfg.system.coupling = Matrix::Zero(n, n);
      cfg.system.positivity_mode = field_or<bool>(s, "positivity_mode", true);
      if (s.contains("delay")) cfg.system.delay = delay_from(s.at("delay"));
    } else {
      cfg.system = scalar_transport_spec(1.0, 0.0);
    }

    if (j.contains("heat")) {
      HeatSettings heat;
      heat.k = j.at("heat").at("k").get<double>();
      heat.sigma = field_or<double>(j.at("heat"), "sigma", 1.0);
      cfg.heat = heat;
    }

    if (j.contains("initial")) cfg.initial = initial_from(j.at("initial"), "initial");
    else {
      cfg.initial.kind = InitialSpec::Kind::Constant;
      cfg.initial.constant = Vector::Ones(cfg.system.n());
    }
    if (j.contains("history")) cfg.history = initial_from(j.at("history"), "history");

    if (j.contains("run")) {
      const auto& r = j.at("run");
      cfg.run.t_final = field_or<double>(r, "t_final", cfg.run.t_final);
      cfg.run.dt = field_or<double>(r, "dt", cfg.run.dt);
      cfg.run.m_cells = field_or<int>(r, "m_cells", cfg.run.m_cells);
      cfg.run.cfl = field_or<double>(r, "cfl", cfg.run.cfl);
      cfg.run.output_stride = field_or<int>(r, "output_stride", cfg.run.output_stride);
      cfg.run.solver = field_or<std::string>(r, "solver", cfg.run.solver);
      if (r.contains("snapshot_times"))
        cfg.run.snapshot_times = r.at("snapshot_times").get<std::vector<double>>();
    }

    if (j.contains("analysis")) {
      const auto& a = j.at("analysis");
      if (a.contains("root_boxes"))
        for (const auto& b : a.at("root_boxes")) cfg.analysis.root_boxes.push_back(box_from(b));
      cfg.analysis.window_fraction =
          field_or<double>(a, "window_fraction", cfg.analysis.window_fraction);
      cfg.analysis.abscissa_re_max =
          field_or<double>(a, "abscissa_re_max", cfg.analysis.abscissa_re_max);
      cfg.analysis.abscissa_tol =
          field_or<double>(a, "abscissa_tol", cfg.analysis.abscissa_tol);
      cfg.analysis.im_cap = field_or<double>(a, "im_cap", cfg.analysis.im_cap);
      cfg.analysis.tol_marginal =
          field_or<double>(a, "tol_marginal", cfg.analysis.tol_marginal);
    }

    if (j.contains("verify")) {
      const auto& v = j.at("verify");
      cfg.verify.num_specs = field_or<int>(v, "num_specs", cfg.verify.num_specs);
      cfg.verify.m_cells = field_or<int>(v, "m_cells", cfg.verify.m_cells);
    }
    return cfg;
  } catch (const json::exception& err) {
    throw ConfigError(std::string("config field error: ") + err.what());
  }
}

std::string serialize_config(const ExperimentConfig& cfg) {
  json j;
  j["mode"] = cfg.mode;
  json system;
  system["velocities"] = to_json(cfg.system.velocities);
  system["coupling"] = to_json(cfg.system.coupling);
  system["positivity_mode"] = cfg.system.positivity_mode;
  if (cfg.system.delay.has_value()) system["delay"] = delay_to_json(*cfg.system.delay);
  j["system"] = system;
  if (cfg.heat.has_value())
    j["heat"] = {{"k", cfg.heat->k}, {"sigma", cfg.heat->sigma}};
  j["initial"] = initial_to_json(cfg.initial);
  if (cfg.history.has_value()) j["history"] = initial_to_json(*cfg.history);
  j["run"] = {{"t_final", cfg.run.t_final},
              {"dt", cfg.run.dt},
              {"m_cells", cfg.run.m_cells},
              {"cfl", cfg.run.cfl},
              {"output_stride", cfg.run.output_stride},
              {"solver", cfg.run.solver},
              {"snapshot_times", cfg.run.snapshot_times}};
  json boxes = json::array();
  for (const auto& b : cfg.analysis.root_boxes) boxes.push_back(box_to_json(b));
  j["analysis"] = {{"root_boxes", boxes},
                   {"window_fraction", cfg.analysis.window_fraction},
                   {"abscissa_re_max", cfg.analysis.abscissa_re_max},
                   {"abscissa_tol", cfg.analysis.abscissa_tol},
                   {"im_cap", cfg.analysis.im_cap},
                   {"tol_marginal", cfg.analysis.tol_marginal}};
  j["verify"] = {{"num_specs", cfg.verify.num_specs}, {"m_cells", cfg.verify.m_cells}};
  return j.dump(2) + "\n";
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << serialize_config(cfg);
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return serialize_config(a) == serialize_config(b);
}

namespace {

void validate_config_impl(const ExperimentConfig& cfg, bool check_system) {
  std::vector<std::string> problems;
  if (cfg.mode != "transport" && cfg.mode != "heat")
    problems.push_back("mode must be transport or heat");
  if (cfg.mode == "heat") {
    if (!cfg.heat.has_value()) problems.push_back("heat mode requires a heat section");
    else {
      if (cfg.heat->k < 0.0) problems.push_back("heat.k must be >= 0");
      if (cfg.heat->sigma <= 0.0) problems.push_back("heat.sigma must be > 0");
    }
  } else if (check_system) {
    const ValidationResult result = validate_system(cfg.system);
    for (const auto& v : result.violations)
      problems.push_back("system." + v.field + ": " + v.message);
  }
  if (cfg.run.t_final <= 0.0) problems.push_back("run.t_final must be > 0");
  if (cfg.run.dt <= 0.0) problems.push_back("run.dt must be > 0");
  if (cfg.run.m_cells < 4) problems.push_back("run.m_cells must be >= 4");
  if (!(cfg.run.cfl > 0.0 && cfg.run.cfl <= 1.0))
    problems.push_back("run.cfl must lie in (0, 1]");
  if (cfg.run.output_stride < 1) problems.push_back("run.output_stride must be >= 1");
  if (cfg.run.solver != "moc" && cfg.run.solver != "fv" && cfg.run.solver != "both")
    problems.push_back("run.solver must be moc, fv or both");
  if (!(cfg.analysis.window_fraction > 0.0 && cfg.analysis.window_fraction < 1.0))
    problems.push_back("analysis.window_fraction must lie in (0, 1)");
  if (cfg.analysis.abscissa_tol <= 0.0)
    problems.push_back("analysis.abscissa_tol must be > 0");
  if (cfg.analysis.tol_marginal < 0.0)
    problems.push_back("analysis.tol_marginal must be >= 0");
  if (cfg.verify.num_specs < 1) problems.push_back("verify.num_specs must be >= 1");
  if (cfg.verify.m_cells < 4 || cfg.verify.m_cells > 512)
    problems.push_back("verify.m_cells must lie in [4, 512]");

  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid config:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw ConfigError(msg.str());
  }
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) { validate_config_impl(cfg, true); }

void validate_config_for_verify(const ExperimentConfig& cfg) {
  validate_config_impl(cfg, false);
}

Field build_initial_field(const InitialSpec& init, int m_cells, int n) {
  switch (init.kind) {
    case InitialSpec::Kind::Constant: {
      if (init.constant.size() != n)
        throw ConfigError("initial constant vector must have one entry per component");
      return Field::constant(m_cells, init.constant);
    }
    case InitialSpec::Kind::Polynomial: {
      if (static_cast<int>(init.poly_coeffs.size()) != n)
        throw ConfigError("initial polynomial needs one coefficient list per component");
      return Field::sampled(m_cells, n, [&](double x, int i) {
        const Vector& c = init.poly_coeffs[static_cast<std::size_t>(i)];
        double acc = 0.0;
        for (Eigen::Index p = c.size() - 1; p >= 0; --p) acc = acc * x + c(p);
        return acc;
      });
    }
    case InitialSpec::Kind::Samples: {
      if (init.sample_values.cols() != n)
        throw ConfigError("initial samples must have one column per component");
      if (init.sample_x.size() != init.sample_values.rows() || init.sample_x.size() < 2)
        throw ConfigError("initial samples need matching x/value rows (>= 2)");
      for (Eigen::Index k = 1; k < init.sample_x.size(); ++k)
        if (init.sample_x(k) <= init.sample_x(k - 1))
          throw ConfigError("initial sample x values must be strictly increasing");
      return Field::sampled(m_cells, n, [&](double x, int i) {
        const Vector& xs = init.sample_x;
        if (x <= xs(0)) return init.sample_values(0, i);
        const Eigen::Index last = xs.size() - 1;
        if (x >= xs(last)) return init.sample_values(last, i);
        Eigen::Index k = 0;
        while (k + 1 < last && xs(k + 1) < x) ++k;
        const double frac = (x - xs(k)) / (xs(k + 1) - xs(k));
        return (1.0 - frac) * init.sample_values(k, i) +
               frac * init.sample_values(k + 1, i);
      });
    }
  }
  throw ConfigError("unknown initial kind");
}

HistoryBuffer build_history_buffer(const ExperimentConfig& cfg) {
  const InitialSpec& source = cfg.history.has_value() ? *cfg.history : cfg.initial;
  const Field phi = build_initial_field(source, cfg.run.m_cells, cfg.system.n());
  return HistoryBuffer::constant(cfg.run.dt, phi);
}

}  // namespace hypstab
