#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "svdnn/bench.hpp"
#include "svdnn/csv.hpp"

namespace svdnn {

using nlohmann::ordered_json;

namespace {

SizeClass class_from_json(const nlohmann::json& j, std::size_t index) {
  const std::string field = "classes[" + std::to_string(index) + "]";
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (auto c = find_builtin_class(name)) return *c;
    throw ConfigError(field, "unknown built-in class '" + name + "'");
  }
  if (!j.is_object()) throw ConfigError(field, "expected a class name or object");
  SizeClass c;
  auto dim = [&](const char* key) -> std::size_t {
    if (!j.contains(key)) throw ConfigError(field + "." + key, "missing");
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1)
      throw ConfigError(field + "." + key, "must be a positive integer");
    return v.get<std::size_t>();
  };
  if (!j.contains("name") || !j.at("name").is_string())
    throw ConfigError(field + ".name", "must be a string");
  c.name = j.at("name").get<std::string>();
  c.n_input = dim("n_input");
  c.m_output = dim("m_output");
  c.p_hidden = dim("p_hidden");
  c.n_train = dim("n_train");
  try {
    validate(c);
  } catch (const InvalidInput& e) {
    throw ConfigError(field, e.what());
  }
  return c;
}

BenchConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  static const char* known[] = {"classes", "algorithms", "master_seed", "iteration_budget",
                                "instances_per_class", "random_inits_per_instance",
                                "wall_clock_budget_s", "prescale"};
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known))
      throw ConfigError(key, "unknown field");
  }

  BenchConfig cfg;
  if (!doc.contains("classes") || !doc.at("classes").is_array() || doc.at("classes").empty())
    throw ConfigError("classes", "must be a non-empty array");
  std::size_t idx = 0;
  for (const auto& c : doc.at("classes")) cfg.classes.push_back(class_from_json(c, idx++));

  if (doc.contains("algorithms")) {
    const auto& a = doc.at("algorithms");
    if (!a.is_array() || a.empty()) throw ConfigError("algorithms", "must be a non-empty array");
    cfg.algorithms.clear();
    for (const auto& name : a) {
      if (!name.is_string()) throw ConfigError("algorithms", "entries must be strings");
      try {
        cfg.algorithms.push_back(parse_algorithm(name.get<std::string>()));
      } catch (const InvalidInput& e) {
        throw ConfigError("algorithms", e.what());
      }
    }
  }
  auto positive_int = [&](const char* key, int& out) {
    if (!doc.contains(key)) return;
    const auto& v = doc.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000'000)
      throw ConfigError(key, "must be a positive integer");
    out = v.get<int>();
  };
  if (doc.contains("master_seed")) {
    const auto& v = doc.at("master_seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      throw ConfigError("master_seed", "must be a non-negative integer");
    cfg.master_seed = v.get<std::uint64_t>();
  }
  positive_int("iteration_budget", cfg.iteration_budget);
  positive_int("instances_per_class", cfg.instances_per_class);
  positive_int("random_inits_per_instance", cfg.random_inits_per_instance);
  if (doc.contains("wall_clock_budget_s")) {
    const auto& v = doc.at("wall_clock_budget_s");
    if (!v.is_number() || v.get<double>() < 0.0)
      throw ConfigError("wall_clock_budget_s", "must be a non-negative number");
    cfg.wall_clock_budget_s = v.get<double>();
  }
  if (doc.contains("prescale")) {
    const auto& v = doc.at("prescale");
    if (!v.is_number() || !(v.get<double>() > 0.0))
      throw ConfigError("prescale", "must be a positive number");
    cfg.prescale = v.get<double>();
  }
  return cfg;
}

ordered_json config_to_json(const BenchConfig& cfg) {
  ordered_json j;
  j["classes"] = ordered_json::array();
  for (const auto& c : cfg.classes)
    j["classes"].push_back({{"name", c.name},
                            {"n_input", c.n_input},
                            {"m_output", c.m_output},
                            {"p_hidden", c.p_hidden},
                            {"n_train", c.n_train}});
  j["algorithms"] = ordered_json::array();
  for (Algorithm a : cfg.algorithms) j["algorithms"].push_back(std::string(to_string(a)));
  j["master_seed"] = cfg.master_seed;
  j["iteration_budget"] = cfg.iteration_budget;
  j["instances_per_class"] = cfg.instances_per_class;
  j["random_inits_per_instance"] = cfg.random_inits_per_instance;
  j["wall_clock_budget_s"] = cfg.wall_clock_budget_s;
  j["prescale"] = cfg.prescale;
  return j;
}

ordered_json spec_to_json(const OptimizerSpec& s) {
  return {{"algorithm", std::string(to_string(s.algorithm))},
          {"learning_rate", s.learning_rate},
          {"rho", s.rho},
          {"epsilon", s.epsilon},
          {"max_iterations", s.max_iterations},
          {"grad_tol", s.grad_tol},
          {"wolfe_c1", s.wolfe_c1},
          {"wolfe_c2", s.wolfe_c2},
          {"max_line_search_trials", s.max_line_search_trials},
          {"wall_clock_budget_s", s.wall_clock_budget_s}};
}

OptimizerSpec spec_from_json(const nlohmann::json& j) {
  OptimizerSpec s;
  s.algorithm = parse_algorithm(j.at("algorithm").get<std::string>());
  s.learning_rate = j.at("learning_rate").get<double>();
  s.rho = j.at("rho").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.max_iterations = j.at("max_iterations").get<int>();
  s.grad_tol = j.at("grad_tol").get<double>();
  s.wolfe_c1 = j.at("wolfe_c1").get<double>();
  s.wolfe_c2 = j.at("wolfe_c2").get<double>();
  s.max_line_search_trials = j.at("max_line_search_trials").get<int>();
  s.wall_clock_budget_s = j.at("wall_clock_budget_s").get<double>();
  return s;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string emit_json(const BenchReport& report) {
  ordered_json doc;
  doc["format"] = "svdnn-bench-report";
  doc["version"] = 1;
  doc["config"] = config_to_json(report.config);
  doc["protocol"] = {
      {"problem", "teacher network of the same architecture; inputs i.i.d. standard normal; "
                  "targets are the teacher outputs, so the minimum training loss is zero"},
      {"activation", "symmetric_sigmoid"},
      {"loss", "mean squared error over all m*N output entries"},
      {"random_init", "uniform(-L, L), L = sqrt(6 / (fan_in + fan_out)) per layer, zero biases"},
      {"svd_init", "w_hidden = prescale * V_p^T, b_hidden = 0, w_out = U_p S_p / prescale, "
                   "b_out = regression bias"},
      {"aggregation", "geometric mean of final losses over non-failed runs"}};
  doc["classes"] = ordered_json::array();
  for (const auto& c : report.config.classes)
    doc["classes"].push_back({{"name", c.name},
                              {"param_count", c.layout().param_count()},
                              {"constraint_count", constraint_count(c)}});
  doc["cells"] = ordered_json::array();
  for (const auto& c : report.cells) {
    ordered_json cell;
    cell["size_class"] = c.size_class;
    cell["algorithm"] = c.algorithm;
    cell["init"] = c.init_scheme;
    cell["geo_mean_final_loss"] = optional_number(c.geo_mean_final_loss);
    cell["mean_iterations"] = c.mean_iterations;
    cell["mean_gradient_calls"] = c.mean_gradient_calls;
    cell["n_runs"] = c.n_runs;
    cell["n_failed"] = c.n_failed;
    cell["zero_clamped"] = c.zero_clamped;
    cell["seeds"] = c.seeds;
    cell["spec"] = c.spec_echo ? spec_to_json(*c.spec_echo) : ordered_json(nullptr);
    cell["runs"] = ordered_json::array();
    for (const auto& r : c.runs)
      cell["runs"].push_back({{"instance", r.instance},
                              {"seed", r.seed},
                              {"final_loss", r.final_loss},
                              {"iterations", r.iterations},
                              {"gradient_calls", r.gradient_calls},
                              {"terminated_by", r.terminated_by},
                              {"failed", r.failed},
                              {"error", r.error}});
    doc["cells"].push_back(std::move(cell));
  }
  return doc.dump(2) + "\n";
}

const char* kCsvHeader =
    "size_class,algorithm,init,n_runs,n_failed,mean_iterations,mean_gradient_calls,"
    "geo_mean_final_loss,zero_clamped\n";

std::string emit_csv(const BenchReport& report) {
  std::string out = kCsvHeader;
  for (const auto& c : report.cells) {
    out += c.size_class + "," + c.algorithm + "," + c.init_scheme + "," +
           std::to_string(c.n_runs) + "," + std::to_string(c.n_failed) + "," +
           format_double(c.mean_iterations) + "," + format_double(c.mean_gradient_calls) + "," +
           (c.geo_mean_final_loss ? format_double(*c.geo_mean_final_loss) : std::string()) + "," +
           (c.zero_clamped ? "1" : "0") + "\n";
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string display_algorithm(std::string_view a) {
  if (a == "svd") return "SVD";
  if (a == "sgd") return "SGD";
  if (a == "rmsprop") return "RMSprop";
  if (a == "adadelta") return "Adadelta";
  if (a == "cg") return "CG";
  return std::string(a);
}

std::string display_init(std::string_view i) {
  if (i == "none") return "---";
  if (i == "random") return "Random";
  if (i == "svd") return "SVD";
  return std::string(i);
}

std::string emit_markdown(const BenchReport& report) {
  std::vector<std::string> classes;
  for (const auto& c : report.config.classes) classes.push_back(c.name);
  for (const auto& c : report.cells)
    if (std::find(classes.begin(), classes.end(), c.size_class) == classes.end())
      classes.push_back(c.size_class);

  std::vector<std::pair<std::string, std::string>> rows;
  for (const auto& c : report.cells) {
    std::pair<std::string, std::string> key{c.algorithm, c.init_scheme};
    if (std::find(rows.begin(), rows.end(), key) == rows.end()) rows.push_back(key);
  }

  std::string out = "| Algorithm | Init. |";
  std::string rule = "|---|---|";
  for (const auto& name : classes) {
    out += " #iter. (" + name + ") | F_opt × 10⁻³ (" + name + ") |";
    rule += "---:|---:|";
  }
  out += "\n" + rule + "\n";
  for (const auto& [alg, init] : rows) {
    out += "| " + display_algorithm(alg) + " | " + display_init(init) + " |";
    for (const auto& name : classes) {
      const CellRecord* cell = report.find(name, alg, init);
      if (!cell || !cell->geo_mean_final_loss) {
        const std::string mark = cell ? "failed" : "---";
        out += " " + mark + " | " + mark + " |";
        continue;
      }
      const std::string iters = init == "none" ? "---" : fixed(cell->mean_iterations, 0);
      out += " " + iters + " | " + fixed(*cell->geo_mean_final_loss * 1e3, 3) + " |";
    }
    out += "\n";
  }
  return out;
}

}  // namespace

BenchConfig parse_bench_config(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

std::string bench_config_to_json(const BenchConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

ReportFormat parse_report_format(std::string_view name) {
  if (name == "csv") return ReportFormat::csv;
  if (name == "json") return ReportFormat::json;
  if (name == "markdown" || name == "md") return ReportFormat::markdown;
  throw InvalidInput("unknown report format '" + std::string(name) + "'");
}

std::string emit_report(const BenchReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return emit_csv(report);
    case ReportFormat::json: return emit_json(report);
    case ReportFormat::markdown: return emit_markdown(report);
  }
  throw InvalidInput("unknown report format");
}

BenchReport report_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    BenchReport report;
    report.config = config_from_json(doc.at("config"));
    for (const auto& j : doc.at("cells")) {
      CellRecord c;
      c.size_class = j.at("size_class").get<std::string>();
      c.algorithm = j.at("algorithm").get<std::string>();
      c.init_scheme = j.at("init").get<std::string>();
      if (!j.at("geo_mean_final_loss").is_null())
        c.geo_mean_final_loss = j.at("geo_mean_final_loss").get<double>();
      c.mean_iterations = j.at("mean_iterations").get<double>();
      c.mean_gradient_calls = j.at("mean_gradient_calls").get<double>();
      c.n_runs = j.at("n_runs").get<std::size_t>();
      c.n_failed = j.at("n_failed").get<std::size_t>();
      c.zero_clamped = j.at("zero_clamped").get<bool>();
      c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
      if (!j.at("spec").is_null()) c.spec_echo = spec_from_json(j.at("spec"));
      for (const auto& r : j.at("runs")) {
        RunRecord rec;
        rec.instance = r.at("instance").get<std::size_t>();
        rec.seed = r.at("seed").get<std::uint64_t>();
        rec.final_loss = r.at("final_loss").get<double>();
        rec.iterations = r.at("iterations").get<int>();
        rec.gradient_calls = r.at("gradient_calls").get<long>();
        rec.terminated_by = r.at("terminated_by").get<std::string>();
        rec.failed = r.at("failed").get<bool>();
        rec.error = r.at("error").get<std::string>();
        c.runs.push_back(std::move(rec));
      }
      report.cells.push_back(std::move(c));
    }
    return report;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("report json: ") + e.what());
  }
}

std::vector<CellRecord> cells_from_csv(std::string_view text) {
  std::vector<CellRecord> cells;
  bool header = true;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      f.emplace_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 9)
      throw InvalidInput("report csv line " + std::to_string(line_no) + ": expected 9 fields");
    CellRecord c;
    c.size_class = f[0];
    c.algorithm = f[1];
    c.init_scheme = f[2];
    c.n_runs = std::stoul(f[3]);
    c.n_failed = std::stoul(f[4]);
    c.mean_iterations = std::stod(f[5]);
    c.mean_gradient_calls = std::stod(f[6]);
    if (!f[7].empty()) c.geo_mean_final_loss = std::stod(f[7]);
    c.zero_clamped = f[8] == "1";
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace svdnn
