#include "svdnn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <thread>
#include <tuple>

#include "json.hpp"
#include "svdnn/initsvd.hpp"
#include "svdnn/rng.hpp"

namespace svdnn {

namespace {

constexpr std::size_t kBuiltinDims[3][4] = {
    {100, 50, 20, 80}, {300, 150, 60, 240}, {1000, 500, 200, 800}};

constexpr std::size_t builtin_param_count(const std::size_t d[4]) {
  return (d[0] + 1) * d[2] + (d[2] + 1) * d[1];
}

// Every built-in class is slightly over-determined with the hidden
// bottleneck in place: fewer parameters than fitted output values.
static_assert(builtin_param_count(kBuiltinDims[0]) < kBuiltinDims[0][1] * kBuiltinDims[0][3]);
static_assert(builtin_param_count(kBuiltinDims[1]) < kBuiltinDims[1][1] * kBuiltinDims[1][3]);
static_assert(builtin_param_count(kBuiltinDims[2]) < kBuiltinDims[2][1] * kBuiltinDims[2][3]);

const std::vector<SizeClass>& builtins() {
  static const std::vector<SizeClass> classes = [] {
    std::vector<SizeClass> out;
    const char* names[3] = {"A", "B", "C"};
    for (int i = 0; i < 3; ++i)
      out.push_back({names[i], kBuiltinDims[i][0], kBuiltinDims[i][1], kBuiltinDims[i][2],
                     kBuiltinDims[i][3]});
    return out;
  }();
  return classes;
}

std::uint64_t name_hash(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::span<const SizeClass> builtin_classes() { return builtins(); }

std::optional<SizeClass> find_builtin_class(std::string_view name) {
  for (const auto& c : builtins())
    if (c.name == name) return c;
  return std::nullopt;
}

std::size_t constraint_count(const SizeClass& cls) { return cls.m_output * cls.n_train; }

void validate(const SizeClass& cls) {
  if (cls.name.empty()) throw InvalidInput("size class: empty name");
  if (cls.n_input < 1 || cls.m_output < 1 || cls.p_hidden < 1 || cls.n_train < 1)
    throw InvalidInput("size class " + cls.name + ": dimensions must be >= 1");
  if (cls.p_hidden >= std::min(cls.n_input, cls.m_output))
    throw InvalidInput("size class " + cls.name +
                       ": hidden width must be below min(input, output)");
}

ProblemInstance generate_problem(const SizeClass& cls, std::uint64_t seed) {
  validate(cls);
  ProblemInstance inst;
  inst.seed = seed;
  inst.teacher = random_initialize(cls.layout(), derive_seed(seed, {1}));
  inst.x_train = Matrix(cls.n_input, cls.n_train);
  Rng rng(derive_seed(seed, {2}));
  for (double& v : inst.x_train.data()) v = rng.normal();
  inst.y_train = forward(inst.teacher, inst.x_train);
  return inst;
}

Objective training_objective(const Matrix& x, const Matrix& y, const Layout& layout,
                             Activation activation) {
  Objective obj;
  obj.value = [&x, &y, layout, activation](std::span<const double> w) {
    return mse_loss(unflatten(w, layout, activation), x, y);
  };
  obj.value_and_gradient = [&x, &y, layout, activation](std::span<const double> w,
                                                          std::span<double> g) {
    return loss_and_gradient(unflatten(w, layout, activation), x, y, g);
  };
  return obj;
}

GeoMean geometric_mean(std::span<const double> values) {
  if (values.empty()) throw InvalidInput("geometric_mean: no values");
  GeoMean out;
  double log_sum = 0.0;
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v))
      throw InvalidInput("geometric_mean: values must be finite and non-negative");
    if (v == 0.0) {
      v = 1e-300;
      out.zero_clamped = true;
    }
    log_sum += std::log(v);
  }
  out.value = std::exp(log_sum / static_cast<double>(values.size()));
  return out;
}

std::uint64_t instance_seed(std::uint64_t master, std::string_view class_name,
                            std::size_t instance) {
  return derive_seed(master, {name_hash(class_name), instance, 0});
}

std::uint64_t random_init_seed(std::uint64_t master, std::string_view class_name,
                               std::size_t instance, std::size_t k) {
  return derive_seed(master, {name_hash(class_name), instance, 1, k});
}

bool BenchReport::any_failure() const {
  return std::any_of(cells.begin(), cells.end(), [](const CellRecord& c) { return c.n_failed > 0; });
}

const CellRecord* BenchReport::find(std::string_view size_class, std::string_view algorithm,
                                    std::string_view init_scheme) const {
  for (const auto& c : cells)
    if (c.size_class == size_class && c.algorithm == algorithm && c.init_scheme == init_scheme)
      return &c;
  return nullptr;
}

namespace {

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SVDNN_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Job {
  std::size_t class_index;
  std::size_t instance;
  Algorithm algorithm;
  bool svd_init;
  std::size_t k;  // random init index
  std::uint64_t seed;
};

struct Prepared {
  ProblemInstance problem;
  Vector svd_start;
  double svd_loss;
  std::optional<std::string> svd_error;
};

std::string algorithm_order_key(std::string_view alg) {
  static const char* order[] = {"svd", "sgd", "rmsprop", "adadelta", "cg"};
  for (int i = 0; i < 5; ++i)
    if (alg == order[i]) return std::string(1, static_cast<char>('0' + i));
  return "9" + std::string(alg);
}

CellRecord aggregate(std::string size_class, std::string algorithm, std::string init,
                     std::vector<RunRecord> runs, std::optional<OptimizerSpec> spec) {
  CellRecord cell;
  cell.size_class = std::move(size_class);
  cell.algorithm = std::move(algorithm);
  cell.init_scheme = std::move(init);
  cell.spec_echo = std::move(spec);
  cell.n_runs = runs.size();
  std::vector<double> losses;
  double iters = 0.0, calls = 0.0;
  for (const auto& r : runs) {
    cell.seeds.push_back(r.seed);
    if (r.failed) {
      ++cell.n_failed;
      continue;
    }
    losses.push_back(r.final_loss);
    iters += r.iterations;
    calls += static_cast<double>(r.gradient_calls);
  }
  if (!losses.empty()) {
    const GeoMean g = geometric_mean(losses);
    cell.geo_mean_final_loss = g.value;
    cell.zero_clamped = g.zero_clamped;
    cell.mean_iterations = iters / static_cast<double>(losses.size());
    cell.mean_gradient_calls = calls / static_cast<double>(losses.size());
  }
  cell.runs = std::move(runs);
  return cell;
}

}  // namespace

BenchReport run_benchmark(const BenchConfig& config) {
  if (config.classes.empty()) throw ConfigError("classes", "at least one class required");
  if (config.iteration_budget < 1) throw ConfigError("iteration_budget", "must be >= 1");
  if (config.instances_per_class < 1) throw ConfigError("instances_per_class", "must be >= 1");
  if (config.random_inits_per_instance < 1)
    throw ConfigError("random_inits_per_instance", "must be >= 1");
  if (!(config.prescale > 0.0)) throw ConfigError("prescale", "must be > 0");
  for (const auto& c : config.classes) validate(c);

  const auto n_inst = static_cast<std::size_t>(config.instances_per_class);
  const auto n_rand = static_cast<std::size_t>(config.random_inits_per_instance);

  std::vector<std::vector<Prepared>> prepared(config.classes.size());
  std::vector<Job> jobs;
  for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
    const SizeClass& cls = config.classes[ci];
    for (std::size_t i = 0; i < n_inst; ++i) {
      Prepared p;
      p.problem = generate_problem(cls, instance_seed(config.master_seed, cls.name, i));
      try {
        const SvdInitResult init = svd_initialize(p.problem.x_train, p.problem.y_train,
                                                  cls.p_hidden, config.prescale);
        p.svd_start = flatten(init.params).values;
        p.svd_loss = mse_loss(init.params, p.problem.x_train, p.problem.y_train);
      } catch (const std::exception& e) {
        p.svd_error = e.what();
        p.svd_loss = 0.0;
      }
      prepared[ci].push_back(std::move(p));
    }
    for (Algorithm alg : config.algorithms) {
      for (std::size_t i = 0; i < n_inst; ++i) {
        jobs.push_back({ci, i, alg, true, 0, prepared[ci][i].problem.seed});
        for (std::size_t k = 0; k < n_rand; ++k)
          jobs.push_back({ci, i, alg, false, k,
                          random_init_seed(config.master_seed, cls.name, i, k)});
      }
    }
  }

  auto spec_for = [&](Algorithm alg) {
    OptimizerSpec spec = default_spec(alg, config.iteration_budget);
    spec.wall_clock_budget_s = config.wall_clock_budget_s;
    return spec;
  };

  std::vector<RunRecord> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const Job& job = jobs[j];
      const SizeClass& cls = config.classes[job.class_index];
      const Prepared& prep = prepared[job.class_index][job.instance];
      RunRecord& rec = results[j];
      rec.instance = job.instance;
      rec.seed = job.seed;
      try {
        if (job.svd_init && prep.svd_error) throw NumericalFailure(*prep.svd_error);
        const Vector start =
            job.svd_init ? prep.svd_start
                         : flatten(random_initialize(cls.layout(), job.seed)).values;
        const Objective obj = training_objective(prep.problem.x_train, prep.problem.y_train,
                                                 cls.layout(), Activation::symmetric_sigmoid);
        const RunTrace trace = optimize(spec_for(job.algorithm), obj, start);
        rec.final_loss = trace.final_loss;
        rec.iterations = trace.iterations_used;
        rec.gradient_calls = trace.gradient_calls;
        rec.terminated_by = std::string(to_string(trace.terminated_by));
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.error = e.what();
        rec.terminated_by = "numerical_failure";
      }
    }
  };
  const unsigned n_workers =
      std::min<unsigned>(worker_count(config.threads), static_cast<unsigned>(std::max<std::size_t>(1, jobs.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  BenchReport report;
  report.config = config;
  for (std::size_t ci = 0; ci < config.classes.size(); ++ci) {
    const std::string& name = config.classes[ci].name;
    std::vector<RunRecord> svd_only;
    for (std::size_t i = 0; i < n_inst; ++i) {
      const Prepared& p = prepared[ci][i];
      RunRecord r;
      r.instance = i;
      r.seed = p.problem.seed;
      r.final_loss = p.svd_loss;
      r.terminated_by = "none";
      if (p.svd_error) {
        r.failed = true;
        r.error = *p.svd_error;
        r.terminated_by = "numerical_failure";
      }
      svd_only.push_back(std::move(r));
    }
    report.cells.push_back(aggregate(name, "svd", "none", std::move(svd_only), std::nullopt));

    for (bool svd_init : {false, true}) {
      for (Algorithm alg : config.algorithms) {
        std::vector<RunRecord> runs;
        for (std::size_t j = 0; j < jobs.size(); ++j)
          if (jobs[j].class_index == ci && jobs[j].algorithm == alg && jobs[j].svd_init == svd_init)
            runs.push_back(results[j]);
        report.cells.push_back(aggregate(name, std::string(to_string(alg)),
                                         svd_init ? "svd" : "random", std::move(runs),
                                         spec_for(alg)));
      }
    }
  }

  // Canonical order: class as configured, then the table's row order.
  std::vector<std::string> class_order;
  for (const auto& c : config.classes) class_order.push_back(c.name);
  auto key = [&](const CellRecord& c) {
    const auto pos = std::find(class_order.begin(), class_order.end(), c.size_class) -
                     class_order.begin();
    const int init_rank = c.init_scheme == "none" ? 0 : c.init_scheme == "random" ? 1 : 2;
    return std::tuple(pos, init_rank, algorithm_order_key(c.algorithm));
  };
  std::stable_sort(report.cells.begin(), report.cells.end(),
                   [&](const CellRecord& a, const CellRecord& b) { return key(a) < key(b); });
  return report;
}

}  // namespace svdnn
