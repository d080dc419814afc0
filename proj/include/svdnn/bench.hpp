#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "svdnn/errors.hpp"
#include "svdnn/network.hpp"
#include "svdnn/optimize.hpp"

namespace svdnn {

struct SizeClass {
  std::string name;
  std::size_t n_input = 0;
  std::size_t m_output = 0;
  std::size_t p_hidden = 0;
  std::size_t n_train = 0;

  Layout layout() const noexcept { return {n_input, p_hidden, m_output}; }
  friend bool operator==(const SizeClass&, const SizeClass&) = default;
};

/// Problem classes A, B and C: (input, output, hidden, training examples)
/// = (100, 50, 20, 80), (300, 150, 60, 240), (1000, 500, 200, 800).
std::span<const SizeClass> builtin_classes();
std::optional<SizeClass> find_builtin_class(std::string_view name);

/// Output dimension times training-set size.
std::size_t constraint_count(const SizeClass& cls);

/// Requires p_hidden < min(n_input, m_output) and non-zero dimensions.
void validate(const SizeClass& cls);

struct ProblemInstance {
  Matrix x_train;  // n x N
  Matrix y_train;  // m x N
  MlpParams teacher;
  std::uint64_t seed = 0;
};

/// Teacher-network instance: random_initialize'd teacher, standard-normal
/// inputs, targets = teacher outputs, so the training loss has an exact zero.
ProblemInstance generate_problem(const SizeClass& cls, std::uint64_t seed);

/// Full-batch training loss of a network over a flat parameter vector.
Objective training_objective(const Matrix& x, const Matrix& y, const Layout& layout,
                             Activation activation);

struct GeoMean {
  double value = 0.0;
  bool zero_clamped = false;
};

/// exp(mean(log v)); zeros are clamped to 1e-300 and flagged, negatives
/// and an empty input are rejected.
GeoMean geometric_mean(std::span<const double> values);

class ConfigError : public InvalidInput {
 public:
  ConfigError(const std::string& field, const std::string& why)
      : InvalidInput("config field '" + field + "': " + why), field_(field) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

struct BenchConfig {
  std::vector<SizeClass> classes;
  std::vector<Algorithm> algorithms{Algorithm::sgd, Algorithm::rmsprop, Algorithm::adadelta,
                                    Algorithm::cg};
  std::uint64_t master_seed = 42;
  int iteration_budget = 2000;
  int instances_per_class = 3;
  int random_inits_per_instance = 5;
  double wall_clock_budget_s = 1800.0;
  double prescale = 1.0;
  /// Worker threads; 0 means SVDNN_THREADS or the hardware concurrency.
  unsigned threads = 0;

  friend bool operator==(const BenchConfig&, const BenchConfig&) = default;
};

/// Parses the JSON config. Classes are given by built-in name ("A") or as
/// objects {name, n_input, m_output, p_hidden, n_train}. Missing fields keep
/// their defaults; bad ones raise ConfigError naming the field.
BenchConfig parse_bench_config(std::string_view json_text);
std::string bench_config_to_json(const BenchConfig& config);

/// Seed scheme. Every seed is derive_seed(master, {counters...}) with
/// counters (class-name hash, instance, role[, k]); role 0 is the problem
/// instance and role 1 the k-th random initialization.
std::uint64_t instance_seed(std::uint64_t master, std::string_view class_name,
                            std::size_t instance);
std::uint64_t random_init_seed(std::uint64_t master, std::string_view class_name,
                               std::size_t instance, std::size_t k);

struct RunRecord {
  std::size_t instance = 0;
  std::uint64_t seed = 0;  // init seed (random) or instance seed (svd)
  double final_loss = 0.0;
  int iterations = 0;
  long gradient_calls = 0;
  std::string terminated_by;
  bool failed = false;
  std::string error;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct CellRecord {
  std::string size_class;
  std::string algorithm;    // "svd" for the no-optimization row
  std::string init_scheme;  // "none", "random" or "svd"
  std::optional<double> geo_mean_final_loss;  // empty when every run failed
  double mean_iterations = 0.0;
  double mean_gradient_calls = 0.0;
  std::size_t n_runs = 0;
  std::size_t n_failed = 0;
  bool zero_clamped = false;
  std::vector<std::uint64_t> seeds;
  std::optional<OptimizerSpec> spec_echo;
  std::vector<RunRecord> runs;

  friend bool operator==(const CellRecord&, const CellRecord&) = default;
};

struct BenchReport {
  BenchConfig config;
  std::vector<CellRecord> cells;

  bool any_failure() const;
  const CellRecord* find(std::string_view size_class, std::string_view algorithm,
                         std::string_view init_scheme) const;
};

/// Runs the (class x algorithm x initialization) grid. Failed runs are
/// recorded in their cell, not propagated. Output is independent of the
/// worker count.
BenchReport run_benchmark(const BenchConfig& config);

enum class ReportFormat { csv, json, markdown };
ReportFormat parse_report_format(std::string_view name);

std::string emit_report(const BenchReport& report, ReportFormat format);

/// Inverse of the json emitter (full fidelity).
BenchReport report_from_json(std::string_view text);
/// Inverse of the csv emitter; per-run data and spec echoes are not part of
/// the csv view and come back empty.
std::vector<CellRecord> cells_from_csv(std::string_view text);

}  // namespace svdnn
