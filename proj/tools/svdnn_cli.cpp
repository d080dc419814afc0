// svdnn: command-line front end for the SVD / regression / network library.
//
// Every command prints one line of space-separated key=value pairs on
// stdout. Exit codes: 0 success, 2 bad input (unreadable file, invalid
// config or arguments), 3 numerical failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "svdnn/bench.hpp"
#include "svdnn/csv.hpp"
#include "svdnn/errors.hpp"
#include "svdnn/initsvd.hpp"
#include "svdnn/linalg.hpp"
#include "svdnn/network.hpp"
#include "svdnn/optimize.hpp"
#include "svdnn/regress.hpp"

namespace fs = std::filesystem;
using namespace svdnn;

namespace {

constexpr int kExitBadInput = 2;
constexpr int kExitNumerical = 3;

std::string kv(const std::string& key, const std::string& value) { return key + "=" + value; }
std::string kv(const std::string& key, double value) { return key + "=" + format_double(value); }
std::string kv(const std::string& key, std::size_t value) { return key + "=" + std::to_string(value); }

void summary(std::initializer_list<std::string> items) {
  bool first = true;
  for (const auto& s : items) {
    std::cout << (first ? "" : " ") << s;
    first = false;
  }
  std::cout << '\n';
}

Matrix column_matrix(std::span<const double> v) { return Matrix(v.size(), 1, Vector(v.begin(), v.end())); }

double regression_mse(const Matrix& pred, const Matrix& y) {
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred.data()[i] - y.data()[i];
    s += e * e;
  }
  return pred.size() ? s / static_cast<double>(pred.size()) : 0.0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svdnn: SVD machinery, SVD-initialized networks and optimizer benchmarks"};
  app.require_subcommand(1);
  std::uint64_t seed = 42;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  };

  // svd
  std::string svd_input, svd_prefix = "svd";
  std::size_t svd_rank = 0;
  auto* svd_cmd = app.add_subcommand("svd", "Economical SVD of a CSV matrix");
  svd_cmd->add_option("matrix", svd_input, "Input matrix (CSV)")->required();
  auto* rank_opt = svd_cmd->add_option("--rank", svd_rank, "Keep only the k leading triplets");
  svd_cmd->add_option("--out", svd_prefix, "Output prefix for _U.csv, _s.csv, _V.csv")
      ->capture_default_str();
  add_seed(svd_cmd);

  // pinv
  std::string pinv_input, pinv_out = "pinv.csv";
  double pinv_tol = -1.0;
  auto* pinv_cmd = app.add_subcommand("pinv", "Moore-Penrose pseudo-inverse of a CSV matrix");
  pinv_cmd->add_option("matrix", pinv_input, "Input matrix (CSV)")->required();
  pinv_cmd->add_option("--out", pinv_out, "Output CSV")->capture_default_str();
  pinv_cmd->add_option("--rank-tol", pinv_tol, "Relative singular value cutoff (default eps*max(m,n))");
  add_seed(pinv_cmd);

  // regress
  std::string reg_x, reg_y, reg_prefix = "regress";
  bool reg_bias = false;
  auto* reg_cmd = app.add_subcommand("regress", "Least-squares fit Y = B X (+ a)");
  reg_cmd->add_option("--x", reg_x, "Inputs, one column per example")->required();
  reg_cmd->add_option("--y", reg_y, "Targets, one column per example")->required();
  reg_cmd->add_flag("--bias", reg_bias, "Fit a bias vector");
  reg_cmd->add_option("--out", reg_prefix, "Output prefix for _B.csv and _a.csv")->capture_default_str();
  add_seed(reg_cmd);

  // init
  std::string init_x, init_y, init_out, init_act = "symmetric_sigmoid";
  std::size_t init_hidden = 0;
  double init_prescale = 1.0;
  auto* init_cmd = app.add_subcommand("init", "SVD-based network initialization");
  init_cmd->add_option("--x", init_x, "Inputs (CSV)")->required();
  init_cmd->add_option("--y", init_y, "Targets (CSV)")->required();
  init_cmd->add_option("--hidden", init_hidden, "Hidden layer width")->required();
  init_cmd->add_option("--prescale", init_prescale, "Hidden weight scale, compensated at the output")
      ->capture_default_str();
  init_cmd->add_option("--activation", init_act, "symmetric_sigmoid or linear")->capture_default_str();
  init_cmd->add_option("--out", init_out, "Output params JSON")->required();
  add_seed(init_cmd);

  // train
  std::string tr_params, tr_x, tr_y, tr_opt, tr_trace, tr_out;
  int tr_iters = 2000;
  auto* train_cmd = app.add_subcommand("train", "Optimize network parameters on a data set");
  train_cmd->add_option("--params", tr_params, "Starting params JSON")->required();
  train_cmd->add_option("--x", tr_x, "Inputs (CSV)")->required();
  train_cmd->add_option("--y", tr_y, "Targets (CSV)")->required();
  train_cmd->add_option("--optimizer", tr_opt, "sgd, rmsprop, adadelta or cg")
      ->required()
      ->check(CLI::IsMember({"sgd", "rmsprop", "adadelta", "cg"}));
  train_cmd->add_option("--iters", tr_iters, "Iteration budget")->capture_default_str();
  train_cmd->add_option("--trace", tr_trace, "Write the per-iteration loss as CSV");
  train_cmd->add_option("--out", tr_out, "Write the trained params JSON");
  add_seed(train_cmd);

  // problem
  std::string prob_class = "A", prob_dir = ".";
  auto* prob_cmd = app.add_subcommand("problem", "Write a teacher-network problem instance");
  prob_cmd->add_option("--class", prob_class, "Built-in size class (A, B, C)")->capture_default_str();
  prob_cmd->add_option("--out-dir", prob_dir, "Directory for X.csv, Y.csv, teacher.json")
      ->capture_default_str();
  add_seed(prob_cmd);

  // bench
  std::string bench_config, bench_dir;
  unsigned bench_threads = 0;
  auto* bench_cmd = app.add_subcommand("bench", "Run the optimizer x initialization grid");
  bench_cmd->add_option("--config", bench_config, "Benchmark config JSON")->required();
  bench_cmd->add_option("--out-dir", bench_dir, "Directory for report.{csv,json,md}")->required();
  bench_cmd->add_option("--threads", bench_threads, "Worker threads (default SVDNN_THREADS or all cores)");
  auto* bench_seed = bench_cmd->add_option("--seed", seed, "Master seed (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitBadInput;
  }

  try {
    if (*svd_cmd) {
      const Matrix a = read_matrix_csv(svd_input);
      SvdFactors f = svd_decompose(a);
      const std::size_t rank = numerical_rank(f, default_rank_tol(a.rows(), a.cols()));
      if (*rank_opt) f = truncate(f, svd_rank);
      write_matrix_csv(svd_prefix + "_U.csv", f.u);
      write_matrix_csv(svd_prefix + "_s.csv", column_matrix(f.s));
      write_matrix_csv(svd_prefix + "_V.csv", f.v);
      summary({kv("command", "svd"), kv("rows", a.rows()), kv("cols", a.cols()),
               kv("kept", f.rank()), kv("numerical_rank", rank),
               kv("s_max", f.rank() ? f.s.front() : 0.0)});
    } else if (*pinv_cmd) {
      const Matrix a = read_matrix_csv(pinv_input);
      const Matrix p = pseudo_inverse(a, pinv_tol);
      write_matrix_csv(pinv_out, p);
      const double residual = frobenius_norm(a * p * a - a);
      summary({kv("command", "pinv"), kv("rows", p.rows()), kv("cols", p.cols()),
               kv("residual_fro", residual), kv("out", pinv_out)});
    } else if (*reg_cmd) {
      const Matrix x = read_matrix_csv(reg_x);
      const Matrix y = read_matrix_csv(reg_y);
      const AffineMap fit = fit_least_squares(x, y, reg_bias);
      write_matrix_csv(reg_prefix + "_B.csv", fit.weights);
      write_matrix_csv(reg_prefix + "_a.csv", column_matrix(fit.bias));
      summary({kv("command", "regress"), kv("outputs", fit.weights.rows()),
               kv("inputs", fit.weights.cols()), kv("rank_used", fit.rank_used),
               kv("mse", regression_mse(predict(fit, x), y))});
    } else if (*init_cmd) {
      const Matrix x = read_matrix_csv(init_x);
      const Matrix y = read_matrix_csv(init_y);
      const SvdInitResult init =
          svd_initialize(x, y, init_hidden, init_prescale, parse_activation(init_act));
      write_text_file(init_out, params_to_json(init.params));
      if (init.warning) std::cerr << "warning: " << *init.warning << '\n';
      summary({kv("command", "init"), kv("hidden", init_hidden),
               kv("loss", mse_loss(init.params, x, y)), kv("out", init_out)});
    } else if (*train_cmd) {
      const MlpParams start = params_from_json(read_text_file(tr_params));
      const Matrix x = read_matrix_csv(tr_x);
      const Matrix y = read_matrix_csv(tr_y);
      const Objective obj = training_objective(x, y, start.layout(), start.activation);
      const RunTrace trace =
          optimize(default_spec(parse_algorithm(tr_opt), tr_iters), obj, flatten(start).values);
      if (!tr_trace.empty()) {
        std::string csv = "iteration,loss\n";
        for (std::size_t i = 0; i < trace.loss_history.size(); ++i)
          csv += std::to_string(i) + "," + format_double(trace.loss_history[i]) + "\n";
        write_text_file(tr_trace, csv);
      }
      if (!tr_out.empty())
        write_text_file(tr_out, params_to_json(unflatten(trace.final_params, start.layout(),
                                                         start.activation)));
      summary({kv("command", "train"), kv("optimizer", tr_opt),
               kv("iterations", static_cast<std::size_t>(trace.iterations_used)),
               kv("gradient_calls", static_cast<std::size_t>(trace.gradient_calls)),
               kv("initial_loss", trace.loss_history.front()), kv("final_loss", trace.final_loss),
               kv("terminated_by", std::string(to_string(trace.terminated_by)))});
    } else if (*prob_cmd) {
      const auto cls = find_builtin_class(prob_class);
      if (!cls) throw InvalidInput("unknown size class '" + prob_class + "'");
      const ProblemInstance inst = generate_problem(*cls, seed);
      fs::create_directories(prob_dir);
      write_matrix_csv(fs::path(prob_dir) / "X.csv", inst.x_train);
      write_matrix_csv(fs::path(prob_dir) / "Y.csv", inst.y_train);
      write_text_file(fs::path(prob_dir) / "teacher.json", params_to_json(inst.teacher));
      summary({kv("command", "problem"), kv("class", cls->name), kv("seed", std::to_string(seed)),
               kv("teacher_loss", mse_loss(inst.teacher, inst.x_train, inst.y_train))});
    } else if (*bench_cmd) {
      BenchConfig cfg = parse_bench_config(read_text_file(bench_config));
      if (*bench_seed) cfg.master_seed = seed;
      cfg.threads = bench_threads;
      const BenchReport report = run_benchmark(cfg);
      fs::create_directories(bench_dir);
      write_text_file(fs::path(bench_dir) / "report.csv", emit_report(report, ReportFormat::csv));
      write_text_file(fs::path(bench_dir) / "report.json", emit_report(report, ReportFormat::json));
      write_text_file(fs::path(bench_dir) / "report.md", emit_report(report, ReportFormat::markdown));
      std::size_t runs = 0, failed = 0;
      for (const auto& c : report.cells) {
        runs += c.n_runs;
        failed += c.n_failed;
      }
      summary({kv("command", "bench"), kv("cells", report.cells.size()), kv("runs", runs),
               kv("failed", failed), kv("out_dir", bench_dir)});
      if (report.any_failure()) return kExitNumerical;
    }
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return 0;
}
