#include "acpkan/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <sstream>

#include "acpkan/checkpoint.hpp"
#include "acpkan/config.hpp"
#include "acpkan/io.hpp"
#include "acpkan/pde.hpp"
#include "acpkan/rankdiag.hpp"
#include "acpkan/selfcheck.hpp"
#include "acpkan/train.hpp"

namespace acpkan {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::filesystem::path resolve_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("ACKAN_OUT_DIR"); env && *env) return env;
  return "out";
}

std::string metrics_line(const Metrics& m) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "rmae=%.17g rrmse=%.17g", m.rmae, m.rrmse);
  return buf;
}

// Flags shared by train / eval / fit-function.
struct TrainFlags {
  std::string config;
  std::string out_dir;
  std::optional<std::string> problem;
  std::optional<std::string> model;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  bool no_rga = false;
  bool no_log = false;
  std::optional<double> eta;
  std::optional<double> beta_w;
  std::optional<double> eps;
  std::optional<int> gra_stride;
  std::optional<double> lr;
  std::optional<int> metrics_stride;
  std::optional<int> grid;
  bool serial = false;

  void add_common(CLI::App* c) {
    c->add_option("--config", config, "key = value config file; flags override its keys");
    c->add_option("--out-dir", out_dir, "output directory (default: $ACKAN_OUT_DIR, then ./out)");
    c->add_option("--seed", seed, "random seed");
    c->add_option("--grid", grid, "residual collocation points per axis");
  }

  void add_training(CLI::App* c) {
    c->add_option("--epochs", epochs, "optimization steps");
    c->add_option("--lr", lr, "AdamW learning rate");
    c->add_option("--metrics-stride", metrics_stride, "steps between metric evaluations");
    c->add_flag("--serial", serial, "use the single-tape reference kernel");
  }

  void add_rga(CLI::App* c) {
    c->add_flag("--no-rga", no_rga, "static unit loss weights");
    c->add_flag("--no-log", no_log, "use raw GRA weights instead of their logarithm");
    c->add_option("--eta", eta, "RBA smoothing rate");
    c->add_option("--beta-w", beta_w, "GRA smoothing rate");
    c->add_option("--eps", eps, "GRA stabilizer epsilon");
    c->add_option("--gra-stride", gra_stride, "steps between GRA updates");
  }

  TrainConfig build(TrainConfig c) const {
    if (!config.empty()) apply_config(c, read_key_values(config));
    if (problem) c.problem = *problem;
    if (model) c.model = *model;
    if (epochs) c.epochs = *epochs;
    if (seed) c.seed = *seed;
    if (no_rga) c.rga.enabled = false;
    if (no_log) c.rga.use_log = false;
    if (eta) c.rga.eta = *eta;
    if (beta_w) c.rga.beta_w = *beta_w;
    if (eps) c.rga.eps = *eps;
    if (gra_stride) c.rga.gra_stride = *gra_stride;
    if (lr) c.adam.lr = *lr;
    if (metrics_stride) c.metrics_stride = *metrics_stride;
    if (grid) c.problem_options.grid = *grid;
    if (serial) c.parallel = false;
    c.problem_options.seed = c.seed;
    c.validate();
    return c;
  }
};

PdeProblem load_problem(const TrainConfig& c) {
  const auto& names = problem_names();
  if (std::find(names.begin(), names.end(), c.problem) == names.end()) {
    throw UsageError("unknown problem '" + c.problem + "'");
  }
  return make_problem(c.problem, c.problem_options);
}

int run_training(const TrainConfig& c, const std::filesystem::path& out_dir, const std::string& stem,
                 std::ostream& out) {
  const PdeProblem problem = load_problem(c);
  auto model = make_model(c, problem.dim);
  std::ostringstream csv;
  const TrainResult result = train(c, problem, *model, &csv);
  write_file_atomic(out_dir / (stem + "metrics.csv"), csv.str());
  checkpoint_save(*model, out_dir / (stem + "model.ckpt"));
  out << "steps=" << result.history.size() << " loss=" << result.history.back().loss_total << '\n';
  if (result.final) out << metrics_line(*result.final) << '\n';
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"AC-PKAN physics-informed networks", "acpkan"};
  app.require_subcommand(1);

  TrainFlags tf;
  auto* train_cmd = app.add_subcommand("train", "train a model on a benchmark problem");
  train_cmd->add_option("--problem", tf.problem, "reaction | wave | cdr | poisson-het | poisson-geom | fit");
  train_cmd->add_option("--model", tf.model, "acpkan | mlp");
  tf.add_common(train_cmd);
  tf.add_training(train_cmd);
  tf.add_rga(train_cmd);

  TrainFlags ef;
  std::string checkpoint;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint against the problem's reference");
  eval_cmd->add_option("--problem", ef.problem, "problem name");
  eval_cmd->add_option("--checkpoint", checkpoint, "checkpoint file (default: <out-dir>/model.ckpt)");
  ef.add_common(eval_cmd);

  int width = 16, degree = 8, depth = 20, trials = 50;
  double eps_rank = 1e-6;
  std::uint64_t rank_seed = 0;
  std::string rank_out;
  auto* rank_cmd = app.add_subcommand("rank-scan", "epsilon-rank of random Chebyshev stacks versus depth");
  rank_cmd->add_option("--width", width, "layer width")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--degree", degree, "Chebyshev degree")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--depth", depth, "maximum depth")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--trials", trials, "independent trials")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--eps,--eps-rank", eps_rank, "relative singular value cutoff")->check(CLI::PositiveNumber);
  rank_cmd->add_option("--seed", rank_seed, "base seed; trial t uses seed + t");
  rank_cmd->add_option("--out-dir", rank_out, "output directory");

  TrainFlags ff;
  auto* fit_cmd = app.add_subcommand("fit-function", "fit the piecewise 1D target with the small AC-PKAN");
  ff.add_common(fit_cmd);
  ff.add_training(fit_cmd);

  std::string gc_problem = "reaction";
  std::uint64_t gc_seed = 0;
  std::size_t gc_params = 256;
  auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference check of parameter and input derivatives");
  grad_cmd->add_option("--problem", gc_problem, "problem name");
  grad_cmd->add_option("--seed", gc_seed, "model and sampling seed");
  grad_cmd->add_option("--params", gc_params, "parameters to check (0 = all)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train_cmd) {
      TrainConfig defaults;
      const TrainConfig c = tf.build(defaults);
      return run_training(c, resolve_out_dir(tf.out_dir), "", out);
    }
    if (*eval_cmd) {
      const TrainConfig c = ef.build(TrainConfig{});
      const PdeProblem problem = load_problem(c);
      if (!problem.reference) throw UsageError("problem '" + c.problem + "' has no reference solution");
      const auto path = checkpoint.empty() ? resolve_out_dir(ef.out_dir) / "model.ckpt"
                                           : std::filesystem::path(checkpoint);
      const auto model = checkpoint_load(path);
      if (model->input_dim() != problem.dim) throw UsageError("checkpoint input dimension does not match the problem");
      out << metrics_line(metrics_eval(*model, *problem.reference)) << '\n';
      return kExitOk;
    }
    if (*rank_cmd) {
      const RankReport rep = rank_scan(width, degree, depth, trials, eps_rank, rank_seed);
      write_file_atomic(resolve_out_dir(rank_out) / "rank_scan.csv", rep.to_csv());
      for (int d = 1; d <= depth; ++d) out << "depth=" << d << " median_rank=" << rep.median_rank(d) << '\n';
      return kExitOk;
    }
    if (*fit_cmd) {
      TrainConfig c = ff.build(fit_function_config());
      return run_training(c, resolve_out_dir(ff.out_dir), "fit_", out);
    }
    if (*grad_cmd) {
      TrainConfig c;
      c.problem = gc_problem;
      c.seed = gc_seed;
      c.problem_options.grid = 3;
      c.problem_options.boundary = 3;
      c.problem_options.eval_grid = 3;
      const PdeProblem problem = load_problem(c);
      const auto model = make_model(c, problem.dim);
      GradcheckOptions o;
      o.max_params = gc_params;
      o.seed = gc_seed;
      const GradcheckReport r = run_gradcheck(*model, problem, o);
      out << "params_checked=" << r.params_checked << " param_rel_error=" << r.param_rel_error
          << " jet_first_error=" << r.jet_first_error << " jet_second_error=" << r.jet_second_error << '\n';
      return r.passed() ? kExitOk : kExitFailure;
    }
  } catch (const NumericalAbort& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace acpkan
