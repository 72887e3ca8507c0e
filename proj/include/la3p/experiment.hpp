#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "la3p/agent.hpp"
#include "la3p/env.hpp"
#include "la3p/losses.hpp"

namespace la3p {

/// Offset between a training seed and its evaluation environment seed.
inline constexpr std::uint64_t kEvalSeedOffset = 100;

struct RunConfig {
  std::vector<EnvKind> envs{EnvKind::PointMass1D};
  std::vector<Scheme> schemes{Scheme::La3p};
  double lambda = 0.5;
  std::optional<double> alpha;  // unset: 0.6 for per, 0.4 otherwise
  double beta = 0.4;
  double gamma = 0.99;
  double zeta = 0.005;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  std::vector<int> hidden{64, 64};
  std::size_t batch = 64;
  std::size_t buffer_capacity = 100000;
  std::size_t start_steps = 1000;
  std::size_t total_steps = 40000;
  std::size_t eval_every = 500;
  std::size_t eval_episodes = 5;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out_dir = "results";
  bool double_target_update = true;
  LossKind uniform_loss = LossKind::Mse;
  std::size_t jobs = 1;
  bool smooth = false;

  /// Throws std::invalid_argument naming the first out-of-range field.
  void validate() const;
  double alpha_for(Scheme scheme) const;
  AgentConfig agent_config(Scheme scheme, double lambda) const;

  /// Hyper-parameters of the full-scale setup (256 units, batch 256,
  /// 25k start steps, 1M steps, evaluation every 1000 steps over 10 episodes).
  static RunConfig full_scale();
};

/// What the command line asked for besides the run configuration.
struct CliRequest {
  RunConfig config;
  std::optional<std::string> probe;  // "lemma1" or "theorem1"
  bool timing = false;
  std::vector<double> lambda_sweep;
};

/// Parse command-line flags (and an optional --config key = value file).
/// Throws std::invalid_argument on bad input; returns nullopt after --help.
std::optional<CliRequest> parse_cli(int argc, const char* const* argv);

struct EvalRecord {
  std::size_t step = 0;
  std::uint64_t seed = 0;
  double mean_return = 0.0;
  double wall_clock_ms = 0.0;
};

struct RunResult {
  EnvKind env = EnvKind::PointMass1D;
  Scheme scheme = Scheme::La3p;
  double lambda = 0.5;
  std::uint64_t seed = 0;
  std::vector<EvalRecord> evals;
  std::size_t update_steps = 0;
  double total_ms = 0.0;
  double update_ms = 0.0;

  /// Mean return over the last (up to) 10 evaluations.
  double last10_mean() const;
  std::string label() const;
};

/// Train and evaluate one (env, scheme, lambda, seed) combination.
RunResult run_single(const RunConfig& config, EnvKind env, Scheme scheme, double lambda,
                     std::uint64_t seed);

/// Mean return of the deterministic policy on the evaluation environment.
double evaluate_policy(Agent& agent, EnvKind env, std::uint64_t train_seed, std::size_t episodes);

struct AggregateRow {
  EnvKind env = EnvKind::PointMass1D;
  Scheme scheme = Scheme::La3p;
  double lambda = 0.5;
  std::vector<double> per_seed;  // last-10 average per seed
  double mean = 0.0;
  double ci95 = 0.0;
  double mean_runtime_ms = 0.0;
};

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs);

struct ExperimentResult {
  std::vector<RunResult> runs;
  std::vector<AggregateRow> rows;
};

/// Run the env x scheme x seed grid, writing one CSV and one timing log per
/// run plus summary.json into config.out_dir.
ExperimentResult run(const RunConfig& config);

/// Run LA3P once per lambda (ascending) over the configured envs and seeds.
ExperimentResult lambda_sweep(const RunConfig& config, std::vector<double> lambdas);

struct TimingRow {
  Scheme scheme = Scheme::Uniform;
  std::size_t runs = 0;
  double mean_ms = 0.0;
  double ci95_ms = 0.0;
  double increase_pct = 0.0;  // relative to the uniform mean
};

/// Mean +- 95% CI run time per scheme and its increase over uniform.
/// Throws if there are no runs or no uniform baseline.
std::vector<TimingRow> timing_report(const std::vector<RunResult>& runs);
/// Same, from the *_timing.json logs in a results directory.
std::vector<TimingRow> timing_report(const std::filesystem::path& results_dir);

std::string format_timing_table(const std::vector<TimingRow>& rows);
std::string format_aggregate_table(const std::vector<AggregateRow>& rows);

/// Trailing sliding-window mean (window clipped at the start of the series).
std::vector<double> sliding_window_mean(std::span<const double> values, std::size_t window);

/// CSV with header step,seed,mean_return,wall_clock_ms.
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records);

/// Run the "lemma1" or "theorem1" diagnostics probe and write its CSV and
/// JSON summary into config.out_dir. Returns the JSON summary.
std::string run_probe(const RunConfig& config, const std::string& which, std::uint64_t seed);

}  // namespace la3p
