#include "la3p/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "la3p/diagnostics.hpp"
#include "la3p/stats.hpp"

namespace la3p {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string format_lambda(double lambda) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", lambda);
  return buf;
}

void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void prepare_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw std::runtime_error("output directory " + dir.string() + " is not usable");
  }
  const fs::path probe = dir / ".la3p_write_probe";
  std::ofstream out(probe);
  if (!out) throw std::runtime_error("output directory " + dir.string() + " is not writable");
  out.close();
  fs::remove(probe, ec);
}

/// Run `count` independent tasks on up to `jobs` threads.
template <typename Task>
void run_parallel(std::size_t count, std::size_t jobs, Task task) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(count, 1));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr error;
  std::vector<std::jthread> workers;
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (error) std::rethrow_exception(error);
}

nlohmann::json timing_json(const RunResult& r) {
  return {{"env", std::string(to_string(r.env))},
          {"scheme", std::string(to_string(r.scheme))},
          {"lambda", r.lambda},
          {"seed", r.seed},
          {"update_steps", r.update_steps},
          {"total_ms", r.total_ms},
          {"update_ms", r.update_ms}};
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("invalid config: " + what); };
  if (envs.empty()) fail("no environment selected");
  if (schemes.empty()) fail("no scheme selected");
  if (!(lambda >= 0.0 && lambda <= 1.0)) fail("lambda must lie in [0, 1]");
  if (alpha && !(*alpha > 0.0 && *alpha <= 1.0)) fail("alpha must lie in (0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) fail("beta must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma must lie in [0, 1)");
  if (!(zeta >= 0.0 && zeta <= 1.0)) fail("zeta must lie in [0, 1]");
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) fail("learning rates must be positive");
  if (hidden.empty() || std::any_of(hidden.begin(), hidden.end(), [](int h) { return h <= 0; })) {
    fail("hidden layer sizes must be positive");
  }
  if (batch == 0) fail("batch must be positive");
  if (buffer_capacity < batch) fail("buffer capacity must hold at least one batch");
  if (start_steps > total_steps) fail("start-steps exceeds steps");
  if (eval_every == 0) fail("eval-every must be positive");
  if (eval_episodes == 0) fail("eval-episodes must be positive");
  if (seeds.empty()) fail("no seeds");
  if (jobs == 0) fail("jobs must be positive");
}

double RunConfig::alpha_for(Scheme scheme) const {
  if (alpha) return *alpha;
  return scheme == Scheme::ClassicPer ? 0.6 : 0.4;
}

AgentConfig RunConfig::agent_config(Scheme scheme, double lam) const {
  AgentConfig ac = default_agent_config(scheme);
  ac.hidden = hidden;
  ac.actor_lr = actor_lr;
  ac.critic_lr = critic_lr;
  ac.gamma = gamma;
  ac.zeta = zeta;
  ac.batch_size = batch;
  ac.start_steps = start_steps;
  ac.scheme.lambda = lam;
  ac.alpha = alpha_for(scheme);
  ac.beta0 = beta;
  ac.anneal_steps = total_steps > start_steps ? total_steps - start_steps : 1;
  ac.double_target_update = double_target_update;
  ac.uniform_loss = uniform_loss;
  return ac;
}

RunConfig RunConfig::full_scale() {
  RunConfig c;
  c.hidden = {256, 256};
  c.batch = 256;
  c.buffer_capacity = 1000000;
  c.start_steps = 25000;
  c.total_steps = 1000000;
  c.eval_every = 1000;
  c.eval_episodes = 10;
  c.seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  return c;
}

std::optional<CliRequest> parse_cli(int argc, const char* const* argv) {
  CLI::App app{"Prioritized experience replay experiments for off-policy actor-critic agents",
               "la3p"};
  app.set_config("--config", "", "Read options from a flat key = value file");

  std::vector<std::string> envs, schemes;
  double lambda = 0, alpha = 0, beta = 0, gamma = 0, zeta = 0, lr = 0;
  std::uint64_t seed = 0;
  std::size_t n_seeds = 1, steps = 0, start_steps = 0, batch = 0, eval_every = 0, eval_episodes = 0,
              capacity = 0, jobs = 1;
  std::vector<int> hidden;
  std::string out, probe, uniform_loss;
  std::vector<double> sweep;
  bool full_scale = false, timing = false, smooth = false, single_target = false;

  auto* o_env = app.add_option("--env", envs, "Environment(s): PointMass1D, PointMass2D, PendulumSwingUp, AnalyticBandit")
                    ->delimiter(',');
  auto* o_scheme =
      app.add_option("--scheme", schemes, "Sampling scheme(s): uniform, per, lap, la3p")->delimiter(',');
  auto* o_lambda = app.add_option("--lambda", lambda, "LA3P uniform fraction");
  auto* o_alpha = app.add_option("--alpha", alpha, "Priority exponent (default 0.6 per, 0.4 otherwise)");
  auto* o_beta = app.add_option("--beta", beta, "Initial importance-sampling exponent (per)");
  auto* o_gamma = app.add_option("--gamma", gamma, "Discount factor");
  auto* o_zeta = app.add_option("--zeta", zeta, "Target network update rate");
  auto* o_lr = app.add_option("--lr", lr, "Actor and critic learning rate");
  auto* o_seed = app.add_option("--seed", seed, "First seed");
  auto* o_seeds = app.add_option("--seeds", n_seeds, "Number of consecutive seeds");
  auto* o_steps = app.add_option("--steps", steps, "Total environment steps per run");
  auto* o_start = app.add_option("--start-steps", start_steps, "Initial uniform-random steps");
  auto* o_batch = app.add_option("--batch", batch, "Mini-batch size N");
  auto* o_eval_every = app.add_option("--eval-every", eval_every, "Steps between evaluations");
  auto* o_eval_eps = app.add_option("--eval-episodes", eval_episodes, "Episodes per evaluation");
  auto* o_capacity = app.add_option("--buffer", capacity, "Replay buffer capacity");
  auto* o_hidden = app.add_option("--hidden", hidden, "Hidden layer widths")->delimiter(',');
  auto* o_out = app.add_option("--out", out, "Output directory");
  auto* o_jobs = app.add_option("--jobs", jobs, "Runs executed in parallel");
  auto* o_uloss = app.add_option("--uniform-loss", uniform_loss, "Critic loss of the uniform scheme: mse or pal");
  app.add_option("--lambda-sweep", sweep, "Run LA3P for each listed lambda")->delimiter(',');
  app.add_option("--probe", probe, "Run a diagnostics probe instead of training")
      ->check(CLI::IsMember({"lemma1", "theorem1"}));
  app.add_flag("--paper-scale", full_scale, "Start from the full-scale hyper-parameters");
  app.add_flag("--timing", timing, "Print the per-scheme run-time table");
  app.add_flag("--smooth", smooth, "Also write 5-evaluation smoothed curves");
  app.add_flag("--single-target-update", single_target,
               "Update LA3P targets once per step instead of after each actor update");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return std::nullopt;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw std::invalid_argument(e.what());
  }

  CliRequest req;
  RunConfig& c = req.config;
  if (full_scale) c = RunConfig::full_scale();
  if (o_env->count()) {
    c.envs.clear();
    for (const auto& e : envs) c.envs.push_back(parse_env_kind(e));
  }
  if (o_scheme->count()) {
    c.schemes.clear();
    for (const auto& s : schemes) c.schemes.push_back(parse_scheme(s));
  }
  if (o_lambda->count()) c.lambda = lambda;
  if (o_alpha->count()) c.alpha = alpha;
  if (o_beta->count()) c.beta = beta;
  if (o_gamma->count()) c.gamma = gamma;
  if (o_zeta->count()) c.zeta = zeta;
  if (o_lr->count()) c.actor_lr = c.critic_lr = lr;
  if (o_seed->count() || o_seeds->count()) {
    const std::uint64_t first = o_seed->count() ? seed : (c.seeds.empty() ? 0 : c.seeds.front());
    const std::size_t n = o_seeds->count() ? n_seeds : (o_seed->count() ? 1 : c.seeds.size());
    c.seeds.clear();
    for (std::size_t i = 0; i < n; ++i) c.seeds.push_back(first + i);
  }
  if (o_steps->count()) c.total_steps = steps;
  if (o_start->count()) c.start_steps = start_steps;
  if (o_batch->count()) c.batch = batch;
  if (o_eval_every->count()) c.eval_every = eval_every;
  if (o_eval_eps->count()) c.eval_episodes = eval_episodes;
  if (o_capacity->count()) c.buffer_capacity = capacity;
  if (o_hidden->count()) c.hidden = hidden;
  if (o_out->count()) c.out_dir = out;
  if (o_jobs->count()) c.jobs = jobs;
  if (o_uloss->count()) {
    if (uniform_loss == "mse") {
      c.uniform_loss = LossKind::Mse;
    } else if (uniform_loss == "pal") {
      c.uniform_loss = LossKind::Pal;
    } else {
      throw std::invalid_argument("--uniform-loss must be mse or pal");
    }
  }
  c.smooth = smooth;
  c.double_target_update = !single_target;
  c.validate();

  if (!probe.empty()) req.probe = probe;
  req.timing = timing;
  req.lambda_sweep = sweep;
  for (double l : sweep) {
    if (!(l >= 0.0 && l <= 1.0)) throw std::invalid_argument("invalid config: sweep lambda outside [0, 1]");
  }
  return req;
}

double RunResult::last10_mean() const {
  if (evals.empty()) throw std::logic_error("RunResult::last10_mean: no evaluations");
  const std::size_t k = std::min<std::size_t>(10, evals.size());
  double sum = 0.0;
  for (std::size_t i = evals.size() - k; i < evals.size(); ++i) sum += evals[i].mean_return;
  return sum / static_cast<double>(k);
}

std::string RunResult::label() const {
  std::string s = std::string(to_string(env)) + "_" + std::string(to_string(scheme));
  if (scheme == Scheme::La3p) s += "_lambda" + format_lambda(lambda);
  s += "_seed" + std::to_string(seed);
  return s;
}

double evaluate_policy(Agent& agent, EnvKind kind, std::uint64_t train_seed, std::size_t episodes) {
  Environment env(kind);
  // Reseeded per evaluation so every evaluation sees the same start states.
  Rng seeds(train_seed + kEvalSeedOffset);
  Rng unused(0);
  double total = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    Eigen::VectorXd state = env.reset(seeds());
    bool done = false;
    while (!done) {
      const auto res = env.step(agent.select_action(state, false, unused));
      total += res.reward;
      done = res.done;
      state = res.next_state;
    }
  }
  return total / static_cast<double>(episodes);
}

RunResult run_single(const RunConfig& config, EnvKind kind, Scheme scheme, double lambda,
                     std::uint64_t seed) {
  const auto start = Clock::now();
  RunResult result;
  result.env = kind;
  result.scheme = scheme;
  result.lambda = lambda;
  result.seed = seed;

  Environment env(kind);
  const auto& spec = env.spec();
  Agent agent(spec, config.agent_config(scheme, lambda), seed);

  ReplayConfig rc;
  rc.capacity = std::min(config.buffer_capacity, std::max(config.total_steps, config.batch));
  rc.state_dim = static_cast<std::size_t>(spec.state_dim);
  rc.action_dim = static_cast<std::size_t>(spec.action_dim);
  rc.mode = priority_mode_for(scheme);
  rc.alpha = config.alpha_for(scheme);
  rc.beta = config.beta;
  ReplayBuffer buffer(rc);

  Rng rng(seed * 0x9e3779b97f4a7c15ULL + 0x632be59bd9b4e019ULL);
  Eigen::VectorXd state = env.reset(rng());
  double update_ms = 0.0;

  for (std::size_t t = 1; t <= config.total_steps; ++t) {
    const Eigen::VectorXd action = agent.select_action(state, true, rng);
    auto step = env.step(action);
    buffer.push(Transition{state, action, step.reward, step.next_state, step.done && !step.truncated});
    state = step.done ? env.reset(rng()) : std::move(step.next_state);

    if (t > config.start_steps && buffer.count() >= config.batch) {
      const auto u0 = Clock::now();
      agent.update(buffer, rng);
      update_ms += elapsed_ms(u0);
    }
    if (t % config.eval_every == 0) {
      EvalRecord rec;
      rec.step = t;
      rec.seed = seed;
      rec.mean_return = evaluate_policy(agent, kind, seed, config.eval_episodes);
      rec.wall_clock_ms = elapsed_ms(start);
      result.evals.push_back(rec);
    }
  }
  result.update_steps = agent.update_steps();
  result.update_ms = update_ms;
  result.total_ms = elapsed_ms(start);
  return result;
}

void write_eval_csv(const fs::path& path, const std::vector<EvalRecord>& records) {
  std::ostringstream out;
  out << "step,seed,mean_return,wall_clock_ms\n";
  for (const auto& r : records) {
    out << r.step << ',' << r.seed << ',' << std::setprecision(17) << r.mean_return << ','
        << std::setprecision(6) << std::fixed << r.wall_clock_ms << std::defaultfloat << '\n';
  }
  write_atomically(path, out.str());
}

std::vector<double> sliding_window_mean(std::span<const double> values, std::size_t window) {
  if (window == 0) throw std::invalid_argument("sliding_window_mean: window must be positive");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= window) sum -= values[i - window];
    out[i] = sum / static_cast<double>(std::min(i + 1, window));
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& runs) {
  std::map<std::tuple<int, int, double>, AggregateRow> groups;
  std::map<std::tuple<int, int, double>, std::vector<double>> runtimes;
  for (const auto& r : runs) {
    const auto key = std::make_tuple(static_cast<int>(r.env), static_cast<int>(r.scheme),
                                     r.scheme == Scheme::La3p ? r.lambda : -1.0);
    auto& row = groups[key];
    row.env = r.env;
    row.scheme = r.scheme;
    row.lambda = r.lambda;
    if (!r.evals.empty()) row.per_seed.push_back(r.last10_mean());
    runtimes[key].push_back(r.total_ms);
  }
  std::vector<AggregateRow> rows;
  for (auto& [key, row] : groups) {
    if (!row.per_seed.empty()) {
      row.mean = stats::mean(row.per_seed);
      row.ci95 = stats::ci95_half_width(row.per_seed);
    }
    row.mean_runtime_ms = stats::mean(runtimes[key]);
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

struct RunTask {
  EnvKind env;
  Scheme scheme;
  double lambda;
  std::uint64_t seed;
};

ExperimentResult execute(const RunConfig& config, const std::vector<RunTask>& tasks) {
  config.validate();
  prepare_out_dir(config.out_dir);

  ExperimentResult result;
  result.runs.resize(tasks.size());
  run_parallel(tasks.size(), config.jobs, [&](std::size_t i) {
    const auto& t = tasks[i];
    auto r = run_single(config, t.env, t.scheme, t.lambda, t.seed);
    write_eval_csv(config.out_dir / (r.label() + ".csv"), r.evals);
    if (config.smooth) {
      std::vector<double> returns;
      for (const auto& e : r.evals) returns.push_back(e.mean_return);
      const auto smoothed = sliding_window_mean(returns, 5);
      auto recs = r.evals;
      for (std::size_t k = 0; k < recs.size(); ++k) recs[k].mean_return = smoothed[k];
      write_eval_csv(config.out_dir / (r.label() + "_smoothed.csv"), recs);
    }
    write_atomically(config.out_dir / (r.label() + "_timing.json"), timing_json(r).dump(2) + "\n");
    result.runs[i] = std::move(r);
  });

  result.rows = aggregate(result.runs);
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& row : result.rows) {
    summary.push_back({{"env", std::string(to_string(row.env))},
                       {"scheme", std::string(to_string(row.scheme))},
                       {"lambda", row.scheme == Scheme::La3p ? nlohmann::json(row.lambda) : nullptr},
                       {"seeds", row.per_seed.size()},
                       {"last10_mean", row.mean},
                       {"ci95", row.ci95},
                       {"per_seed", row.per_seed}});
  }
  write_atomically(config.out_dir / "summary.json", summary.dump(2) + "\n");
  return result;
}

}  // namespace

ExperimentResult run(const RunConfig& config) {
  std::vector<RunTask> tasks;
  for (auto env : config.envs)
    for (auto scheme : config.schemes)
      for (auto seed : config.seeds) tasks.push_back({env, scheme, config.lambda, seed});
  return execute(config, tasks);
}

ExperimentResult lambda_sweep(const RunConfig& config, std::vector<double> lambdas) {
  if (lambdas.empty()) throw std::invalid_argument("lambda_sweep: empty lambda list");
  std::sort(lambdas.begin(), lambdas.end());
  lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
  std::vector<RunTask> tasks;
  for (auto env : config.envs)
    for (double l : lambdas)
      for (auto seed : config.seeds) tasks.push_back({env, Scheme::La3p, l, seed});
  auto result = execute(config, tasks);
  std::stable_sort(result.rows.begin(), result.rows.end(), [](const auto& a, const auto& b) {
    if (a.env != b.env) return a.env < b.env;
    return a.lambda < b.lambda;
  });
  return result;
}

std::vector<TimingRow> timing_report(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw std::runtime_error("timing_report: no runs");
  std::map<Scheme, std::vector<double>> per_scheme;
  for (const auto& r : runs) per_scheme[r.scheme].push_back(r.total_ms);
  const auto uniform = per_scheme.find(Scheme::Uniform);
  if (uniform == per_scheme.end()) {
    throw std::runtime_error("timing_report: no uniform baseline runs");
  }
  const double base = stats::mean(uniform->second);
  std::vector<TimingRow> rows;
  for (const auto& [scheme, times] : per_scheme) {
    TimingRow row;
    row.scheme = scheme;
    row.runs = times.size();
    row.mean_ms = stats::mean(times);
    row.ci95_ms = stats::ci95_half_width(times);
    row.increase_pct = scheme == Scheme::Uniform ? 0.0 : 100.0 * (row.mean_ms - base) / base;
    rows.push_back(row);
  }
  return rows;
}

std::vector<TimingRow> timing_report(const fs::path& results_dir) {
  if (!fs::is_directory(results_dir)) {
    throw std::runtime_error("timing_report: " + results_dir.string() + " is not a directory");
  }
  std::vector<fs::path> logs;
  for (const auto& entry : fs::directory_iterator(results_dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() > 12 && name.ends_with("_timing.json")) logs.push_back(entry.path());
  }
  std::sort(logs.begin(), logs.end());
  std::vector<RunResult> runs;
  for (const auto& path : logs) {
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in);
    RunResult r;
    r.env = parse_env_kind(j.at("env").get<std::string>());
    r.scheme = parse_scheme(j.at("scheme").get<std::string>());
    r.lambda = j.at("lambda").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.update_steps = j.at("update_steps").get<std::size_t>();
    r.total_ms = j.at("total_ms").get<double>();
    r.update_ms = j.at("update_ms").get<double>();
    runs.push_back(std::move(r));
  }
  return timing_report(runs);
}

std::string format_timing_table(const std::vector<TimingRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "scheme" << std::right << std::setw(6) << "runs"
      << std::setw(26) << "run time (ms)" << std::setw(16) << "increase" << '\n';
  for (const auto& r : rows) {
    std::ostringstream time, pct;
    time << std::fixed << std::setprecision(2) << r.mean_ms << " +- " << r.ci95_ms;
    pct << std::fixed << std::setprecision(2) << std::showpos << r.increase_pct << "%";
    out << std::left << std::setw(10) << to_string(r.scheme) << std::right << std::setw(6) << r.runs
        << std::setw(26) << time.str() << std::setw(16) << pct.str() << '\n';
  }
  return out.str();
}

std::string format_aggregate_table(const std::vector<AggregateRow>& rows) {
  std::ostringstream out;
  out << std::left << std::setw(18) << "env" << std::setw(8) << "scheme" << std::right
      << std::setw(8) << "lambda" << std::setw(7) << "seeds" << std::setw(28)
      << "last-10 return (95% CI)" << '\n';
  for (const auto& r : rows) {
    std::ostringstream stat;
    stat << std::fixed << std::setprecision(3) << r.mean << " +- " << r.ci95;
    out << std::left << std::setw(18) << to_string(r.env) << std::setw(8) << to_string(r.scheme)
        << std::right << std::setw(8)
        << (r.scheme == Scheme::La3p ? format_lambda(r.lambda) : std::string("-"))
        << std::setw(7) << r.per_seed.size() << std::setw(28) << stat.str() << '\n';
  }
  return out.str();
}

std::string run_probe(const RunConfig& config, const std::string& which, std::uint64_t seed) {
  using namespace diagnostics;
  prepare_out_dir(config.out_dir);
  constexpr std::size_t kPairs = 1000;
  nlohmann::json summary;

  auto write_report = [&](const std::string& stem, const ProbeReport& report) {
    std::ostringstream csv;
    report.write_csv(csv);
    write_atomically(config.out_dir / (stem + ".csv"), csv.str());
    return nlohmann::json::parse(report.summary_json());
  };

  if (which == "lemma1") {
    Environment one_step(EnvKind::AnalyticBandit);
    const Mlp critic = train_bandit_critic(one_step, config.hidden, 200, 64, seed);
    const auto set = make_probe_set(one_step, nullptr, kPairs, 0.0, seed + 1);
    const auto report = estimation_error_probe(MlpQ(critic), one_step, set.states, set.actions);
    summary["one_step"] = write_report("probe_lemma1_one_step", report);

    Environment chained(EnvKind::AnalyticBandit, EnvOptions{1, 2});
    Rng rng(seed + 2);
    const int sd = chained.spec().state_dim;
    std::vector<int> actor_dims{sd}, critic_dims{sd + 1};
    for (int h : config.hidden) {
      actor_dims.push_back(h);
      critic_dims.push_back(h);
    }
    actor_dims.push_back(1);
    critic_dims.push_back(1);
    const Mlp actor(actor_dims, OutputHead::ScaledTanh, 1.0, rng);
    const Mlp chained_critic(critic_dims, OutputHead::Linear, 1.0, rng);
    const auto chained_set = make_probe_set(chained, &actor, kPairs, 0.3, seed + 3);
    const auto chained_report = chained_estimation_probe(MlpQ(chained_critic), actor, chained,
                                                         chained_set.states, chained_set.actions, 0.99);
    summary["chained"] = write_report("probe_lemma1_chained", chained_report);
  } else if (which == "theorem1") {
    Environment env(EnvKind::AnalyticBandit);
    Rng rng(seed);
    std::vector<int> actor_dims{env.spec().state_dim};
    for (int h : config.hidden) actor_dims.push_back(h);
    actor_dims.push_back(1);
    const Mlp actor(actor_dims, OutputHead::ScaledTanh, 1.0, rng);
    const auto set = make_probe_set(env, &actor, kPairs, 0.3, seed + 1);

    const BanditQ exact;
    const PerturbedQ injected(exact, 0.0, 0.5);
    const PerturbedQ biased(exact, 0.7, 0.0);
    const auto report = gradient_divergence_probe(actor, injected, env, set.states, set.actions);
    summary["injected_error"] = write_report("probe_theorem1", report);

    auto max_divergence = [](const ProbeReport& r) {
      double m = 0.0;
      for (const auto& row : r.rows) m = std::max(m, row.grad_div_t);
      return m;
    };
    summary["perfect_critic_max_divergence"] =
        max_divergence(gradient_divergence_probe(actor, exact, env, set.states, set.actions));
    summary["constant_bias_max_divergence"] =
        max_divergence(gradient_divergence_probe(actor, biased, env, set.states, set.actions));

    const SoftmaxPolicy softmax(env.spec().state_dim, 21, -1.0, 1.0, rng);
    const auto stochastic =
        stochastic_gradient_divergence_probe(softmax, injected, env, set.states, set.actions);
    summary["stochastic_injected_error"] = write_report("probe_theorem1_stochastic", stochastic);
    summary["stochastic_perfect_critic_max_divergence"] = max_divergence(
        stochastic_gradient_divergence_probe(softmax, exact, env, set.states, set.actions));
  } else {
    throw std::invalid_argument("unknown probe '" + which + "' (expected lemma1 or theorem1)");
  }

  const std::string text = summary.dump(2);
  write_atomically(config.out_dir / ("probe_" + which + ".json"), text + "\n");
  return text;
}

}  // namespace la3p
