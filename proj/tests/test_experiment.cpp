#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "la3p/experiment.hpp"

using namespace la3p;
namespace fs = std::filesystem;

namespace {

std::optional<CliRequest> parse(std::vector<std::string> args) {
  args.insert(args.begin(), "la3p");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_cli(static_cast<int>(argv.size()), argv.data());
}

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("la3p_test_" + name);
  fs::remove_all(dir);
  return dir;
}

RunConfig tiny_config(const fs::path& out) {
  RunConfig c;
  c.hidden = {8};
  c.batch = 8;
  c.start_steps = 50;
  c.total_steps = 300;
  c.eval_every = 100;
  c.eval_episodes = 2;
  c.out_dir = out;
  return c;
}

std::string first_line(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

}  // namespace

TEST_CASE("cli defaults and overrides") {
  const auto req = parse({"--env", "PendulumSwingUp,pointmass1d", "--scheme", "la3p,per", "--lambda", "0.3",
                          "--seed", "5", "--seeds", "3", "--steps", "2000", "--batch", "32", "--out", "x"});
  REQUIRE(req);
  const auto& c = req->config;
  CHECK(c.envs == std::vector<EnvKind>{EnvKind::PendulumSwingUp, EnvKind::PointMass1D});
  CHECK(c.schemes == std::vector<Scheme>{Scheme::La3p, Scheme::ClassicPer});
  CHECK(c.lambda == 0.3);
  CHECK(c.seeds == std::vector<std::uint64_t>{5, 6, 7});
  CHECK(c.total_steps == 2000);
  CHECK(c.batch == 32);
  CHECK(c.out_dir == fs::path("x"));
  CHECK(c.start_steps == 1000);
  CHECK(c.hidden == std::vector<int>{64, 64});
  CHECK(c.eval_every == 500);
  CHECK(c.alpha_for(Scheme::ClassicPer) == 0.6);
  CHECK(c.alpha_for(Scheme::La3p) == 0.4);
  CHECK_FALSE(req->probe);
}

TEST_CASE("full-scale preset switches defaults but explicit flags win") {
  const auto req = parse({"--paper-scale", "--batch", "128"});
  REQUIRE(req);
  CHECK(req->config.batch == 128);
  CHECK(req->config.hidden == std::vector<int>{256, 256});
  CHECK(req->config.start_steps == 25000);
  CHECK(req->config.total_steps == 1000000);
  CHECK(req->config.eval_every == 1000);
  CHECK(req->config.eval_episodes == 10);
  CHECK(req->config.seeds.size() == 10);
}

TEST_CASE("cli rejects invalid values") {
  CHECK_THROWS_AS(parse({"--lambda", "1.5"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--alpha", "0"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--beta", "-0.1"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--gamma", "1"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--scheme", "rank"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--env", "Hopper"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--probe", "lemma2"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--no-such-flag"}), std::invalid_argument);
  CHECK_THROWS_AS(parse({"--start-steps", "5000", "--steps", "100"}), std::invalid_argument);
}

TEST_CASE("config file uses flag names as keys") {
  const auto dir = scratch_dir("cfg");
  fs::create_directories(dir);
  const auto file = dir / "run.cfg";
  std::ofstream(file) << "env = PendulumSwingUp\nscheme = lap\nlambda = 0.7\nsteps = 1234\nstart-steps = 100\n";
  const auto req = parse({"--config", file.string(), "--steps", "999"});
  REQUIRE(req);
  CHECK(req->config.envs == std::vector<EnvKind>{EnvKind::PendulumSwingUp});
  CHECK(req->config.schemes == std::vector<Scheme>{Scheme::Lap});
  CHECK(req->config.lambda == 0.7);
  CHECK(req->config.total_steps == 999);
  CHECK(req->config.start_steps == 100);
  fs::remove_all(dir);
}

TEST_CASE("probe and extra flags") {
  const auto req = parse({"--probe", "theorem1", "--timing", "--lambda-sweep", "0.1,0.5,0.9", "--jobs", "2",
                          "--single-target-update", "--uniform-loss", "pal"});
  REQUIRE(req);
  CHECK(*req->probe == "theorem1");
  CHECK(req->timing);
  CHECK(req->lambda_sweep == std::vector<double>{0.1, 0.5, 0.9});
  CHECK(req->config.jobs == 2);
  CHECK_FALSE(req->config.double_target_update);
  CHECK(req->config.uniform_loss == LossKind::Pal);
}

TEST_CASE("no updates when the run ends at start steps") {
  auto c = tiny_config(scratch_dir("noupdate"));
  c.start_steps = 300;
  const auto r = run_single(c, EnvKind::PointMass1D, Scheme::La3p, 0.5, 0);
  CHECK(r.update_steps == 0);
  CHECK(r.evals.size() == 3);
  // The policy is frozen, and every evaluation replays the same start states.
  CHECK(r.evals[0].mean_return == r.evals[2].mean_return);
}

TEST_CASE("run writes per-run CSVs and a summary") {
  const auto dir = scratch_dir("run");
  auto c = tiny_config(dir);
  c.schemes = {Scheme::Uniform, Scheme::La3p};
  c.seeds = {0, 1};
  c.smooth = true;
  const auto result = run(c);
  CHECK(result.runs.size() == 4);
  CHECK(result.rows.size() == 2);
  for (const auto& r : result.runs) {
    CHECK(r.update_steps == 250);
    CHECK(r.evals.size() == 3);
    CHECK(fs::exists(dir / (r.label() + ".csv")));
    CHECK(fs::exists(dir / (r.label() + "_smoothed.csv")));
    CHECK(fs::exists(dir / (r.label() + "_timing.json")));
    CHECK(first_line(dir / (r.label() + ".csv")) == "step,seed,mean_return,wall_clock_ms");
  }
  CHECK(fs::exists(dir / "PointMass1D_la3p_lambda0.5_seed1.csv"));
  std::ifstream in(dir / "summary.json");
  const auto summary = nlohmann::json::parse(in);
  REQUIRE(summary.size() == 2);
  for (const auto& row : summary) CHECK(row.at("seeds") == 2);

  const auto rows = timing_report(dir);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].scheme == Scheme::Uniform);
  CHECK(rows[0].increase_pct == 0.0);
  CHECK(rows[1].increase_pct == doctest::Approx(100.0 * (rows[1].mean_ms - rows[0].mean_ms) / rows[0].mean_ms));
  CHECK(format_timing_table(rows).find("la3p") != std::string::npos);
  CHECK(format_aggregate_table(result.rows).find("PointMass1D") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("runs are reproducible from the seed") {
  auto c = tiny_config(scratch_dir("repro"));
  const auto a = run_single(c, EnvKind::PendulumSwingUp, Scheme::ClassicPer, 0.5, 3);
  const auto b = run_single(c, EnvKind::PendulumSwingUp, Scheme::ClassicPer, 0.5, 3);
  REQUIRE(a.evals.size() == b.evals.size());
  for (std::size_t i = 0; i < a.evals.size(); ++i) CHECK(a.evals[i].mean_return == b.evals[i].mean_return);
}

TEST_CASE("lambda sweep") {
  const auto dir = scratch_dir("sweep");
  auto c = tiny_config(dir);
  const auto result = lambda_sweep(c, {0.9, 0.1, 0.5, 0.1});
  REQUIRE(result.rows.size() == 3);
  CHECK(result.rows[0].lambda == 0.1);
  CHECK(result.rows[2].lambda == 0.9);
  CHECK_THROWS_AS(lambda_sweep(c, {}), std::invalid_argument);
  fs::remove_all(dir);
}

TEST_CASE("timing report needs a uniform baseline") {
  CHECK_THROWS_AS(timing_report(std::vector<RunResult>{}), std::runtime_error);
  RunResult r;
  r.scheme = Scheme::Lap;
  r.total_ms = 5.0;
  CHECK_THROWS_AS(timing_report(std::vector<RunResult>{r}), std::runtime_error);
  CHECK_THROWS_AS(timing_report(fs::path("/nonexistent/la3p")), std::runtime_error);
}

TEST_CASE("unwritable output directory fails before training") {
  auto c = tiny_config("/proc/la3p_cannot_write_here");
  CHECK_THROWS_AS(run(c), std::runtime_error);
}

TEST_CASE("sliding window mean") {
  const std::vector<double> xs{1, 2, 3, 4, 5, 6};
  const auto m = sliding_window_mean(xs, 3);
  CHECK(m == std::vector<double>{1, 1.5, 2, 3, 4, 5});
  CHECK_THROWS_AS(sliding_window_mean(xs, 0), std::invalid_argument);
}

TEST_CASE("last-10 statistic") {
  RunResult r;
  for (int i = 1; i <= 12; ++i) r.evals.push_back(EvalRecord{static_cast<std::size_t>(i), 0, double(i), 0});
  CHECK(r.last10_mean() == doctest::Approx(7.5));
  RunResult empty;
  CHECK_THROWS_AS(empty.last10_mean(), std::logic_error);
}

TEST_CASE("probes write their outputs") {
  const auto dir = scratch_dir("probe");
  auto c = tiny_config(dir);
  c.hidden = {16, 16};
  const auto lemma = nlohmann::json::parse(run_probe(c, "lemma1", 0));
  CHECK(lemma.at("one_step").at("pairs") == 1000);
  CHECK(fs::exists(dir / "probe_lemma1_one_step.csv"));
  CHECK(fs::exists(dir / "probe_lemma1_chained.csv"));
  const auto theorem = nlohmann::json::parse(run_probe(c, "theorem1", 0));
  CHECK(theorem.at("perfect_critic_max_divergence") == 0.0);
  CHECK(theorem.at("constant_bias_max_divergence") == 0.0);
  CHECK(theorem.at("injected_error").at("grad_div_t").at("spearman_p").get<double>() < 0.01);
  CHECK(fs::exists(dir / "probe_theorem1.json"));
  CHECK_THROWS_AS(run_probe(c, "lemma3", 0), std::invalid_argument);
  fs::remove_all(dir);
}
