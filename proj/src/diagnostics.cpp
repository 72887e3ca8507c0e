#include "la3p/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <stdexcept>

#include <json.hpp>

#include "la3p/stats.hpp"

namespace la3p::diagnostics {

namespace {

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  Eigen::VectorXd x(a.size() + b.size());
  x << a, b;
  return x;
}

void require_bandit(const Environment& env, int horizon, const char* op) {
  if (env.spec().kind != EnvKind::AnalyticBandit || env.options().bandit_horizon != horizon) {
    throw std::logic_error(std::string(op) + ": requires the AnalyticBandit with horizon " +
                           std::to_string(horizon));
  }
}

void require_pairs(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions, const char* op) {
  if (states.cols() != actions.cols() || states.cols() == 0) {
    throw std::invalid_argument(std::string(op) + ": states and actions must be non-empty and paired");
  }
}

/// Deterministic policy gradient d/dphi Q(s, pi(s)), flattened.
Eigen::VectorXd deterministic_policy_gradient(const Mlp& actor, const QModel& q,
                                              const Eigen::VectorXd& state) {
  ForwardCache cache;
  const Eigen::VectorXd a = actor.forward(state, cache);
  const Eigen::MatrixXd ga = q.action_gradient(state, a);
  const auto flat = actor.backward(cache, ga).params.flatten();
  return Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size()));
}

/// Exact Q under `actor` on the chained bandit, keyed by the step index.
class ChainedBanditQ final : public QModel {
 public:
  ChainedBanditQ(const Mlp& actor, double gamma) : actor_(actor), gamma_(gamma) {}

  double value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const override {
    const auto d = state.size() - 1;
    const double r = bandit::reward(state, action);
    if (state(d) >= 1.0) return r;
    Eigen::VectorXd next(state.size());
    next << bandit::successor(state.head(d), action), 1.0;
    const Eigen::VectorXd next_action = actor_.forward(next);
    return r + gamma_ * bandit::reward(next, next_action);
  }

  Eigen::VectorXd action_gradient(const Eigen::VectorXd& state,
                                  const Eigen::VectorXd& action) const override {
    constexpr double h = 1e-6;
    Eigen::VectorXd g(action.size());
    for (Eigen::Index i = 0; i < action.size(); ++i) {
      Eigen::VectorXd up = action, down = action;
      up(i) += h;
      down(i) -= h;
      g(i) = (value(state, up) - value(state, down)) / (2.0 * h);
    }
    return g;
  }

 private:
  const Mlp& actor_;
  double gamma_;
};

Correlation correlate(const std::vector<double>& x, const std::vector<double>& y) {
  Correlation c;
  const bool y_zero = std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
  if (x.size() < 3 || y_zero) return c;
  c.n = x.size();
  c.pearson = stats::pearson(x, y);
  c.spearman = stats::spearman(x, y);
  c.spearman_p = stats::correlation_p_value_positive(c.spearman, c.n);
  return c;
}

nlohmann::json to_json(const Correlation& c) {
  return {{"pearson", c.pearson}, {"spearman", c.spearman}, {"spearman_p", c.spearman_p}, {"n", c.n}};
}

}  // namespace

MlpQ::MlpQ(const Mlp& net) : net_(net) {
  if (net.output_dim() != 1 || net.head() != OutputHead::Linear) {
    throw std::invalid_argument("MlpQ: critic must have a scalar linear head");
  }
}

double MlpQ::value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  return net_.forward(concat(state, action))(0, 0);
}

Eigen::VectorXd MlpQ::action_gradient(const Eigen::VectorXd& state,
                                      const Eigen::VectorXd& action) const {
  ForwardCache cache;
  net_.forward(concat(state, action), cache);
  const auto back = net_.backward(cache, Eigen::MatrixXd::Ones(1, 1));
  return back.input_grad.col(0).tail(action.size());
}

double BanditQ::value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  return bandit::reward(state, action);
}

Eigen::VectorXd BanditQ::action_gradient(const Eigen::VectorXd& state,
                                         const Eigen::VectorXd& action) const {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(action.size());
  g(0) = -2.0 * (action(0) - bandit::target_action(state));
  return g;
}

PerturbedQ::PerturbedQ(const QModel& base, double bias, double amplitude)
    : base_(base), bias_(bias), amplitude_(amplitude) {}

double PerturbedQ::value(const Eigen::VectorXd& state, const Eigen::VectorXd& action) const {
  return base_.value(state, action) + bias_ + amplitude_ * std::sin(3.0 * state(0)) * action(0);
}

Eigen::VectorXd PerturbedQ::action_gradient(const Eigen::VectorXd& state,
                                            const Eigen::VectorXd& action) const {
  Eigen::VectorXd g = base_.action_gradient(state, action);
  g(0) += amplitude_ * std::sin(3.0 * state(0));
  return g;
}

SoftmaxPolicy::SoftmaxPolicy(int state_dim, int grid_size, double action_low, double action_high,
                             Rng& rng) {
  if (grid_size < 2) throw std::invalid_argument("SoftmaxPolicy: grid needs at least two actions");
  grid_ = Eigen::VectorXd::LinSpaced(grid_size, action_low, action_high);
  weight_.resize(grid_size, state_dim + 1);
  std::normal_distribution<double> init(0.0, 1.0);
  for (Eigen::Index r = 0; r < weight_.rows(); ++r)
    for (Eigen::Index c = 0; c < weight_.cols(); ++c) weight_(r, c) = init(rng);
}

Eigen::VectorXd SoftmaxPolicy::probabilities(const Eigen::VectorXd& state) const {
  Eigen::VectorXd features(state.size() + 1);
  features << state, 1.0;
  Eigen::VectorXd z = weight_ * features;
  z.array() -= z.maxCoeff();
  Eigen::VectorXd p = z.array().exp();
  return p / p.sum();
}

Eigen::VectorXd SoftmaxPolicy::policy_gradient(const Eigen::VectorXd& state, const QModel& q) const {
  Eigen::VectorXd features(state.size() + 1);
  features << state, 1.0;
  const Eigen::VectorXd p = probabilities(state);
  Eigen::VectorXd values(grid_.size());
  for (Eigen::Index k = 0; k < grid_.size(); ++k) {
    values(k) = q.value(state, Eigen::VectorXd::Constant(1, grid_(k)));
  }
  // sum_k pi_k Q_k grad log pi_k, with grad_z log pi_k = e_k - pi.
  const double baseline = p.dot(values);
  const Eigen::VectorXd dz = p.cwiseProduct(values.array().matrix() -
                                            Eigen::VectorXd::Constant(values.size(), baseline));
  const Eigen::MatrixXd grad = dz * features.transpose();
  Eigen::VectorXd flat(grad.size());
  for (Eigen::Index r = 0, k = 0; r < grad.rows(); ++r)
    for (Eigen::Index c = 0; c < grad.cols(); ++c) flat(k++) = grad(r, c);
  return flat;
}

void ProbeReport::compute_correlations() {
  std::vector<double> td, e0, e1, g0, g1;
  for (const auto& r : rows) {
    td.push_back(r.abs_td);
    e0.push_back(r.abs_est_err_t);
    e1.push_back(r.abs_est_err_t1);
    g0.push_back(r.grad_div_t);
    g1.push_back(r.grad_div_t1);
  }
  est_err_t = correlate(td, e0);
  est_err_t1 = correlate(td, e1);
  grad_div_t = correlate(td, g0);
  grad_div_t1 = correlate(td, g1);
}

void ProbeReport::write_csv(std::ostream& out) const {
  out << "abs_td,abs_est_err_t,abs_est_err_t1,grad_div_t,grad_div_t1\n";
  out << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.abs_td << ',' << r.abs_est_err_t << ',' << r.abs_est_err_t1 << ',' << r.grad_div_t
        << ',' << r.grad_div_t1 << '\n';
  }
}

std::string ProbeReport::summary_json() const {
  nlohmann::json j = {
      {"pairs", rows.size()},
      {"abs_est_err_t", to_json(est_err_t)},
      {"abs_est_err_t1", to_json(est_err_t1)},
      {"grad_div_t", to_json(grad_div_t)},
      {"grad_div_t1", to_json(grad_div_t1)},
  };
  return j.dump(2);
}

ProbeReport estimation_error_probe(const QModel& critic, const Environment& env,
                                   const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  require_bandit(env, 1, "estimation_error_probe");
  require_pairs(states, actions, "estimation_error_probe");
  ProbeReport report;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const Eigen::VectorXd s = states.col(i);
    const Eigen::VectorXd a = actions.col(i);
    const double r = bandit::reward(s, a);
    const double q = critic.value(s, a);
    ProbeRow row;
    row.abs_td = std::abs(r - q);
    row.abs_est_err_t = std::abs(q - env.optimal_q(s, a));
    if (std::abs(row.abs_td - row.abs_est_err_t) > 1e-12) {
      throw std::logic_error("estimation_error_probe: one-step identity |delta| = |Q - Q^pi| violated");
    }
    report.rows.push_back(row);
  }
  report.compute_correlations();
  return report;
}

ProbeReport chained_estimation_probe(const QModel& critic, const Mlp& actor, const Environment& env,
                                     const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions,
                                     double gamma) {
  require_bandit(env, 2, "chained_estimation_probe");
  require_pairs(states, actions, "chained_estimation_probe");
  const ChainedBanditQ exact(actor, gamma);
  const auto d = static_cast<Eigen::Index>(env.options().bandit_state_dim);

  ProbeReport report;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const Eigen::VectorXd s0 = states.col(i);
    const Eigen::VectorXd a0 = actions.col(i);
    Eigen::VectorXd s1(s0.size());
    s1 << bandit::successor(s0.head(d), a0), 1.0;
    const Eigen::VectorXd a1 = actor.forward(s1);

    const double r0 = bandit::reward(s0, a0);
    const double q0 = critic.value(s0, a0);
    const double q1 = critic.value(s1, a1);
    const double delta = r0 + gamma * q1 - q0;
    const double x = exact.value(s0, a0) - q0;
    const double y = q1 - exact.value(s1, a1);
    if (std::abs(delta - (x + gamma * y)) > 1e-9 * (1.0 + std::abs(delta))) {
      throw std::logic_error("chained_estimation_probe: delta != x + gamma * y");
    }

    ProbeRow row;
    row.abs_td = std::abs(delta);
    row.abs_est_err_t = std::abs(x);
    row.abs_est_err_t1 = std::abs(y);
    row.grad_div_t = (deterministic_policy_gradient(actor, critic, s0) -
                      deterministic_policy_gradient(actor, exact, s0))
                         .norm();
    row.grad_div_t1 = (deterministic_policy_gradient(actor, critic, s1) -
                       deterministic_policy_gradient(actor, exact, s1))
                          .norm();
    report.rows.push_back(row);
  }
  report.compute_correlations();
  return report;
}

ProbeReport gradient_divergence_probe(const Mlp& actor, const QModel& critic, const Environment& env,
                                      const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
  require_bandit(env, 1, "gradient_divergence_probe");
  require_pairs(states, actions, "gradient_divergence_probe");
  const BanditQ exact;
  ProbeReport report;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const Eigen::VectorXd s = states.col(i);
    const Eigen::VectorXd a = actions.col(i);
    const double q = critic.value(s, a);
    ProbeRow row;
    row.abs_td = std::abs(bandit::reward(s, a) - q);
    row.abs_est_err_t = std::abs(q - env.optimal_q(s, a));
    const Eigen::VectorXd approx = deterministic_policy_gradient(actor, critic, s);
    const Eigen::VectorXd truth = deterministic_policy_gradient(actor, exact, s);
    row.grad_div_t = (approx - truth).norm();
    report.rows.push_back(row);
  }
  report.compute_correlations();
  return report;
}

ProbeReport stochastic_gradient_divergence_probe(const SoftmaxPolicy& policy, const QModel& critic,
                                                 const Environment& env,
                                                 const Eigen::MatrixXd& states,
                                                 const Eigen::MatrixXd& actions) {
  require_bandit(env, 1, "stochastic_gradient_divergence_probe");
  require_pairs(states, actions, "stochastic_gradient_divergence_probe");
  const BanditQ exact;
  ProbeReport report;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const Eigen::VectorXd s = states.col(i);
    const Eigen::VectorXd a = actions.col(i);
    const double q = critic.value(s, a);
    ProbeRow row;
    row.abs_td = std::abs(bandit::reward(s, a) - q);
    row.abs_est_err_t = std::abs(q - env.optimal_q(s, a));
    row.grad_div_t = (policy.policy_gradient(s, critic) - policy.policy_gradient(s, exact)).norm();
    report.rows.push_back(row);
  }
  report.compute_correlations();
  return report;
}

Mlp train_bandit_critic(const Environment& env, const std::vector<int>& hidden, std::size_t steps,
                        std::size_t batch_size, std::uint64_t seed) {
  require_bandit(env, 1, "train_bandit_critic");
  const int sd = env.spec().state_dim;
  std::vector<int> dims{sd + 1};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  Rng rng(seed);
  Mlp critic(dims, OutputHead::Linear, 1.0, rng);
  AdamState opt(critic, AdamOptions{1e-3});
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const auto n = static_cast<Eigen::Index>(batch_size);
  for (std::size_t step = 0; step < steps; ++step) {
    Eigen::MatrixXd x(sd + 1, n);
    Eigen::RowVectorXd target(n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r <= sd; ++r) x(r, c) = unit(rng);
      target(c) = bandit::reward(x.col(c).head(sd), x.col(c).tail(1));
    }
    ForwardCache cache;
    const Eigen::RowVectorXd q = critic.forward(x, cache);
    const Eigen::RowVectorXd grad = (q - target) / static_cast<double>(n);
    adam_step(critic, opt, critic.backward(cache, grad).params);
  }
  return critic;
}

ProbeSet make_probe_set(const Environment& env, const Mlp* actor, std::size_t n, double noise,
                        std::uint64_t seed) {
  if (env.spec().kind != EnvKind::AnalyticBandit) {
    throw std::logic_error("make_probe_set: requires the AnalyticBandit");
  }
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> gauss(0.0, noise);
  const int sd = env.spec().state_dim;
  const int ctx = env.options().bandit_state_dim;
  ProbeSet set;
  set.states = Eigen::MatrixXd::Zero(sd, static_cast<Eigen::Index>(n));
  set.actions.resize(1, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < set.states.cols(); ++c) {
    for (Eigen::Index r = 0; r < ctx; ++r) set.states(r, c) = unit(rng);
    double a = actor ? actor->forward(set.states.col(c))(0, 0) + gauss(rng) : unit(rng);
    set.actions(0, c) = std::clamp(a, env.spec().action_low, env.spec().action_high);
  }
  return set;
}

}  // namespace la3p::diagnostics
