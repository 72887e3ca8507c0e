#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "la3p/replay_buffer.hpp"
#include "oracles.hpp"

using namespace la3p;

namespace {

Transition make_transition(double tag) {
  return Transition{Eigen::VectorXd::Constant(2, tag), Eigen::VectorXd::Constant(1, -tag), tag,
                    Eigen::VectorXd::Constant(2, tag + 0.5), false};
}

ReplayBuffer filled(std::size_t n, PriorityMode mode, double alpha = 0.4, double beta = 0.4,
                    std::size_t capacity = 0) {
  ReplayConfig c;
  c.capacity = capacity ? capacity : n;
  c.state_dim = 2;
  c.action_dim = 1;
  c.mode = mode;
  c.alpha = alpha;
  c.beta = beta;
  ReplayBuffer b(c);
  for (std::size_t i = 0; i < n; ++i) b.push(make_transition(static_cast<double>(i)));
  return b;
}

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = i;
  return out;
}

}  // namespace

TEST_CASE("push stores transitions and rejects wrong dimensions") {
  auto b = filled(3, PriorityMode::Clipped, 0.4, 0.4, 5);
  CHECK(b.count() == 3);
  const auto t = b.get(1);
  CHECK(t.state(0) == 1.0);
  CHECK(t.action(0) == -1.0);
  CHECK(t.reward == 1.0);
  CHECK(t.next_state(1) == 1.5);
  Transition bad = make_transition(0);
  bad.state = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(b.push(bad), std::invalid_argument);
  CHECK_THROWS_AS(b.get(3), std::out_of_range);
}

TEST_CASE("ring buffer overwrites the oldest slot") {
  auto b = filled(7, PriorityMode::Clipped, 0.4, 0.4, 4);
  CHECK(b.count() == 4);
  CHECK(b.get(0).reward == 4.0);
  CHECK(b.get(2).reward == 6.0);
  CHECK(b.get(3).reward == 3.0);
}

TEST_CASE("fresh transitions get the initial priority") {
  auto clipped = filled(2, PriorityMode::Clipped);
  CHECK(clipped.priority(0) == 1.0);
  auto prop = filled(2, PriorityMode::Proportional);
  CHECK(prop.priority(1) == doctest::Approx(1.0 + 1e-4).epsilon(1e-15));
}

TEST_CASE("empty buffer sampling is an error") {
  auto b = filled(0, PriorityMode::Clipped, 0.4, 0.4, 4);
  Rng rng(1);
  CHECK_THROWS_AS(b.sample_uniform(2, rng), std::logic_error);
  CHECK_THROWS_AS(b.sample_prioritized(2, rng), std::logic_error);
  CHECK_THROWS_AS(b.rebuild_inverse(), std::logic_error);
  auto p = filled(0, PriorityMode::Proportional, 0.6, 0.4, 4);
  CHECK_THROWS_AS(p.per_probabilities(), std::logic_error);
}

TEST_CASE("uniform sampling") {
  Rng rng(2);
  SUBCASE("single transition") {
    auto b = filled(1, PriorityMode::Clipped, 0.4, 0.4, 8);
    const auto s = b.sample_uniform(4, rng);
    CHECK(s.indices == std::vector<std::size_t>{0, 0, 0, 0});
    for (double w : s.weights) CHECK(w == 1.0);
  }
  SUBCASE("frequencies") {
    auto b = filled(100, PriorityMode::Clipped);
    std::vector<int> hits(100, 0);
    for (int k = 0; k < 1000; ++k)
      for (auto i : b.sample_uniform(100, rng).indices) ++hits[i];
    for (int h : hits) CHECK(std::abs(h / 1e5 - 0.01) < 0.002);
  }
  SUBCASE("batch columns match the stored transitions") {
    auto b = filled(10, PriorityMode::Clipped);
    const auto s = b.sample_uniform(6, rng);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const auto t = s.transition(k);
      const auto ref = b.get(s.indices[k]);
      CHECK(t.state == ref.state);
      CHECK(t.action == ref.action);
      CHECK(t.reward == ref.reward);
    }
  }
}

TEST_CASE("proportional probabilities") {
  SUBCASE("[1, 3] with alpha 0.6") {
    auto b = filled(2, PriorityMode::Proportional, 0.6);
    b.update_priorities(all_indices(2), std::vector<double>{1.0, 3.0});
    const auto p = b.per_probabilities();
    const auto ref = oracle::per_probabilities({1.0, 3.0}, 0.6, 1e-4);
    CHECK(p[0] == doctest::Approx(ref[0]).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(ref[1]).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.3410).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(0.6590).epsilon(1e-3));
    CHECK(b.sampling_probability(1) == doctest::Approx(ref[1]).epsilon(1e-12));
  }
  SUBCASE("equal errors") {
    auto b = filled(3, PriorityMode::Proportional, 0.7);
    b.update_priorities(all_indices(3), std::vector<double>{2.0, -2.0, 2.0});
    for (double p : b.per_probabilities()) CHECK(p == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("zero error keeps a positive probability") {
    auto b = filled(2, PriorityMode::Proportional, 0.6);
    b.update_priorities(all_indices(2), std::vector<double>{0.0, 5.0});
    const auto p = b.per_probabilities();
    CHECK(p[0] > 0.0);
    CHECK(p[0] == doctest::Approx(1e-4 / (1e-4 + std::pow(5.0, 0.6) + 1e-4)).epsilon(1e-9));
  }
  SUBCASE("wrong mode") {
    auto b = filled(2, PriorityMode::Clipped);
    CHECK_THROWS_AS(b.per_probabilities(), std::logic_error);
    CHECK_THROWS_AS(b.importance_weights(all_indices(2)), std::logic_error);
  }
}

TEST_CASE("importance weights") {
  SUBCASE("[1, 3] with alpha 0.6, beta 0.4") {
    auto b = filled(2, PriorityMode::Proportional, 0.6, 0.4);
    b.update_priorities(all_indices(2), std::vector<double>{1.0, 3.0});
    const auto w = b.importance_weights(all_indices(2));
    const auto p = oracle::per_probabilities({1.0, 3.0}, 0.6, 1e-4);
    CHECK(w[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(std::pow(p[0] / p[1], 0.4)).epsilon(1e-12));
    CHECK(w[1] == doctest::Approx(0.769).epsilon(1e-3));
  }
  SUBCASE("uniform priorities or beta 0 give unit weights") {
    auto b = filled(4, PriorityMode::Proportional, 0.6, 0.4);
    for (double w : b.importance_weights(all_indices(4))) CHECK(w == doctest::Approx(1.0));
    b.update_priorities(all_indices(4), std::vector<double>{0.1, 1.0, 4.0, 9.0});
    b.set_beta(0.0);
    for (double w : b.importance_weights(all_indices(4))) CHECK(w == 1.0);
  }
  SUBCASE("prioritized batches carry the weights") {
    auto b = filled(4, PriorityMode::Proportional, 0.6, 1.0);
    b.update_priorities(all_indices(4), std::vector<double>{0.1, 1.0, 4.0, 9.0});
    Rng rng(5);
    const auto s = b.sample_prioritized(16, rng);
    const auto ref = b.importance_weights(s.indices);
    for (std::size_t k = 0; k < s.size(); ++k) CHECK(s.weights[k] == ref[k]);
    CHECK_THROWS_AS(b.set_beta(1.5), std::invalid_argument);
  }
}

TEST_CASE("beta schedule anneals linearly to 1") {
  BetaSchedule s{0.4, 100};
  CHECK(s.at(0) == 0.4);
  CHECK(s.at(50) == doctest::Approx(0.7));
  CHECK(s.at(100) == 1.0);
  CHECK(s.at(1000) == 1.0);
}

TEST_CASE("clipped priorities") {
  auto b = filled(3, PriorityMode::Clipped, 0.4);
  b.update_priorities(all_indices(3), std::vector<double>{3.0, 0.5, -2.0});
  CHECK(b.priority(0) == doctest::Approx(std::pow(3.0, 0.4)).epsilon(1e-15));
  CHECK(b.priority(0) == doctest::Approx(1.5518).epsilon(1e-4));
  CHECK(b.priority(1) == 1.0);
  CHECK(b.priority(2) == doctest::Approx(1.3195).epsilon(1e-4));
  CHECK(b.abs_td(2) == 2.0);

  const double nan = std::nan("");
  CHECK_THROWS_AS(b.update_priorities(std::vector<std::size_t>{0}, std::vector<double>{nan}),
                  std::invalid_argument);
  CHECK_THROWS_AS(b.update_priorities(std::vector<std::size_t>{3}, std::vector<double>{1.0}),
                  std::out_of_range);
  CHECK_THROWS_AS(b.update_priorities(std::vector<std::size_t>{0, 1}, std::vector<double>{1.0}),
                  std::invalid_argument);
}

TEST_CASE("prioritized sampling frequency") {
  auto b = filled(2, PriorityMode::Clipped, 1.0);
  b.update_priorities(all_indices(2), std::vector<double>{1.0, 3.0});
  Rng rng(7);
  std::size_t ones = 0, total = 0;
  for (int k = 0; k < 25000; ++k) {
    for (auto i : b.sample_prioritized(4, rng).indices) {
      ones += i == 1;
      ++total;
    }
  }
  CHECK(std::abs(static_cast<double>(ones) / total - 0.75) < 0.01);
}

TEST_CASE("inverse priorities") {
  SUBCASE("[1, 2, 4] inverts to [4, 2, 1]") {
    auto b = filled(3, PriorityMode::Clipped, 0.4);
    // |d|^0.4 = p  <=>  |d| = p^2.5
    b.update_priorities(all_indices(3),
                        std::vector<double>{1.0, std::pow(2.0, 2.5), std::pow(4.0, 2.5)});
    b.rebuild_inverse();
    CHECK(b.inverse_priority(0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(b.inverse_priority(1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(b.inverse_priority(2) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("equal priorities give equal inverse leaves") {
    auto b = filled(5, PriorityMode::Clipped);
    b.rebuild_inverse();
    for (std::size_t i = 0; i < 5; ++i) CHECK(b.inverse_priority(i) == 1.0);
  }
  SUBCASE("inverse sampling frequency") {
    auto b = filled(2, PriorityMode::Clipped, 1.0);
    b.update_priorities(all_indices(2), std::vector<double>{1.0, 3.0});
    b.rebuild_inverse();
    Rng rng(8);
    std::size_t zeros = 0, total = 0;
    for (int k = 0; k < 25000; ++k) {
      for (auto i : b.sample_inverse(4, rng).indices) {
        zeros += i == 0;
        ++total;
      }
    }
    CHECK(std::abs(static_cast<double>(zeros) / total - 0.75) < 0.01);
  }
  SUBCASE("staleness is tracked by version") {
    auto b = filled(4, PriorityMode::Clipped);
    Rng rng(9);
    CHECK_FALSE(b.inverse_fresh());
    CHECK_THROWS_AS(b.sample_inverse(2, rng), std::logic_error);
    b.rebuild_inverse();
    CHECK(b.inverse_fresh());
    CHECK_NOTHROW(b.sample_inverse(2, rng));
    const auto v = b.priority_version();
    b.update_priorities(std::vector<std::size_t>{1}, std::vector<double>{2.0});
    CHECK(b.priority_version() == v + 1);
    CHECK_THROWS_AS(b.sample_inverse(2, rng), std::logic_error);
    b.push(make_transition(9));
    b.rebuild_inverse();
    CHECK(b.inverse_version() == b.priority_version());
  }
  SUBCASE("requires clipped mode") {
    auto b = filled(2, PriorityMode::Proportional);
    CHECK_THROWS_AS(b.rebuild_inverse(), std::logic_error);
  }
}

TEST_CASE("priority csv dump") {
  auto b = filled(2, PriorityMode::Clipped);
  b.rebuild_inverse();
  std::ostringstream out;
  b.write_priority_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,abs_td,raw_priority,inverse_priority");
  std::getline(in, line);
  CHECK(line == "0,1,1,1");
}
