#include <doctest.h>

#include <cmath>
#include <random>

#include "plg/policy.hpp"
#include "plg/ppo.hpp"
#include "support.hpp"

using namespace plg;

namespace {

RiskVector random_risk(Rng& rng, int k_bv) {
  RiskVector r;
  for (int i = 0; i < k_bv; ++i) {
    const double u = uniform01(rng);
    r.inverse_mttc.push_back(u < 0.3 ? 0.0 : 3.0 * u * u);
  }
  std::sort(r.inverse_mttc.begin(), r.inverse_mttc.end(), std::greater<>());
  for (double v : r.inverse_mttc) {
    if (v > 0.0) r.mttc.push_back(1.0 / v);
  }
  return r;
}

PolicyParams random_params(std::uint64_t seed, int hidden = 6) {
  Rng rng(seed);
  auto p = PolicyParams::random({4, hidden}, rng, 0.8);
  // Non-zero output layers so that every gradient path is exercised.
  for (auto& w : p.actor) w += 0.3 * (uniform01(rng) - 0.5);
  for (auto& w : p.critic) w += 0.3 * (uniform01(rng) - 0.5);
  return p;
}

bool close_relative(double analytic, double numeric, double tol) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale <= tol;
}

RolloutStep make_step(const PolicyParams& p, const RiskVector& r, int action, double ratio,
                      double adv, double ret) {
  RolloutStep s;
  s.risk = r;
  s.action = action;
  s.log_prob = log_prob(p, r, ActionSample::from_joint(action)) - std::log(ratio);
  s.advantage = adv;
  s.ret = ret;
  return s;
}

EmpiricalPolicy toy_empirical() {
  EmpiricalPolicy::Counts counts{};
  for (int b = 0; b < kRiskBins; ++b) {
    counts[static_cast<std::size_t>(b)][10] = 50;
    counts[static_cast<std::size_t>(b)][static_cast<std::size_t>(b)] = 10 * static_cast<unsigned>(b);
  }
  return EmpiricalPolicy(counts, 1.0, 4);
}

std::vector<SeedState> toy_seeds(const testing::Road& road) {
  SeedState s;
  s.vehicles.push_back({1, road.id(0, 0), 0.0, 12.0, 0.0, 0});
  s.vehicles.push_back({2, road.id(0, 4), 0.0, 6.0, 0.0, 0});
  s.vehicles.push_back({3, road.id(1, 2), 0.0, 9.0, 0.0, 1});
  s.min_mttc = 10.0 / 6.0;
  SeedState t = s;
  t.vehicles[1].node = road.id(0, 8);
  return {s, t};
}

TrainConfig small_train() {
  TrainConfig c;
  c.iterations = 3;
  c.rollout_steps = 120;
  c.minibatch = 32;
  c.epochs = 2;
  c.hidden = 8;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("zero actor weights give a uniform policy") {
  const auto p = PolicyParams::zeros({4, 8});
  Rng rng(1);
  const auto d = policy_distribution(p, random_risk(rng, 4));
  for (double v : d) CHECK(v == doctest::Approx(1.0 / kJointActions));
  CHECK(p.actor.size() == p.shape.actor_size());
  CHECK(p.critic.size() == p.shape.critic_size());
  CHECK(p.shape.inputs() == kRiskBins + 4);
}

TEST_CASE("features are a one-hot risk bin followed by squashed risks") {
  RiskVector r;
  r.inverse_mttc = {1.0, 0.0, 0.0, 0.0};
  const auto f = risk_features(r, 4);
  REQUIRE(f.size() == 9);
  CHECK(f[4] == 1.0);
  CHECK(f[0] + f[1] + f[2] + f[3] == 0.0);
  CHECK(f[5] == doctest::Approx(0.5));
  CHECK(f[6] == 0.0);
}

TEST_CASE("identical risk vectors give identical distributions") {
  const auto p = random_params(3);
  Rng rng(4);
  const auto r = random_risk(rng, 4);
  const auto copy = r;
  CHECK(policy_distribution(p, r) == policy_distribution(p, copy));
  double s = 0.0;
  for (double v : policy_distribution(p, r)) s += v;
  CHECK(std::abs(s - 1.0) <= 1e-12);
}

TEST_CASE("log-policy gradient matches central differences") {
  Rng rng(21);
  const double h = 1e-5;
  for (int draw = 0; draw < 100; ++draw) {
    auto p = random_params(100 + static_cast<std::uint64_t>(draw));
    const auto r = random_risk(rng, 4);
    const auto a = ActionSample::from_joint(static_cast<int>(rng() % kJointActions));
    const auto g = log_prob_gradient(p, r, a);
    REQUIRE(g.size() == p.actor.size());
    for (std::size_t i = 0; i < p.actor.size(); i += 7) {
      const double keep = p.actor[i];
      p.actor[i] = keep + h;
      const double up = log_prob(p, r, a);
      p.actor[i] = keep - h;
      const double down = log_prob(p, r, a);
      p.actor[i] = keep;
      CHECK_MESSAGE(close_relative(g[i], (up - down) / (2 * h), 1e-4), "param " << i);
    }
  }
}

TEST_CASE("clipped objective arithmetic") {
  const auto p = random_params(7);
  Rng rng(2);
  const auto r = random_risk(rng, 4);
  TrainConfig cfg;
  cfg.clip = 0.2;
  cfg.value_coef = 0.0;
  cfg.entropy_coef = 0.0;

  const std::vector<RolloutStep> same{make_step(p, r, 5, 1.0, 2.0, 0.0)};
  auto t = clipped_loss(p, same, cfg);
  CHECK(t.policy == doctest::Approx(-2.0));
  CHECK(t.mean_ratio == doctest::Approx(1.0));
  CHECK(t.clip_fraction == 0.0);

  const std::vector<RolloutStep> high{make_step(p, r, 5, 1.5, 2.0, 0.0)};
  t = clipped_loss(p, high, cfg);
  CHECK(t.policy == doctest::Approx(-1.2 * 2.0));
  CHECK(t.clip_fraction == 1.0);

  const std::vector<RolloutStep> high_negative{make_step(p, r, 5, 1.5, -2.0, 0.0)};
  CHECK(clipped_loss(p, high_negative, cfg).policy == doctest::Approx(1.5 * 2.0));

  const std::vector<RolloutStep> low_negative{make_step(p, r, 5, 0.5, -2.0, 0.0)};
  CHECK(clipped_loss(p, low_negative, cfg).policy == doctest::Approx(0.8 * 2.0));

  const std::vector<RolloutStep> low_positive{make_step(p, r, 5, 0.5, 2.0, 0.0)};
  CHECK(clipped_loss(p, low_positive, cfg).policy == doctest::Approx(-0.5 * 2.0));
}

TEST_CASE("clip fraction counts ratios outside the trust region") {
  const auto p = random_params(8);
  Rng rng(3);
  TrainConfig cfg;
  std::vector<RolloutStep> batch;
  const double ratios[] = {0.5, 0.79, 0.81, 1.0, 1.19, 1.21, 2.0, 1.0};
  for (double q : ratios) batch.push_back(make_step(p, random_risk(rng, 4), 3, q, 1.0, 0.0));
  const auto t = clipped_loss(p, batch, cfg);
  CHECK(t.clip_fraction == doctest::Approx(4.0 / 8.0));
  double mean = 0.0;
  for (double q : ratios) mean += q / 8.0;
  CHECK(t.mean_ratio == doctest::Approx(mean));
  CHECK(t.total == doctest::Approx(t.policy + cfg.value_coef * t.value - cfg.entropy_coef * t.entropy));
}

TEST_CASE("full loss gradient matches central differences") {
  auto p = random_params(31);
  Rng rng(5);
  TrainConfig cfg;
  cfg.entropy_coef = 0.05;
  std::vector<RolloutStep> batch;
  const double ratios[] = {0.5, 0.9, 1.0, 1.1, 1.5, 0.7, 1.3, 1.0};
  for (int i = 0; i < 8; ++i) {
    const double adv = (i % 2 ? 1.0 : -1.0) * (0.5 + 0.2 * i);
    batch.push_back(make_step(p, random_risk(rng, 4), static_cast<int>(rng() % kJointActions),
                              ratios[i], adv, 0.3 * i - 1.0));
  }
  LossGradient g;
  clipped_loss(p, batch, cfg, &g);
  const double h = 1e-6;
  for (std::size_t i = 0; i < p.actor.size(); ++i) {
    const double keep = p.actor[i];
    p.actor[i] = keep + h;
    const double up = clipped_loss(p, batch, cfg).total;
    p.actor[i] = keep - h;
    const double down = clipped_loss(p, batch, cfg).total;
    p.actor[i] = keep;
    CHECK_MESSAGE(close_relative(g.actor[i], (up - down) / (2 * h), 1e-4), "actor " << i);
  }
  for (std::size_t i = 0; i < p.critic.size(); ++i) {
    const double keep = p.critic[i];
    p.critic[i] = keep + h;
    const double up = clipped_loss(p, batch, cfg).total;
    p.critic[i] = keep - h;
    const double down = clipped_loss(p, batch, cfg).total;
    p.critic[i] = keep;
    CHECK_MESSAGE(close_relative(g.critic[i], (up - down) / (2 * h), 1e-4), "critic " << i);
  }
}

TEST_CASE("advantages follow the discounted residual sum") {
  RolloutBuffer b;
  b.steps.resize(3);
  b.steps[0].reward = 1.0;
  b.steps[1].reward = 0.0;
  b.steps[2].reward = 2.0;
  b.steps[2].done = true;
  compute_advantages(b, 0.5, 1.0, false);
  CHECK(b.steps[2].advantage == doctest::Approx(2.0));
  CHECK(b.steps[1].advantage == doctest::Approx(1.0));
  CHECK(b.steps[0].advantage == doctest::Approx(1.5));
  CHECK(b.steps[0].ret == doctest::Approx(1.5));
}

TEST_CASE("advantages match the quadratic direct-sum oracle") {
  Rng rng(13);
  RolloutBuffer b;
  for (int k = 0; k < 300; ++k) {
    RolloutStep s;
    s.reward = 3.0 * uniform01(rng);
    s.value = 2.0 * uniform01(rng) - 0.5;
    s.done = uniform01(rng) < 0.05;
    b.steps.push_back(s);
  }
  const double gamma = 0.97;
  const double lambda = 0.9;
  compute_advantages(b, gamma, lambda, false);
  const auto& s = b.steps;
  const std::size_t n = s.size();
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0.0;
    double w = 1.0;
    for (std::size_t t = k; t < n; ++t) {
      const bool terminal = s[t].done || t + 1 == n;
      const double next = terminal ? 0.0 : s[t + 1].value;
      sum += w * (s[t].reward + gamma * next - s[t].value);
      if (terminal) break;
      w *= gamma * lambda;
    }
    CHECK(std::abs(s[k].advantage - sum) <= 1e-10);
    CHECK(std::abs(s[k].ret - (sum + s[k].value)) <= 1e-10);
  }
}

TEST_CASE("normalised advantages have zero mean and unit deviation") {
  Rng rng(14);
  RolloutBuffer b;
  for (int k = 0; k < 200; ++k) {
    RolloutStep s;
    s.reward = uniform01(rng);
    s.done = k % 17 == 16;
    b.steps.push_back(s);
  }
  compute_advantages(b, 0.99, 0.95, true);
  double mean = 0.0, sq = 0.0;
  for (const auto& s : b.steps) mean += s.advantage / 200.0;
  for (const auto& s : b.steps) sq += (s.advantage - mean) * (s.advantage - mean) / 200.0;
  CHECK(std::abs(mean) <= 1e-12);
  CHECK(std::abs(std::sqrt(sq) - 1.0) <= 1e-12);
  RolloutBuffer empty;
  CHECK_THROWS_AS(compute_advantages(empty, 0.99, 0.95), InvalidArgument);
}

TEST_CASE("adam minimises a quadratic") {
  std::vector<double> x{5.0, -3.0};
  Adam opt(2, 0.1);
  for (int i = 0; i < 2000; ++i) {
    const std::vector<double> g{2.0 * (x[0] - 1.0), 2.0 * (x[1] + 2.0)};
    opt.step(x, g);
  }
  CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(x[1] == doctest::Approx(-2.0).epsilon(1e-3));
  std::vector<double> wrong(3);
  CHECK_THROWS_AS(opt.step(wrong, wrong), InvalidArgument);
}

TEST_CASE("behaviour cloning reproduces the empirical table") {
  const auto emp = toy_empirical();
  TrainConfig cfg;
  cfg.hidden = 16;
  CloneReport report;
  const auto p = behaviour_clone(emp, cfg, &report);
  CHECK(report.converged);
  CHECK(report.discrepancy <= cfg.clone_tolerance);
  CHECK(clone_discrepancy(p, emp) == doctest::Approx(report.discrepancy));
}

TEST_CASE("policy checkpoints round trip and reject non-finite weights") {
  auto p = random_params(40);
  std::string meta;
  const auto back = deserialise_policy(serialise_policy(p, "{\"a\":1}"), &meta);
  CHECK(back == p);
  CHECK(meta == "{\"a\":1}");
  p.actor[3] = std::nan("");
  CHECK_FALSE(p.finite());
  CHECK_THROWS_AS(p.check_finite(), InvalidArgument);
  auto bytes = serialise_policy(random_params(41));
  bytes[bytes.size() - 1] ^= 1;
  CHECK_THROWS_AS(deserialise_policy(bytes), FormatError);
}

TEST_CASE("training without iterations returns the cloned policy") {
  const auto road = testing::straight_road(2, 40, 2.5, true);
  const auto seeds = toy_seeds(road);
  auto cfg = small_train();
  cfg.iterations = 0;
  const auto result = train(road.plg, road.table, toy_empirical(), seeds, SimConfig{}, cfg);
  CHECK(result.params == result.initial);
  CHECK(result.metrics.empty());
  CHECK(clone_discrepancy(result.params, toy_empirical()) <= cfg.clone_tolerance);
}

TEST_CASE("training is deterministic, job invariant, and starts each batch at ratio one") {
  const auto road = testing::straight_road(2, 40, 2.5, true);
  const auto seeds = toy_seeds(road);
  const auto cfg = small_train();
  SimConfig sim;
  const auto a = train(road.plg, road.table, toy_empirical(), seeds, sim, cfg, 1);
  const auto b = train(road.plg, road.table, toy_empirical(), seeds, sim, cfg, 1);
  const auto c = train(road.plg, road.table, toy_empirical(), seeds, sim, cfg, 3);
  CHECK_FALSE(a.diverged);
  CHECK(a.params == b.params);
  CHECK(a.params == c.params);
  REQUIRE(a.metrics.size() == 3);
  for (const auto& m : a.metrics) {
    CHECK(std::abs(m.start_ratio - 1.0) <= 1e-6);
    CHECK(m.steps >= static_cast<std::size_t>(cfg.rollout_steps));
    CHECK(m.clip_fraction >= 0.0);
    CHECK(m.clip_fraction <= 1.0);
  }
  CHECK(a.params.finite());
  CHECK_FALSE(a.params == a.initial);
}

TEST_CASE("rollouts close every vehicle trajectory") {
  const auto road = testing::straight_road(2, 40, 2.5, true);
  const auto seeds = toy_seeds(road);
  const auto cfg = small_train();
  const auto p = behaviour_clone(toy_empirical(), cfg);
  const auto buf = collect_rollouts(p, p, road.plg, road.table, seeds, SimConfig{}, cfg, 0, 1);
  REQUIRE_FALSE(buf.steps.empty());
  CHECK(buf.steps.back().done);
  for (const auto& s : buf.steps) {
    CHECK(s.reward >= 0.0);
    CHECK(s.reward <= cfg.reward_cap);
    CHECK(s.action >= 0);
    CHECK(s.action < kJointActions);
  }
}

TEST_CASE("training configuration is validated") {
  TrainConfig c;
  c.clip = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.gamma = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = TrainConfig{};
  c.minibatch = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK_NOTHROW(TrainConfig{}.validate());
}
