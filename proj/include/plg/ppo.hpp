#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plg/empirical.hpp"
#include "plg/policy.hpp"
#include "plg/sim.hpp"

namespace plg {

struct TrainConfig {
  double clip = 0.2;
  double gamma = 0.99;
  double lambda = 0.95;
  double learning_rate = 3e-4;
  int epochs = 4;
  int minibatch = 64;
  int iterations = 40;
  int rollout_steps = 2048;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double reward_cap = 20.0;
  std::uint64_t seed = 0;
  int hidden = 32;
  // Behaviour cloning onto the empirical policy before PPO starts.
  double clone_tolerance = 1e-2;
  double clone_learning_rate = 1e-2;
  int clone_max_steps = 20000;

  void validate() const;
};

struct RolloutStep {
  RiskVector risk;
  int action = 0;  // joint action index
  double log_prob = 0.0;  // under the behaviour policy
  double reward = 0.0;
  double value = 0.0;
  bool done = false;  // last step of a vehicle trajectory
  double advantage = 0.0;
  double ret = 0.0;  // value target
};

// Steps of one trajectory are contiguous and its last step has done = true.
struct RolloutBuffer {
  std::vector<RolloutStep> steps;
};

// GAE: A_k = sum_t (gamma*lambda)^(t-k) delta_t, delta_t = r_t + gamma*V_{t+1} - V_t,
// with V = 0 after a done step. Returns are A + V before normalisation. When
// `normalise` is set, advantages are standardised over the whole buffer.
void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda, bool normalise = true);

struct LossTerms {
  double total = 0.0;
  double policy = 0.0;   // -mean(min(r A, clip(r) A))
  double value = 0.0;    // mean((V - R)^2)
  double entropy = 0.0;  // mean policy entropy
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
};

struct LossGradient {
  std::vector<double> actor;
  std::vector<double> critic;
};

// total = policy + value_coef * value - entropy_coef * entropy, averaged over
// the batch. Writes d(total)/d(params) into `grad` when given.
LossTerms clipped_loss(const PolicyParams& params, std::span<const RolloutStep> batch,
                       const TrainConfig& config, LossGradient* grad = nullptr);

// Adaptive-moment gradient descent over a flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t size, double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                double epsilon = 1e-8);
  void step(std::span<double> params, std::span<const double> grad);
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  std::vector<double> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
};

// Largest |p_param - p_empirical| over joint actions at each bin's
// representative risk vector.
double clone_discrepancy(const PolicyParams& params, const EmpiricalPolicy& empirical);

struct CloneReport {
  int steps = 0;
  double discrepancy = 0.0;
  bool converged = false;
};

// Cross-entropy fit of the actor to the empirical per-bin distributions over
// representative and jittered risk vectors of every bin.
PolicyParams behaviour_clone(const EmpiricalPolicy& empirical, const TrainConfig& config,
                             CloneReport* report = nullptr);

struct IterationMetrics {
  int iteration = 0;
  std::size_t steps = 0;
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double collision_rate = 0.0;
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  double start_ratio = 0.0;  // mean ratio before the first update of the batch
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  PolicyParams initial;  // behaviour-cloned start
  PolicyParams params;   // last good parameters
  CloneReport clone;
  std::vector<IterationMetrics> metrics;
  bool diverged = false;
  std::string error;
};

// Collects `rollout_steps` policy decisions per iteration from episodes
// started at the seed states, then runs `epochs` passes of minibatch updates.
// Rollout episodes are deterministic per (seed, iteration, index), and each
// iteration uses the shortest episode prefix reaching the step budget, so the
// result does not depend on `jobs`.
TrainResult train(const Plg& plg, const ConditionalTable& table, const EmpiricalPolicy& empirical,
                  std::span<const SeedState> seeds, const SimConfig& sim, const TrainConfig& config,
                  int jobs = 1, const std::function<void(const IterationMetrics&)>& on_iteration = {});

// Rollout buffer for one iteration; exposed for tests.
RolloutBuffer collect_rollouts(const PolicyParams& params, const PolicyParams& background,
                               const Plg& plg, const ConditionalTable& table,
                               std::span<const SeedState> seeds, const SimConfig& sim,
                               const TrainConfig& config, int iteration, int jobs,
                               std::size_t* episodes = nullptr, std::size_t* collisions = nullptr);

}  // namespace plg
