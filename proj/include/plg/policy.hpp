#pragma once

#include <span>
#include <string>
#include <vector>

#include "plg/binary_io.hpp"
#include "plg/risk.hpp"

namespace plg {

// Two-layer tanh networks over risk features: the actor emits one logit per
// joint action, the critic a scalar state value. Parameters are independent.
struct PolicyShape {
  int k_bv = 4;
  int hidden = 32;

  int inputs() const { return kRiskBins + k_bv; }
  // W1 (hidden x inputs), b1 (hidden), W2 (actions x hidden), b2 (actions)
  std::size_t actor_size() const;
  // V1 (hidden x inputs), c1 (hidden), v2 (hidden), c2
  std::size_t critic_size() const;
  friend bool operator==(const PolicyShape&, const PolicyShape&) = default;
};

struct PolicyParams {
  PolicyShape shape;
  std::vector<double> actor;
  std::vector<double> critic;

  static PolicyParams zeros(PolicyShape shape);
  // Uniform(-scale, scale) hidden weights; output layers start at zero.
  static PolicyParams random(PolicyShape shape, Rng& rng, double scale = 0.5);
  bool finite() const;
  // Throws InvalidArgument naming the first non-finite tensor.
  void check_finite() const;
  friend bool operator==(const PolicyParams&, const PolicyParams&) = default;
};

// One-hot leading-risk bin followed by r/(1+r) for each risk entry.
std::vector<double> risk_features(const RiskVector& risk, int k_bv);

struct ActorPass {
  std::vector<double> input;
  std::vector<double> hidden;  // post-tanh
  ActionDistribution logits{};
  ActionDistribution probs{};
};

ActorPass actor_forward(const PolicyParams& params, std::span<const double> features);

struct CriticPass {
  std::vector<double> input;
  std::vector<double> hidden;
  double value = 0.0;
};

CriticPass critic_forward(const PolicyParams& params, std::span<const double> features);

// grad_actor += backprop of d(objective)/d(logits) through the actor.
void actor_backward(const PolicyParams& params, const ActorPass& pass,
                    std::span<const double> dlogits, std::span<double> grad_actor);
// grad_critic += dvalue * d(value)/d(critic params).
void critic_backward(const PolicyParams& params, const CriticPass& pass, double dvalue,
                     std::span<double> grad_critic);

ActionDistribution policy_distribution(const PolicyParams& params, const RiskVector& risk);
ActionSample policy_sample(const PolicyParams& params, const RiskVector& risk, Rng& rng);
double value(const PolicyParams& params, const RiskVector& risk);
double log_prob(const PolicyParams& params, const RiskVector& risk, ActionSample action);
// Analytic gradient of log pi(action | risk) with respect to the actor parameters.
std::vector<double> log_prob_gradient(const PolicyParams& params, const RiskVector& risk,
                                      ActionSample action);

class ParametricPolicy : public ActionPolicy {
 public:
  explicit ParametricPolicy(PolicyParams params);
  ActionDistribution distribution(const RiskVector& risk) const override;
  const PolicyParams& params() const { return params_; }

 private:
  PolicyParams params_;
};

inline constexpr Magic kPolicyMagic{'P', 'L', 'G', 'P'};
inline constexpr std::uint32_t kPolicyVersion = 1;

// Checkpoint: action grid and featurisation constants, then flat tensors with
// shapes. `metadata` is free-form text (the run configuration).
Bytes serialise_policy(const PolicyParams& params, const std::string& metadata = {});
PolicyParams deserialise_policy(std::span<const std::uint8_t> bytes, std::string* metadata = nullptr);

}  // namespace plg
