#include "plg/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "plg/parallel.hpp"

namespace plg {

void TrainConfig::validate() const {
  if (!(clip > 0.0 && clip < 1.0)) throw InvalidArgument("clip epsilon must lie in (0, 1)");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
  if (!(lambda > 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in (0, 1]");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (epochs < 1 || minibatch < 1 || rollout_steps < 1) {
    throw InvalidArgument("epochs, minibatch and rollout steps must be positive");
  }
  if (iterations < 0) throw InvalidArgument("iterations must be non-negative");
  if (!(reward_cap > 0.0)) throw InvalidArgument("reward cap must be positive");
  if (value_coef < 0.0 || entropy_coef < 0.0) throw InvalidArgument("loss coefficients must be non-negative");
  if (hidden < 1) throw InvalidArgument("hidden width must be positive");
  if (!(clone_tolerance > 0.0) || !(clone_learning_rate > 0.0) || clone_max_steps < 0) {
    throw InvalidArgument("bad behaviour-cloning settings");
  }
}

void compute_advantages(RolloutBuffer& buffer, double gamma, double lambda, bool normalise) {
  auto& s = buffer.steps;
  if (s.empty()) throw InvalidArgument("cannot compute advantages of an empty buffer");
  double gae = 0.0;
  double next_value = 0.0;
  for (std::size_t k = s.size(); k-- > 0;) {
    // The final buffer entry always closes a trajectory.
    const bool terminal = s[k].done || k + 1 == s.size();
    if (terminal) {
      gae = 0.0;
      next_value = 0.0;
    }
    const double delta = s[k].reward + gamma * next_value - s[k].value;
    gae = delta + gamma * lambda * gae;
    s[k].advantage = gae;
    s[k].ret = gae + s[k].value;
    next_value = s[k].value;
  }
  if (!normalise || s.size() < 2) return;
  double mean = 0.0;
  for (const auto& x : s) mean += x.advantage;
  mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (const auto& x : s) var += (x.advantage - mean) * (x.advantage - mean);
  const double sd = std::sqrt(var / static_cast<double>(s.size()));
  for (auto& x : s) {
    x.advantage -= mean;
    if (sd > 1e-12) x.advantage /= sd;
  }
}

LossTerms clipped_loss(const PolicyParams& params, std::span<const RolloutStep> batch,
                       const TrainConfig& config, LossGradient* grad) {
  if (batch.empty()) throw InvalidArgument("empty loss batch");
  const double n = static_cast<double>(batch.size());
  const double eps = config.clip;
  if (grad) {
    grad->actor.assign(params.actor.size(), 0.0);
    grad->critic.assign(params.critic.size(), 0.0);
  }
  LossTerms t;
  std::vector<double> dlogits(kJointActions);
  for (const auto& st : batch) {
    const auto x = risk_features(st.risk, params.shape.k_bv);
    const auto ap = actor_forward(params, x);
    const double m = *std::max_element(ap.logits.begin(), ap.logits.end());
    double z = 0.0;
    for (double l : ap.logits) z += std::exp(l - m);
    const double lse = m + std::log(z);
    ActionDistribution logp{};
    double entropy = 0.0;
    for (std::size_t j = 0; j < logp.size(); ++j) {
      logp[j] = ap.logits[j] - lse;
      entropy -= ap.probs[j] * logp[j];
    }

    const auto a = static_cast<std::size_t>(st.action);
    const double ratio = std::exp(logp[a] - st.log_prob);
    const double adv = st.advantage;
    const double unclipped = ratio * adv;
    const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
    t.policy -= std::min(unclipped, clipped) / n;
    t.entropy += entropy / n;
    t.mean_ratio += ratio / n;
    if (std::abs(ratio - 1.0) > eps) t.clip_fraction += 1.0 / n;

    const auto cp = critic_forward(params, x);
    const double verr = cp.value - st.ret;
    t.value += verr * verr / n;

    if (!grad) continue;
    // The clipped branch is constant in the parameters.
    const double coef = unclipped <= clipped ? -adv * ratio / n : 0.0;
    for (std::size_t j = 0; j < dlogits.size(); ++j) {
      const double onehot = j == a ? 1.0 : 0.0;
      // d(-c_e H)/dz_j = c_e p_j (log p_j + H)
      dlogits[j] = coef * (onehot - ap.probs[j]) +
                   config.entropy_coef / n * ap.probs[j] * (logp[j] + entropy);
    }
    actor_backward(params, ap, dlogits, grad->actor);
    critic_backward(params, cp, config.value_coef * 2.0 * verr / n, grad->critic);
  }
  t.total = t.policy + config.value_coef * t.value - config.entropy_coef * t.entropy;
  return t;
}

Adam::Adam(std::size_t size, double learning_rate, double beta1, double beta2, double epsilon)
    : m_(size, 0.0), v_(size, 0.0), lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InvalidArgument("optimiser size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    // m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    // theta <- theta - lr * m_hat / (sqrt(v_hat) + eps), with bias-corrected moments
    params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

namespace {

std::vector<RiskVector> clone_anchors(int k_bv) {
  std::vector<RiskVector> out;
  RiskVector zero;
  zero.inverse_mttc.assign(static_cast<std::size_t>(k_bv), 0.0);
  out.push_back(zero);
  for (int b = 0; b < kRiskBins; ++b) out.push_back(representative_risk(b, k_bv));
  return out;
}

// Random risk vector whose leading entry falls in `bin`.
RiskVector jittered_risk(int bin, int k_bv, Rng& rng) {
  const double lo = kRiskBinEdges[static_cast<std::size_t>(bin)];
  const double hi = kRiskBinEdges[static_cast<std::size_t>(bin) + 1];
  double lead;
  if (std::isfinite(hi)) {
    lead = lo + (hi - lo) * uniform01(rng);
  } else {
    lead = lo * std::exp(uniform01(rng) * std::log(1e3 / lo));
  }
  RiskVector r;
  r.inverse_mttc.assign(static_cast<std::size_t>(k_bv), 0.0);
  r.inverse_mttc[0] = lead;
  const int others = static_cast<int>(uniform01(rng) * k_bv);
  for (int i = 1; i <= others && i < k_bv; ++i) {
    r.inverse_mttc[static_cast<std::size_t>(i)] = lead * uniform01(rng);
  }
  std::sort(r.inverse_mttc.begin(), r.inverse_mttc.end(), std::greater<>());
  for (double v : r.inverse_mttc) {
    if (v > 0.0) r.mttc.push_back(1.0 / v);
  }
  return r;
}

double max_abs_diff(const ActionDistribution& a, const ActionDistribution& b) {
  double d = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) d = std::max(d, std::abs(a[j] - b[j]));
  return d;
}

}  // namespace

double clone_discrepancy(const PolicyParams& params, const EmpiricalPolicy& empirical) {
  double d = 0.0;
  for (const auto& r : clone_anchors(params.shape.k_bv)) {
    d = std::max(d, max_abs_diff(policy_distribution(params, r), empirical.distribution(r)));
  }
  return d;
}

PolicyParams behaviour_clone(const EmpiricalPolicy& empirical, const TrainConfig& config,
                             CloneReport* report) {
  config.validate();
  PolicyShape shape;
  shape.k_bv = empirical.k_bv();
  shape.hidden = config.hidden;
  Rng rng(mix_seed(config.seed, 0xB0C1));
  PolicyParams params = PolicyParams::random(shape, rng, 0.5);

  auto inputs = clone_anchors(shape.k_bv);
  for (int b = 0; b < kRiskBins; ++b) {
    for (int k = 0; k < 8; ++k) inputs.push_back(jittered_risk(b, shape.k_bv, rng));
  }
  std::vector<std::vector<double>> features;
  std::vector<ActionDistribution> targets;
  for (const auto& r : inputs) {
    features.push_back(risk_features(r, shape.k_bv));
    targets.push_back(empirical.distribution(r));
  }

  Adam opt(params.actor.size(), config.clone_learning_rate);
  std::vector<double> grad(params.actor.size());
  std::vector<double> dlogits(kJointActions);
  const double n = static_cast<double>(features.size());
  CloneReport rep;
  for (;;) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double worst = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto pass = actor_forward(params, features[i]);
      worst = std::max(worst, max_abs_diff(pass.probs, targets[i]));
      // Cross-entropy gradient wrt logits: p - q
      for (std::size_t j = 0; j < dlogits.size(); ++j) dlogits[j] = (pass.probs[j] - targets[i][j]) / n;
      actor_backward(params, pass, dlogits, grad);
    }
    if (worst < config.clone_tolerance) {
      rep.converged = true;
      break;
    }
    if (rep.steps >= config.clone_max_steps) break;
    opt.step(params.actor, grad);
    ++rep.steps;
  }
  rep.discrepancy = clone_discrepancy(params, empirical);
  if (report) *report = rep;
  return params;
}

RolloutBuffer collect_rollouts(const PolicyParams& params, const PolicyParams& background,
                               const Plg& plg, const ConditionalTable& table,
                               std::span<const SeedState> seeds, const SimConfig& sim,
                               const TrainConfig& config, int iteration, int jobs,
                               std::size_t* episodes_out, std::size_t* collisions_out) {
  if (seeds.empty()) throw InvalidArgument("training needs at least one seed state");
  const ParametricPolicy primary(params);
  const ParametricPolicy bg(background);
  const Policies policies{&primary, &bg};
  const std::uint64_t base = mix_seed(config.seed, 0x5EED0000ULL + static_cast<std::uint64_t>(iteration));
  const auto target = static_cast<std::size_t>(config.rollout_steps);
  const std::size_t block = static_cast<std::size_t>(std::max(jobs, 1)) * 4;
  const std::size_t episode_limit = target * 64 + 1024;

  std::vector<Episode> kept;
  std::size_t total = 0;
  for (std::size_t next = 0; total < target; next += block) {
    if (next >= episode_limit) throw InvalidArgument("seed states produce no policy decisions");
    std::vector<Episode> blk(block);
    parallel_for(block, jobs, [&](std::size_t k) {
      const std::uint64_t stream = mix_seed(base, next + k);
      const auto& seed = seeds[stream % seeds.size()];
      blk[k] = run_episode(seed, sim, policies, table, plg, mix_seed(stream, 1), true, config.reward_cap);
    });
    for (auto& ep : blk) {
      if (total >= target) break;
      total += ep.transitions.size();
      kept.push_back(std::move(ep));
    }
  }

  RolloutBuffer buffer;
  buffer.steps.reserve(total);
  std::size_t collisions = 0;
  for (const auto& ep : kept) {
    if (ep.collided()) ++collisions;
    std::size_t slots = 0;
    for (const auto& t : ep.transitions) slots = std::max(slots, t.slot + 1);
    for (std::size_t s = 0; s < slots; ++s) {
      const std::size_t first = buffer.steps.size();
      for (const auto& t : ep.transitions) {
        if (t.slot != s) continue;
        RolloutStep st;
        st.risk = t.risk;
        st.action = t.action.joint();
        st.log_prob = log_prob(params, t.risk, t.action);
        st.value = value(params, t.risk);
        st.reward = t.reward;
        st.done = t.done;
        buffer.steps.push_back(std::move(st));
      }
      if (buffer.steps.size() > first) buffer.steps.back().done = true;
    }
  }
  if (episodes_out) *episodes_out = kept.size();
  if (collisions_out) *collisions_out = collisions;
  return buffer;
}

TrainResult train(const Plg& plg, const ConditionalTable& table, const EmpiricalPolicy& empirical,
                  std::span<const SeedState> seeds, const SimConfig& sim, const TrainConfig& config,
                  int jobs, const std::function<void(const IterationMetrics&)>& on_iteration) {
  config.validate();
  sim.validate();
  TrainResult res;
  res.initial = behaviour_clone(empirical, config, &res.clone);
  res.params = res.initial;

  PolicyParams params = res.initial;
  Adam actor_opt(params.actor.size(), config.learning_rate);
  Adam critic_opt(params.critic.size(), config.learning_rate);
  Rng rng(mix_seed(config.seed, 0x7EA1));

  for (int it = 0; it < config.iterations; ++it) {
    std::size_t episodes = 0;
    std::size_t collisions = 0;
    auto buffer = collect_rollouts(params, res.initial, plg, table, seeds, sim, config, it, jobs,
                                   &episodes, &collisions);
    compute_advantages(buffer, config.gamma, config.lambda);

    IterationMetrics m;
    m.iteration = it;
    m.steps = buffer.steps.size();
    m.episodes = episodes;
    for (const auto& s : buffer.steps) m.mean_reward += s.reward;
    m.mean_reward /= static_cast<double>(buffer.steps.size());
    m.collision_rate = static_cast<double>(collisions) / static_cast<double>(episodes);
    const auto start = clipped_loss(params, buffer.steps, config);
    m.start_ratio = start.mean_ratio;
    m.policy_loss = start.policy;
    m.value_loss = start.value;
    m.entropy = start.entropy;

    PolicyParams candidate = params;
    std::vector<std::size_t> order(buffer.steps.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<RolloutStep> batch;
    LossGradient grad;
    double weight = 0.0;
    try {
      for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
          const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
          std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(config.minibatch)) {
          const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(config.minibatch));
          batch.clear();
          for (std::size_t k = b; k < e; ++k) batch.push_back(buffer.steps[order[k]]);
          const auto terms = clipped_loss(candidate, batch, config, &grad);
          if (!std::isfinite(terms.total)) {
            char msg[256];
            std::snprintf(msg, sizeof msg,
                          "non-finite loss at iteration %d epoch %d batch %zu: policy %g value %g "
                          "entropy %g ratio %g",
                          it, epoch, b / static_cast<std::size_t>(config.minibatch), terms.policy,
                          terms.value, terms.entropy, terms.mean_ratio);
            throw TrainingDiverged(msg);
          }
          const double w = static_cast<double>(batch.size());
          m.clip_fraction += terms.clip_fraction * w;
          m.mean_ratio += terms.mean_ratio * w;
          weight += w;
          actor_opt.step(candidate.actor, grad.actor);
          critic_opt.step(candidate.critic, grad.critic);
          if (!candidate.finite()) {
            throw TrainingDiverged("parameters became non-finite at iteration " + std::to_string(it));
          }
        }
      }
    } catch (const TrainingDiverged& e) {
      res.diverged = true;
      res.error = e.what();
      res.params = params;
      return res;
    }
    m.clip_fraction /= weight;
    m.mean_ratio /= weight;
    params = std::move(candidate);
    res.params = params;
    res.metrics.push_back(m);
    if (on_iteration) on_iteration(m);
  }
  return res;
}

}  // namespace plg
