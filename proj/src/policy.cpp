#include "plg/policy.hpp"

#include <algorithm>
#include <cmath>

namespace plg {

namespace {

struct ActorView {
  std::size_t d, h, a;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h * d; }
  std::size_t w2() const { return h * d + h; }
  std::size_t b2() const { return h * d + h + a * h; }
};

struct CriticView {
  std::size_t d, h;
  std::size_t w1() const { return 0; }
  std::size_t b1() const { return h * d; }
  std::size_t w2() const { return h * d + h; }
  std::size_t b2() const { return h * d + 2 * h; }
};

ActorView actor_view(const PolicyShape& s) {
  return {static_cast<std::size_t>(s.inputs()), static_cast<std::size_t>(s.hidden),
          static_cast<std::size_t>(kJointActions)};
}
CriticView critic_view(const PolicyShape& s) {
  return {static_cast<std::size_t>(s.inputs()), static_cast<std::size_t>(s.hidden)};
}

void softmax(const ActionDistribution& logits, ActionDistribution& probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    probs[j] = std::exp(logits[j] - m);
    z += probs[j];
  }
  for (auto& p : probs) p /= z;
}

}  // namespace

std::size_t PolicyShape::actor_size() const {
  const auto v = actor_view(*this);
  return v.b2() + v.a;
}

std::size_t PolicyShape::critic_size() const {
  const auto v = critic_view(*this);
  return v.b2() + 1;
}

PolicyParams PolicyParams::zeros(PolicyShape shape) {
  if (shape.k_bv < 1 || shape.hidden < 1) throw InvalidArgument("policy shape must be positive");
  PolicyParams p;
  p.shape = shape;
  p.actor.assign(shape.actor_size(), 0.0);
  p.critic.assign(shape.critic_size(), 0.0);
  return p;
}

PolicyParams PolicyParams::random(PolicyShape shape, Rng& rng, double scale) {
  auto p = zeros(shape);
  const auto av = actor_view(shape);
  for (std::size_t i = av.w1(); i < av.b1(); ++i) p.actor[i] = scale * (2.0 * uniform01(rng) - 1.0);
  const auto cv = critic_view(shape);
  for (std::size_t i = cv.w1(); i < cv.b1(); ++i) p.critic[i] = scale * (2.0 * uniform01(rng) - 1.0);
  return p;
}

bool PolicyParams::finite() const {
  auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(actor) && ok(critic);
}

void PolicyParams::check_finite() const {
  for (double x : actor) {
    if (!std::isfinite(x)) throw InvalidArgument("actor parameters are not finite");
  }
  for (double x : critic) {
    if (!std::isfinite(x)) throw InvalidArgument("critic parameters are not finite");
  }
}

std::vector<double> risk_features(const RiskVector& risk, int k_bv) {
  std::vector<double> x(static_cast<std::size_t>(kRiskBins + k_bv), 0.0);
  x[static_cast<std::size_t>(risk_bin(risk))] = 1.0;
  for (int i = 0; i < k_bv && static_cast<std::size_t>(i) < risk.inverse_mttc.size(); ++i) {
    const double r = risk.inverse_mttc[static_cast<std::size_t>(i)];
    if (!std::isfinite(r) || r < 0.0) throw InvalidArgument("risk entries must be finite and non-negative");
    x[static_cast<std::size_t>(kRiskBins + i)] = r / (1.0 + r);
  }
  return x;
}

ActorPass actor_forward(const PolicyParams& params, std::span<const double> features) {
  const auto v = actor_view(params.shape);
  if (features.size() != v.d) throw InvalidArgument("feature width does not match policy shape");
  ActorPass pass;
  pass.input.assign(features.begin(), features.end());
  pass.hidden.resize(v.h);
  const double* w = params.actor.data();
  for (std::size_t i = 0; i < v.h; ++i) {
    double z = w[v.b1() + i];
    for (std::size_t k = 0; k < v.d; ++k) z += w[v.w1() + i * v.d + k] * features[k];
    pass.hidden[i] = std::tanh(z);
  }
  for (std::size_t j = 0; j < v.a; ++j) {
    double z = w[v.b2() + j];
    for (std::size_t i = 0; i < v.h; ++i) z += w[v.w2() + j * v.h + i] * pass.hidden[i];
    pass.logits[j] = z;
  }
  softmax(pass.logits, pass.probs);
  return pass;
}

CriticPass critic_forward(const PolicyParams& params, std::span<const double> features) {
  const auto v = critic_view(params.shape);
  if (features.size() != v.d) throw InvalidArgument("feature width does not match policy shape");
  CriticPass pass;
  pass.input.assign(features.begin(), features.end());
  pass.hidden.resize(v.h);
  const double* w = params.critic.data();
  double out = w[v.b2()];
  for (std::size_t i = 0; i < v.h; ++i) {
    double z = w[v.b1() + i];
    for (std::size_t k = 0; k < v.d; ++k) z += w[v.w1() + i * v.d + k] * features[k];
    pass.hidden[i] = std::tanh(z);
    out += w[v.w2() + i] * pass.hidden[i];
  }
  pass.value = out;
  return pass;
}

void actor_backward(const PolicyParams& params, const ActorPass& pass,
                    std::span<const double> dlogits, std::span<double> grad) {
  const auto v = actor_view(params.shape);
  const double* w = params.actor.data();
  std::vector<double> dhidden(v.h, 0.0);
  for (std::size_t j = 0; j < v.a; ++j) {
    const double g = dlogits[j];
    if (g == 0.0) continue;
    grad[v.b2() + j] += g;
    for (std::size_t i = 0; i < v.h; ++i) {
      grad[v.w2() + j * v.h + i] += g * pass.hidden[i];
      dhidden[i] += g * w[v.w2() + j * v.h + i];
    }
  }
  for (std::size_t i = 0; i < v.h; ++i) {
    const double dz = dhidden[i] * (1.0 - pass.hidden[i] * pass.hidden[i]);
    grad[v.b1() + i] += dz;
    for (std::size_t k = 0; k < v.d; ++k) grad[v.w1() + i * v.d + k] += dz * pass.input[k];
  }
}

void critic_backward(const PolicyParams& params, const CriticPass& pass, double dvalue,
                     std::span<double> grad) {
  const auto v = critic_view(params.shape);
  const double* w = params.critic.data();
  grad[v.b2()] += dvalue;
  for (std::size_t i = 0; i < v.h; ++i) {
    grad[v.w2() + i] += dvalue * pass.hidden[i];
    const double dz = dvalue * w[v.w2() + i] * (1.0 - pass.hidden[i] * pass.hidden[i]);
    grad[v.b1() + i] += dz;
    for (std::size_t k = 0; k < v.d; ++k) grad[v.w1() + i * v.d + k] += dz * pass.input[k];
  }
}

ActionDistribution policy_distribution(const PolicyParams& params, const RiskVector& risk) {
  params.check_finite();
  return actor_forward(params, risk_features(risk, params.shape.k_bv)).probs;
}

ActionSample policy_sample(const PolicyParams& params, const RiskVector& risk, Rng& rng) {
  return sample_action(policy_distribution(params, risk), rng);
}

double value(const PolicyParams& params, const RiskVector& risk) {
  params.check_finite();
  return critic_forward(params, risk_features(risk, params.shape.k_bv)).value;
}

double log_prob(const PolicyParams& params, const RiskVector& risk, ActionSample action) {
  params.check_finite();
  const auto pass = actor_forward(params, risk_features(risk, params.shape.k_bv));
  const double m = *std::max_element(pass.logits.begin(), pass.logits.end());
  double z = 0.0;
  for (double l : pass.logits) z += std::exp(l - m);
  return pass.logits[static_cast<std::size_t>(action.joint())] - m - std::log(z);
}

std::vector<double> log_prob_gradient(const PolicyParams& params, const RiskVector& risk,
                                      ActionSample action) {
  params.check_finite();
  const auto pass = actor_forward(params, risk_features(risk, params.shape.k_bv));
  // d log softmax_a / d logit_j = [j == a] - p_j
  std::vector<double> dlogits(kJointActions);
  for (std::size_t j = 0; j < dlogits.size(); ++j) dlogits[j] = -pass.probs[j];
  dlogits[static_cast<std::size_t>(action.joint())] += 1.0;
  std::vector<double> grad(params.actor.size(), 0.0);
  actor_backward(params, pass, dlogits, grad);
  return grad;
}

ParametricPolicy::ParametricPolicy(PolicyParams params) : params_(std::move(params)) {
  params_.check_finite();
}

ActionDistribution ParametricPolicy::distribution(const RiskVector& risk) const {
  return actor_forward(params_, risk_features(risk, params_.shape.k_bv)).probs;
}

Bytes serialise_policy(const PolicyParams& params, const std::string& metadata) {
  ByteWriter w;
  w.put_array<double>(kAccelGrid);
  w.put<std::int32_t>(kLaneActions);
  w.put_array<double>(kRiskBinEdges);
  w.put<std::int32_t>(params.shape.k_bv);
  w.put<std::int32_t>(params.shape.hidden);
  // tensors: name, shape, values
  auto tensor = [&](const char* name, std::vector<std::uint64_t> dims, std::span<const double> values) {
    w.put_string(name);
    w.put_array<std::uint64_t>(dims);
    w.put_array<double>(values);
  };
  tensor("actor", {params.actor.size()}, params.actor);
  tensor("critic", {params.critic.size()}, params.critic);
  w.put_string(metadata);
  return frame(kPolicyMagic, kPolicyVersion, w.bytes());
}

PolicyParams deserialise_policy(std::span<const std::uint8_t> bytes, std::string* metadata) {
  const Bytes payload = unframe(bytes, kPolicyMagic, kPolicyVersion, "policy checkpoint");
  ByteReader r(payload);
  const auto grid = r.get_array<double>();
  const auto lanes = r.get<std::int32_t>();
  const auto edges = r.get_array<double>();
  if (!std::equal(grid.begin(), grid.end(), kAccelGrid.begin(), kAccelGrid.end()) ||
      lanes != kLaneActions ||
      !std::equal(edges.begin(), edges.end(), kRiskBinEdges.begin(), kRiskBinEdges.end())) {
    throw FormatError("policy checkpoint: action grid or risk bins differ from this build");
  }
  PolicyShape shape;
  shape.k_bv = r.get<std::int32_t>();
  shape.hidden = r.get<std::int32_t>();
  if (shape.k_bv < 1 || shape.hidden < 1) throw FormatError("policy checkpoint: bad shape");
  PolicyParams params = PolicyParams::zeros(shape);
  for (auto* target : {&params.actor, &params.critic}) {
    r.get_string();
    r.get_array<std::uint64_t>();
    auto values = r.get_array<double>();
    if (values.size() != target->size()) throw FormatError("policy checkpoint: tensor size mismatch");
    *target = std::move(values);
  }
  auto meta = r.get_string();
  if (metadata) *metadata = std::move(meta);
  r.expect_end();
  if (!params.finite()) throw FormatError("policy checkpoint: non-finite parameters");
  return params;
}

}  // namespace plg
