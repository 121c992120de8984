#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "okb/approximator.hpp"
#include "okb/keyboard.hpp"
#include "okb/rng.hpp"

namespace okb {

/// Per-episode (undiscounted) returns of one run.
struct LearningCurve {
  std::vector<double> returns;
  std::uint64_t seed = 0;
  std::string agent;
  std::string scenario;
  nlohmann::json hyperparams = nlohmann::json::object();
};

/// One decision of a keyboard player, as seen by its update.
struct PlayerDecision {
  int w_index = 0;
  double accumulated_reward = 0.0;
  double accumulated_discount = 1.0;
  int steps = 0;
  OptionEnd end = OptionEnd::Tau;
  double bootstrap = 0.0;  ///< max_{w'} Q̃(s', w') before the update
  double target = 0.0;
  double td_error = 0.0;
};

struct PlayerOptions {
  int episodes = 100;
  /// Bound on decisions per episode; options may take zero steps when
  /// they are allowed to terminate immediately.
  int max_decisions_per_episode = 0;  // 0: 10 × episode_length
  std::function<void(const PlayerDecision&)> on_decision;
};

struct PlayerResult {
  QFunction q;
  LearningCurve curve;
  long long decisions = 0;
  long long step_caps = 0;
};

/// Q-learning over the abstract action set W, acting through the keyboard.
template <typename H, typename O, typename Env, typename Encoder>
PlayerResult train_keyboard_player(const Keyboard<H, O>& kb, Env& env, const std::vector<WeightVector>& W,
                                   const HyperParams& hp, QFunction q, Encoder&& encode, Rng& rng,
                                   const PlayerOptions& opt) {
  hp.validate();
  if (W.empty()) throw std::invalid_argument("keyboard player: W must be non-empty");
  for (const auto& w : W)
    if (w.size() != kb.dim()) throw DimensionError("keyboard player: weight vector dimension does not match keyboard");
  if (q.num_actions() != static_cast<int>(W.size())) throw DimensionError("keyboard player: Q̃ must have |W| actions");
  const int max_decisions = opt.max_decisions_per_episode > 0 ? opt.max_decisions_per_episode : 10 * hp.episode_length;

  PlayerResult res{std::move(q), {}, 0, 0};
  Encoding x, x2;
  Eigen::VectorXd qv(static_cast<Eigen::Index>(W.size()));
  for (int ep = 0; ep < opt.episodes; ++ep) {
    O s = env.reset();
    double ret = 0.0;
    int t = 0;
    for (int decision = 0; t < hp.episode_length && decision < max_decisions; ++decision) {
      x.clear();
      encode(s, x);
      int wi = 0;
      if (rng.bernoulli(hp.epsilon)) {
        wi = rng.uniform_int(static_cast<int>(W.size()));
      } else {
        res.q.values(x, qv);
        wi = argmax_lowest(qv);
      }
      OptionLimits limits = kb.default_limits();
      limits.max_steps = std::min(limits.max_steps, hp.episode_length - t);
      OptionOutcome<O> out = run_option(kb, env, s, W[static_cast<std::size_t>(wi)], hp.gamma, limits);
      t += out.steps_taken;
      ret += out.undiscounted_reward;
      ++res.decisions;
      if (out.terminated_by == OptionEnd::StepCap) ++res.step_caps;
      x2.clear();
      encode(out.next_state, x2);
      res.q.values(x2, qv);
      PlayerDecision rec;
      rec.w_index = wi;
      rec.accumulated_reward = out.accumulated_reward;
      rec.accumulated_discount = out.accumulated_discount;
      rec.steps = out.steps_taken;
      rec.end = out.terminated_by;
      rec.bootstrap = qv.maxCoeff();
      rec.target = out.accumulated_reward + out.accumulated_discount * rec.bootstrap;
      rec.td_error = res.q.td_update(x, wi, rec.target, hp.alpha);
      if (opt.on_decision) opt.on_decision(rec);
      s = std::move(out.next_state);
      if (out.terminated_by == OptionEnd::Terminal) break;
    }
    res.curve.returns.push_back(ret);
  }
  res.curve.hyperparams = to_json(hp);
  return res;
}

/// The abstract actions of the basic options: the rows of the keyboard's
/// option weights.
template <typename H, typename O>
std::vector<WeightVector> basic_weights(const Keyboard<H, O>& kb) {
  std::vector<WeightVector> out;
  for (int i = 0; i < kb.num_options(); ++i) out.push_back(kb.layout().option_weights.row(i).transpose());
  return out;
}

/// The keyboard player restricted to the basic options.
template <typename H, typename O, typename Env, typename Encoder>
PlayerResult train_options_only(const Keyboard<H, O>& kb, Env& env, const HyperParams& hp, QFunction q,
                                Encoder&& encode, Rng& rng, const PlayerOptions& opt) {
  return train_keyboard_player(kb, env, basic_weights(kb), hp, std::move(q), std::forward<Encoder>(encode), rng, opt);
}

/// ε-greedy Q-learning on primitive actions.
template <typename Env, typename Encoder>
PlayerResult train_flat_q(Env& env, const HyperParams& hp, QFunction q, Encoder&& encode, Rng& rng,
                          const PlayerOptions& opt) {
  hp.validate();
  if (q.num_actions() != env.num_actions()) throw DimensionError("flat Q-learning: Q̃ must have one slot per action");
  PlayerResult res{std::move(q), {}, 0, 0};
  Encoding x, x2;
  Eigen::VectorXd qv(env.num_actions());
  for (int ep = 0; ep < opt.episodes; ++ep) {
    auto s = env.reset();
    double ret = 0.0;
    for (int t = 0; t < hp.episode_length; ++t) {
      x.clear();
      encode(s, x);
      int a = 0;
      if (rng.bernoulli(hp.epsilon)) {
        a = rng.uniform_int(env.num_actions());
      } else {
        res.q.values(x, qv);
        a = argmax_lowest(qv);
      }
      auto r = env.step(a);
      ret += r.reward;
      ++res.decisions;
      double target = r.reward;
      if (!r.terminal) {
        x2.clear();
        encode(r.observation, x2);
        res.q.values(x2, qv);
        target += hp.gamma * qv.maxCoeff();
      }
      res.q.td_update(x, a, target, hp.alpha);
      s = std::move(r.observation);
      if (r.terminal) break;
    }
    res.curve.returns.push_back(ret);
  }
  res.curve.hyperparams = to_json(hp);
  return res;
}

}  // namespace okb
