#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "okb/approximator.hpp"
#include "okb/keyboard.hpp"
#include "okb/mdp_core.hpp"
#include "okb/rng.hpp"

namespace okb {

/// Seeded random MDP. `sparsity` in [0, 1] is the fraction of successor
/// states left out of each row; 1 gives deterministic transitions.
TabularMdp random_mdp(int n_states, int n_actions, std::uint64_t seed, double sparsity, double gamma = 0.9);

/// Episodic simulator over a TabularMdp with deterministic rewards r(s, a).
class TabularEnv {
 public:
  TabularEnv(TabularMdp mdp, Eigen::MatrixXd rewards, std::uint64_t seed, int start_state = -1,
             std::vector<bool> terminal = {});

  int num_actions() const { return mdp_.num_actions(); }
  int num_states() const { return mdp_.num_states(); }
  const TabularMdp& mdp() const { return mdp_; }

  /// Start state (uniform over states when no fixed start was given).
  int reset();
  StepResult<int> step(int action);
  int state() const { return state_; }
  /// Places the simulator in state s.
  void set_state(int s);

 private:
  TabularMdp mdp_;
  Eigen::MatrixXd rewards_;
  Rng rng_;
  int start_;
  std::vector<bool> terminal_;
  int state_ = 0;
};

/// Tabular encoding of a Markov summary: the key is the state.
inline void encode_markov(const MarkovHistory& h, Encoding& x) { x.key = static_cast<std::uint64_t>(h.state); }

/// A keyboard layout over Markov summaries of a tabular environment.
KeyboardLayout<MarkovHistory, int> tabular_layout(int n_actions, std::vector<ExtendedCumulant<MarkovHistory, int>> basis,
                                                  double gamma);

}  // namespace okb
