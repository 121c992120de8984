#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"
#include "okb/mdp_core.hpp"

namespace okb {

/// How a history summary is presented to a QFunction: a hashed key for
/// tabular tables and a sparse feature vector for linear ones. Encoders
/// fill whichever parts their approximator needs.
struct Encoding {
  std::uint64_t key = 0;
  std::vector<int> index;
  std::vector<double> value;

  void clear() {
    key = 0;
    index.clear();
    value.clear();
  }
  void add(int i, double v) {
    index.push_back(i);
    value.push_back(v);
  }
};

/// Learning hyperparameters shared by the keyboard builder and the players.
struct HyperParams {
  double alpha = 0.1;
  double epsilon = 0.1;
  double epsilon1 = 0.2;
  double epsilon2 = 0.1;
  double gamma = 0.99;
  int episode_length = 100;
  long long total_steps = 500000;
  std::uint64_t seed = 0;
  /// Explore over A⁺ instead of A in the keyboard builder.
  bool explore_terminate = false;

  void validate() const;
};

nlohmann::json to_json(const HyperParams& hp);
HyperParams hyper_params_from_json(const nlohmann::json& j, HyperParams defaults = {});

/// Action-value function over (summary, action slot); slots follow
/// AugmentedAction::slot (primitives first, τ last when present).
class QFunction {
 public:
  static QFunction tabular(int n_actions, double default_value = 0.0);
  static QFunction linear(int n_actions, int n_features);

  bool is_tabular() const { return std::holds_alternative<Tabular>(impl_); }
  int num_actions() const { return n_actions_; }
  int num_features() const;
  double default_value() const;

  double value(const Encoding& x, int slot) const;
  /// All slot values at x.
  void values(const Encoding& x, Eigen::Ref<Eigen::VectorXd> out) const;
  /// acc += scale · values(x).
  void add_scaled_values(const Encoding& x, double scale, Eigen::Ref<Eigen::VectorXd> acc) const;

  /// Moves value(x, slot) toward target by alpha; returns the TD error.
  double td_update(const Encoding& x, int slot, double target, double alpha);

  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  /// Number of stored rows (tabular) or nonzero weights (linear).
  std::size_t size() const;

  nlohmann::json to_json() const;
  static QFunction from_json(const nlohmann::json& j);

  /// Direct weight access for linear approximators.
  const Eigen::MatrixXd& weights() const;

 private:
  struct Tabular {
    double default_value = 0.0;
    std::unordered_map<std::uint64_t, Eigen::VectorXd> rows;
  };
  struct Linear {
    Eigen::MatrixXd w;  // n_actions × n_features
  };

  QFunction(int n_actions, std::variant<Tabular, Linear> impl)
      : n_actions_(n_actions), impl_(std::move(impl)) {}
  void check_slot(int slot) const;

  int n_actions_ = 0;
  bool frozen_ = false;
  std::variant<Tabular, Linear> impl_;
};

/// argmax over action_set with fixed tie-breaking: the lowest primitive
/// index among tied maxima; τ only if it strictly beats every primitive.
/// `values` is indexed by slot.
AugmentedAction greedy_action(const Eigen::Ref<const Eigen::VectorXd>& values,
                              std::span<const AugmentedAction> action_set, int n_primitives);

/// greedy_action over every slot of `values` (the last one being τ when
/// `has_terminate`).
AugmentedAction greedy_action(const Eigen::Ref<const Eigen::VectorXd>& values, bool has_terminate);

/// Slot index of the argmax over the first `n` entries, lowest index on ties.
int argmax_lowest(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace okb
