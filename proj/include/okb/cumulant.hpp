#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "okb/errors.hpp"
#include "okb/mdp_core.hpp"

namespace okb {

inline int history_length(const MarkovHistory&) { return 1; }

/// e(h, a, s') over history summaries and A⁺. `next` is null when a = τ;
/// cumulants documented as next-independent also accept null for primitives.
template <typename History, typename Observation>
class ExtendedCumulant {
 public:
  using Fn = std::function<double(const History&, AugmentedAction, const Observation*)>;

  ExtendedCumulant() = default;
  ExtendedCumulant(std::string family, nlohmann::json params, Fn fn)
      : family_(std::move(family)), params_(std::move(params)), fn_(std::move(fn)) {}

  double operator()(const History& h, AugmentedAction a, const Observation& next) const {
    return fn_(h, a, a.is_terminate() ? nullptr : &next);
  }
  double evaluate(const History& h, AugmentedAction a, const Observation* next) const {
    return fn_(h, a, a.is_terminate() ? nullptr : next);
  }
  /// Termination bonus e(h, τ).
  double bonus(const History& h) const { return fn_(h, AugmentedAction::terminate(), nullptr); }

  const std::string& family() const { return family_; }
  const nlohmann::json& params() const { return params_; }
  nlohmann::json spec() const {
    nlohmann::json j = params_;
    j["family"] = family_;
    return j;
  }
  explicit operator bool() const { return static_cast<bool>(fn_); }

 private:
  std::string family_;
  nlohmann::json params_;
  Fn fn_;
};

using WeightVector = Eigen::VectorXd;

/// Σᵢ wᵢ eᵢ, including termination bonuses.
template <typename H, typename O>
ExtendedCumulant<H, O> combine(std::vector<ExtendedCumulant<H, O>> parts, const WeightVector& w) {
  if (static_cast<Eigen::Index>(parts.size()) != w.size())
    throw DimensionError("combine: " + std::to_string(parts.size()) + " cumulants but weight vector of size " +
                         std::to_string(w.size()));
  if (!w.allFinite()) throw std::invalid_argument("combine: weights must be finite");
  nlohmann::json params;
  params["weights"] = std::vector<double>(w.data(), w.data() + w.size());
  params["parts"] = nlohmann::json::array();
  for (const auto& p : parts) params["parts"].push_back(p.spec());
  return ExtendedCumulant<H, O>(
      "combination", std::move(params),
      [parts = std::move(parts), w](const H& h, AugmentedAction a, const O* next) {
        double total = 0.0;
        for (std::size_t i = 0; i < parts.size(); ++i)
          total += w(static_cast<Eigen::Index>(i)) * parts[i].evaluate(h, a, next);
        return total;
      });
}

/// Deterministic Markov policy given as one primitive action per state.
using StatePolicy = std::vector<int>;

/// 0 if a = π(last(h)), z otherwise; τ counts as "otherwise".
template <typename H, typename O>
ExtendedCumulant<H, O> make_policy_cumulant(StatePolicy pi, double z) {
  if (!(z < 0.0)) throw std::invalid_argument("make_policy_cumulant: z must be negative");
  nlohmann::json params{{"policy", pi}, {"z", z}};
  return ExtendedCumulant<H, O>("policy", std::move(params),
                                [pi = std::move(pi), z](const H& h, AugmentedAction a, const O*) {
                                  if (a.is_terminate()) return z;
                                  return a.index() == pi.at(static_cast<std::size_t>(last_state(h))) ? 0.0 : z;
                                });
}

/// (I, π, β) with β required to be 0 or 1 everywhere it is queried.
template <typename H>
struct DeterministicOption {
  std::function<bool(int)> initiation;
  std::function<int(const H&)> policy;
  std::function<double(const H&)> termination;
};

/// The option-embedding cumulant: 0 on τ at single states outside I, 0 on τ
/// at longer histories with β(h) = 1, 0 on a = π(h), z otherwise.
template <typename H, typename O>
ExtendedCumulant<H, O> make_option_embedding_cumulant(DeterministicOption<H> o, double z) {
  if (!(z < 0.0)) throw std::invalid_argument("make_option_embedding_cumulant: z must be negative");
  return ExtendedCumulant<H, O>(
      "option_embedding", nlohmann::json{{"z", z}},
      [o = std::move(o), z](const H& h, AugmentedAction a, const O*) {
        if (a.is_terminate()) {
          if (is_single_state(h)) return o.initiation(last_state(h)) ? z : 0.0;
          const double beta = o.termination(h);
          if (beta != 0.0 && beta != 1.0)
            throw std::invalid_argument("make_option_embedding_cumulant: termination must be 0 or 1");
          return beta == 1.0 ? 0.0 : z;
        }
        return a.index() == o.policy(h) ? 0.0 : z;
      });
}

/// Follow π for k steps, then terminate: 0 if length(h) ≤ k and a = π(last(h)),
/// 0 if length(h) = k+1 and a = τ, −1 otherwise.
template <typename H, typename O>
ExtendedCumulant<H, O> make_k_step_policy_cumulant(StatePolicy pi, int k) {
  if (k < 1) throw std::invalid_argument("make_k_step_policy_cumulant: k must be >= 1");
  nlohmann::json params{{"policy", pi}, {"k", k}};
  return ExtendedCumulant<H, O>("k_step_policy", std::move(params),
                                [pi = std::move(pi), k](const H& h, AugmentedAction a, const O*) {
                                  const int len = history_length(h);
                                  if (a.is_terminate()) return len == k + 1 ? 0.0 : -1.0;
                                  if (len <= k && a.index() == pi.at(static_cast<std::size_t>(last_state(h))))
                                    return 0.0;
                                  return -1.0;
                                });
}

/// 1 iff last(h) = g and a = τ.
template <typename H, typename O>
ExtendedCumulant<H, O> make_goal_cumulant(int g) {
  if (g < 0) throw std::invalid_argument("make_goal_cumulant: goal must be a valid state");
  return ExtendedCumulant<H, O>("goal", nlohmann::json{{"goal", g}},
                                [g](const H& h, AugmentedAction a, const O*) {
                                  return a.is_terminate() && last_state(h) == g ? 1.0 : 0.0;
                                });
}

// Velocity channel lookup. Environments that report a velocity provide an
// overload of velocity_of for their history and observation types.
namespace detail {
template <typename T>
Eigen::Vector2d velocity_or_throw(const T& x) {
  if constexpr (requires { { velocity_of(x) } -> std::convertible_to<Eigen::Vector2d>; }) {
    return velocity_of(x);
  } else {
    throw std::logic_error("directional cumulant: environment reports no velocity");
  }
}

/// v(h) for τ, the realized displacement of the step for primitives.
template <typename H, typename O>
Eigen::Vector2d step_velocity(const H& h, AugmentedAction a, const O* next) {
  if (a.is_terminate() || next == nullptr) return velocity_or_throw(h);
  return velocity_or_throw(*next);
}
}  // namespace detail

/// wᵀv(h) while length(h) ≤ k, −1{a ≠ τ} afterwards.
template <typename H, typename O>
ExtendedCumulant<H, O> make_directional_cumulant(const Eigen::Vector2d& w, int k) {
  if (k < 1) throw std::invalid_argument("make_directional_cumulant: k must be >= 1");
  return ExtendedCumulant<H, O>("directional", nlohmann::json{{"w", {w.x(), w.y()}}, {"k", k}},
                                [w, k](const H& h, AugmentedAction a, const O* next) {
                                  if (history_length(h) <= k)
                                    return w.dot(detail::step_velocity(h, a, next));
                                  return a.is_terminate() ? 0.0 : -1.0;
                                });
}

/// One coordinate of the directional cumulant: v(h)[axis] while length(h) ≤ k, else 0.
template <typename H, typename O>
ExtendedCumulant<H, O> make_velocity_component_cumulant(int axis, int k) {
  if (axis != 0 && axis != 1) throw std::invalid_argument("velocity component axis must be 0 or 1");
  if (k < 1) throw std::invalid_argument("make_velocity_component_cumulant: k must be >= 1");
  return ExtendedCumulant<H, O>("velocity_component", nlohmann::json{{"axis", axis}, {"k", k}},
                                [axis, k](const H& h, AugmentedAction a, const O* next) {
                                  if (history_length(h) > k) return 0.0;
                                  return detail::step_velocity(h, a, next)(axis);
                                });
}

/// −1{a ≠ τ} once length(h) > k, else 0. Independent of the next observation.
template <typename H, typename O>
ExtendedCumulant<H, O> make_overrun_penalty(int k) {
  if (k < 1) throw std::invalid_argument("make_overrun_penalty: k must be >= 1");
  return ExtendedCumulant<H, O>("overrun_penalty", nlohmann::json{{"k", k}},
                                [k](const H& h, AugmentedAction a, const O*) {
                                  return history_length(h) > k && a.is_primitive() ? -1.0 : 0.0;
                                });
}

/// The constant-zero cumulant.
template <typename H, typename O>
ExtendedCumulant<H, O> make_zero_cumulant() {
  return ExtendedCumulant<H, O>("zero", nlohmann::json::object(),
                                [](const H&, AugmentedAction, const O*) { return 0.0; });
}

}  // namespace okb
