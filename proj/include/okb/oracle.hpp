#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "okb/approximator.hpp"
#include "okb/cumulant.hpp"
#include "okb/errors.hpp"
#include "okb/mdp_core.hpp"
#include "okb/rng.hpp"

namespace okb {

template <typename Scalar = double>
using OracleCumulant = ExtendedCumulant<HistoryRefT<Scalar>, int>;

/// Exact action values over (history node, slot) of an ExtendedMdp.
template <typename Scalar = double>
struct ExactQT {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> q;
  Scalar residual = 0;
  int sweeps = 0;
};
using ExactQ = ExactQT<double>;

struct SolverOptions {
  double tol = 1e-12;
  int max_sweeps = 100000;
};

/// Expected immediate cumulant R(h, a) for every node and slot; zero at s∅.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> expected_cumulant(const ExtendedMdpT<Scalar>& m,
                                                                         const OracleCumulant<Scalar>& e) {
  const int na = m.num_primitive_actions();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> r =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(m.num_nodes(), na + 1);
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_absorbing(i)) continue;
    const HistoryRefT<Scalar> h{&m, i};
    for (int a = 0; a < na; ++a) {
      Scalar acc = 0;
      for (const auto& edge : m.edges(i, a))
        acc += edge.probability * static_cast<Scalar>(e(h, AugmentedAction::primitive(a), edge.next_state));
      r(i, a) = acc;
    }
    r(i, na) = static_cast<Scalar>(e.bonus(h));
  }
  return r;
}

namespace detail {

/// Gauss-Seidel sweeps in reverse node order. Children follow their parents
/// in the enumeration, so on truncated history trees one sweep is exact.
/// `policy` empty means optimal control, else the slot followed at each node.
template <typename Scalar>
ExactQT<Scalar> solve(const ExtendedMdpT<Scalar>& m, const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& r,
                      const std::vector<int>& policy, SolverOptions opt) {
  const int n = m.num_nodes();
  const int na = m.num_primitive_actions();
  const Scalar gamma = m.discount();
  ExactQT<Scalar> out;
  out.q = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, na + 1);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  auto state_value = [&](int i) -> Scalar {
    if (policy.empty()) return out.q.row(i).maxCoeff();
    return out.q(i, policy[static_cast<std::size_t>(i)]);
  };
  auto backup = [&](int i, int a) -> Scalar {
    if (a == na) return r(i, na);
    Scalar acc = r(i, a);
    for (const auto& edge : m.edges(i, a)) acc += gamma * edge.probability * v(edge.target);
    return acc;
  };
  for (out.sweeps = 1; out.sweeps <= opt.max_sweeps; ++out.sweeps) {
    Scalar change = 0;
    for (int i = n - 1; i >= 0; --i) {
      if (m.is_absorbing(i)) continue;
      for (int a = 0; a <= na; ++a) {
        const Scalar q = backup(i, a);
        change = std::max<Scalar>(change, std::abs(q - out.q(i, a)));
        out.q(i, a) = q;
      }
      v(i) = state_value(i);
    }
    if (change <= static_cast<Scalar>(opt.tol)) break;
  }
  // Residual of a full synchronous backup.
  Scalar res = 0;
  for (int i = 0; i < n; ++i) {
    if (m.is_absorbing(i)) continue;
    for (int a = 0; a <= na; ++a) res = std::max<Scalar>(res, std::abs(backup(i, a) - out.q(i, a)));
  }
  out.residual = res;
  if (out.sweeps > opt.max_sweeps || !out.q.allFinite())
    throw NonConvergence("exact solver did not converge within " + std::to_string(opt.max_sweeps) + " sweeps");
  return out;
}

}  // namespace detail

/// Q* of e over M⁺.
template <typename Scalar>
ExactQT<Scalar> value_iteration(const ExtendedMdpT<Scalar>& m, const OracleCumulant<Scalar>& e, SolverOptions opt = {}) {
  return detail::solve(m, expected_cumulant(m, e), {}, opt);
}

/// Q^ω of e over M⁺ for an augmented policy given as one slot per node.
template <typename Scalar>
ExactQT<Scalar> exact_policy_evaluation(const ExtendedMdpT<Scalar>& m, const std::vector<int>& omega,
                                        const OracleCumulant<Scalar>& e, SolverOptions opt = {}) {
  if (static_cast<int>(omega.size()) != m.num_nodes())
    throw DimensionError("exact_policy_evaluation: policy must give one slot per node");
  for (int s : omega)
    if (s < 0 || s > m.num_primitive_actions()) throw std::invalid_argument("exact_policy_evaluation: bad slot");
  return detail::solve(m, expected_cumulant(m, e), omega, opt);
}

/// Greedy augmented policy of a value table under the fixed tie rule.
template <typename Scalar>
std::vector<int> greedy_policy(const ExactQT<Scalar>& q) {
  std::vector<int> out(static_cast<std::size_t>(q.q.rows()));
  const int na = static_cast<int>(q.q.cols()) - 1;
  for (Eigen::Index i = 0; i < q.q.rows(); ++i) {
    Eigen::VectorXd row = q.q.row(i).transpose().template cast<double>();
    out[static_cast<std::size_t>(i)] = greedy_action(row, true).slot(na);
  }
  return out;
}

/// An option over the nodes of an ExtendedMdp.
struct TabularOption {
  std::vector<bool> initiation;  ///< per state
  std::vector<int> policy;       ///< primitive per node
  std::vector<int> termination;  ///< β ∈ {0, 1} per node
};

template <typename Scalar>
DeterministicOption<HistoryRefT<Scalar>> as_option(const TabularOption& o) {
  return {[init = o.initiation](int s) { return static_cast<bool>(init.at(static_cast<std::size_t>(s))); },
          [pi = o.policy](const HistoryRefT<Scalar>& h) { return pi.at(static_cast<std::size_t>(h.node)); },
          [beta = o.termination](const HistoryRefT<Scalar>& h) {
            return static_cast<double>(beta.at(static_cast<std::size_t>(h.node)));
          }};
}

/// The option induced by Q*: π(h) = argmax over primitives (lowest index on
/// ties), β(h) = 1 iff τ attains the maximum, I = {s | β(s) = 0}.
struct InducedOption {
  TabularOption option;
  /// Nodes where more than one primitive attains the maximum.
  int ambiguous_policy_nodes = 0;
  ExactQ q;
};

inline InducedOption induce_option(const ExtendedMdp& m, const OracleCumulant<double>& e, double tie_tol = 1e-10) {
  InducedOption out;
  out.q = value_iteration(m, e);
  const int n = m.num_nodes();
  const int na = m.num_primitive_actions();
  out.option.policy.assign(static_cast<std::size_t>(n), 0);
  out.option.termination.assign(static_cast<std::size_t>(n), 1);
  for (int i = 0; i < n; ++i) {
    if (m.is_absorbing(i)) continue;
    const auto row = out.q.q.row(i);
    const int best = argmax_lowest(row.head(na).transpose());
    const double top = row.maxCoeff();
    int tied = 0;
    for (int a = 0; a < na; ++a)
      if (row(a) >= row(best) - tie_tol) ++tied;
    if (tied > 1) ++out.ambiguous_policy_nodes;
    out.option.policy[static_cast<std::size_t>(i)] = best;
    out.option.termination[static_cast<std::size_t>(i)] = row(na) >= top - tie_tol ? 1 : 0;
  }
  const int ns = m.base().num_states();
  out.option.initiation.assign(static_cast<std::size_t>(ns), false);
  for (int s = 0; s < ns; ++s) out.option.initiation[static_cast<std::size_t>(s)] = out.option.termination[static_cast<std::size_t>(s)] == 0;
  return out;
}

inline InducedOption induce_option(const TabularMdp& m, const OracleCumulant<double>& e, int horizon_bound) {
  const ExtendedMdp x = build_extended_mdp(m, horizon_bound);
  return induce_option(x, e);
}

struct RoundTripReport {
  bool ok = true;
  int initiation_mismatches = 0;
  int policy_mismatches = 0;
  int termination_mismatches = 0;
  int ambiguous_policy_nodes = 0;
};

/// Embeds o with the option-embedding cumulant for z and checks that the
/// re-induced option equals o at every enumerated history.
inline RoundTripReport verify_roundtrip(const ExtendedMdp& m, const TabularOption& o, double z) {
  const auto e = make_option_embedding_cumulant<HistoryRef, int>(as_option<double>(o), z);
  const InducedOption got = induce_option(m, e);
  RoundTripReport rep;
  rep.ambiguous_policy_nodes = got.ambiguous_policy_nodes;
  for (int s = 0; s < m.base().num_states(); ++s)
    if (got.option.initiation[static_cast<std::size_t>(s)] != o.initiation.at(static_cast<std::size_t>(s)))
      ++rep.initiation_mismatches;
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_absorbing(i)) continue;
    const auto k = static_cast<std::size_t>(i);
    if (got.option.policy[k] != o.policy.at(k)) ++rep.policy_mismatches;
    // At single states β is determined by I.
    const int want_beta = m.node(i).length == 1 ? (o.initiation.at(static_cast<std::size_t>(m.node(i).last_state)) ? 0 : 1)
                                                : o.termination.at(k);
    if (got.option.termination[k] != want_beta) ++rep.termination_mismatches;
  }
  rep.ok = rep.initiation_mismatches == 0 && rep.policy_mismatches == 0 && rep.termination_mismatches == 0;
  return rep;
}

inline RoundTripReport verify_roundtrip(const TabularMdp& m, const TabularOption& o, double z, int horizon_bound) {
  return verify_roundtrip(build_extended_mdp(m, horizon_bound), o, z);
}

struct GpiBoundReport {
  double min_lower_slack = std::numeric_limits<double>::infinity();  ///< min of Q^{ω̃} − maxⱼ Q^{ωⱼ}
  double min_upper_slack = std::numeric_limits<double>::infinity();  ///< min of Q* − Q^{ω̃}
  int violations = 0;
  double max_residual = 0.0;
  int pairs = 0;
};

/// Checks maxⱼ Q^{ωⱼ}_e ≤ Q^{ω̃}_e ≤ Q*_e at every (h, a), where ωⱼ is the
/// greedy policy of Q*_{eⱼ}, e = Σ wⱼ eⱼ and ω̃ is GPI over the Q^{ωⱼ}_e.
inline GpiBoundReport verify_gpi_bound(const ExtendedMdp& m, const std::vector<OracleCumulant<double>>& cumulants,
                                       const WeightVector& w, double tol) {
  const auto e = combine(cumulants, w);
  GpiBoundReport rep;
  std::vector<ExactQ> q_j;
  for (const auto& c : cumulants) {
    const ExactQ star = value_iteration(m, c);
    rep.max_residual = std::max(rep.max_residual, star.residual);
    q_j.push_back(exact_policy_evaluation(m, greedy_policy(star), e));
    rep.max_residual = std::max(rep.max_residual, q_j.back().residual);
  }
  Eigen::MatrixXd best = q_j.front().q;
  for (const auto& q : q_j) best = best.cwiseMax(q.q);
  ExactQ gpi_table;
  gpi_table.q = best;
  const ExactQ q_gpi = exact_policy_evaluation(m, greedy_policy(gpi_table), e);
  const ExactQ q_star = value_iteration(m, e);
  rep.max_residual = std::max({rep.max_residual, q_gpi.residual, q_star.residual});
  for (int i = 0; i < m.num_nodes(); ++i) {
    if (m.is_absorbing(i)) continue;
    for (int a = 0; a <= m.num_primitive_actions(); ++a) {
      const double lower = q_gpi.q(i, a) - best(i, a);
      const double upper = q_star.q(i, a) - q_gpi.q(i, a);
      rep.min_lower_slack = std::min(rep.min_lower_slack, lower);
      rep.min_upper_slack = std::min(rep.min_upper_slack, upper);
      if (lower < -tol || upper < -tol) ++rep.violations;
      ++rep.pairs;
    }
  }
  return rep;
}

inline GpiBoundReport verify_gpi_bound(const TabularMdp& m, const std::vector<OracleCumulant<double>>& cumulants,
                                       const WeightVector& w, int horizon_bound, double tol) {
  return verify_gpi_bound(build_extended_mdp(m, horizon_bound), cumulants, w, tol);
}

/// A cumulant with independent pseudo-random values in [-1, 1] for every
/// (node, action, next state), fixed by `seed`.
inline OracleCumulant<double> random_table_cumulant(std::uint64_t seed) {
  return OracleCumulant<double>("random_table", nlohmann::json{{"seed", seed}},
                                [seed](const HistoryRef& h, AugmentedAction a, const int* next) {
                                  const std::uint64_t slot = a.is_terminate() ? 0xffffu : static_cast<std::uint64_t>(a.index());
                                  const std::uint64_t s2 = next ? static_cast<std::uint64_t>(*next) : 0xffffu;
                                  std::uint64_t x = mix64(seed ^ mix64(static_cast<std::uint64_t>(h.node)));
                                  x = mix64(x ^ (slot << 20) ^ s2);
                                  return 2.0 * static_cast<double>(x >> 11) * 0x1.0p-53 - 1.0;
                                });
}

/// Q* of a plain MDP with expected rewards r(s, a).
inline Eigen::MatrixXd solve_mdp_q(const TabularMdp& m, const Eigen::MatrixXd& r, double tol = 1e-13,
                                   int max_sweeps = 1000000) {
  const int ns = m.num_states();
  const int na = m.num_actions();
  if (r.rows() != ns || r.cols() != na) throw DimensionError("solve_mdp_q: reward table has the wrong shape");
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(ns, na);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Eigen::VectorXd v = q.rowwise().maxCoeff();
    Eigen::MatrixXd next(ns, na);
    for (int a = 0; a < na; ++a) next.col(a) = r.col(a) + m.discount() * m.transitions(a) * v;
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = std::move(next);
    if (change <= tol) return q;
  }
  throw NonConvergence("solve_mdp_q: no convergence");
}

/// Follows an induced option from state s on M⁺, sampling transitions.
struct OptionTrace {
  std::vector<int> actions;
  std::vector<int> states;
  bool terminated = false;  ///< stopped by β rather than running off the enumerated horizon
};

inline OptionTrace trace_option(const ExtendedMdp& m, const TabularOption& o, int s, Rng& rng, bool skip_initial_check = false) {
  OptionTrace t;
  int node = s;
  t.states.push_back(s);
  bool first = true;
  while (true) {
    if (!(first && skip_initial_check) && o.termination.at(static_cast<std::size_t>(node)) == 1) {
      t.terminated = true;
      return t;
    }
    first = false;
    const int a = o.policy.at(static_cast<std::size_t>(node));
    const auto edges = m.edges(node, a);
    double u = rng.uniform();
    const HistoryEdge<double>* chosen = &edges.back();
    for (const auto& e : edges) {
      if (u < e.probability) {
        chosen = &e;
        break;
      }
      u -= e.probability;
    }
    t.actions.push_back(a);
    t.states.push_back(chosen->next_state);
    if (m.is_absorbing(chosen->target)) return t;
    node = chosen->target;
  }
}

}  // namespace okb
