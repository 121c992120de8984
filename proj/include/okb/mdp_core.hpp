#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "okb/errors.hpp"

namespace okb {

// ---------------------------------------------------------------------------
// Augmented actions

/// A primitive action index or the termination action τ.
class AugmentedAction {
 public:
  static constexpr AugmentedAction primitive(int index) {
    if (index < 0) throw std::invalid_argument("primitive action index must be >= 0");
    return AugmentedAction(index);
  }
  static constexpr AugmentedAction terminate() { return AugmentedAction(kTerminate); }

  constexpr bool is_terminate() const { return value_ == kTerminate; }
  constexpr bool is_primitive() const { return value_ != kTerminate; }

  /// Primitive index; throws for τ.
  constexpr int index() const {
    if (is_terminate()) throw std::logic_error("termination action has no primitive index");
    return value_;
  }

  /// Column of this action in a value row over A⁺ (primitives first, τ last).
  constexpr int slot(int n_primitives) const {
    return is_terminate() ? n_primitives : value_;
  }
  static constexpr AugmentedAction from_slot(int slot, int n_primitives) {
    return slot == n_primitives ? terminate() : primitive(slot);
  }

  friend constexpr bool operator==(AugmentedAction, AugmentedAction) = default;

 private:
  static constexpr int kTerminate = -1;
  constexpr explicit AugmentedAction(int v) : value_(v) {}
  int value_;
};

/// A⁺ for an environment with `n_primitives` actions, τ last.
std::vector<AugmentedAction> augmented_action_set(int n_primitives);

std::string to_string(AugmentedAction a);

// ---------------------------------------------------------------------------
// Explicit finite MDPs

/// (S, A, p, γ) with dense per-action transition matrices; row s of
/// transitions(a) is p(·|s,a).
template <typename Scalar = double>
class TabularMdpT {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  TabularMdpT(std::vector<Matrix> transitions, Scalar discount)
      : p_(std::move(transitions)), gamma_(discount) {
    validate();
  }

  int num_states() const { return p_.empty() ? 0 : static_cast<int>(p_.front().rows()); }
  int num_actions() const { return static_cast<int>(p_.size()); }
  Scalar discount() const { return gamma_; }

  const Matrix& transitions(int action) const { return p_.at(static_cast<std::size_t>(action)); }
  Scalar probability(int s, int action, int next) const { return transitions(action)(s, next); }

 private:
  void validate() const {
    if (p_.empty()) throw std::invalid_argument("TabularMdp: need at least one action");
    const auto n = p_.front().rows();
    if (n < 1) throw std::invalid_argument("TabularMdp: need at least one state");
    if (!(gamma_ >= Scalar(0) && gamma_ < Scalar(1)))
      throw std::invalid_argument("TabularMdp: discount must lie in [0, 1)");
    for (const auto& m : p_) {
      if (m.rows() != n || m.cols() != n)
        throw DimensionError("TabularMdp: every transition matrix must be n_states x n_states");
      if ((m.array() < Scalar(0)).any() || !m.allFinite())
        throw std::invalid_argument("TabularMdp: probabilities must be finite and non-negative");
      const auto sums = m.rowwise().sum();
      for (Eigen::Index s = 0; s < n; ++s) {
        if (std::abs(static_cast<double>(sums(s)) - 1.0) > 1e-12)
          throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
      }
    }
  }

  std::vector<Matrix> p_;
  Scalar gamma_;
};

using TabularMdp = TabularMdpT<double>;

/// Versioned JSON document {"version":1,"n_states","n_actions","gamma","p"}
/// with p[s][a][s'].
nlohmann::json to_json(const TabularMdp& m);
TabularMdp tabular_mdp_from_json(const nlohmann::json& doc);

// ---------------------------------------------------------------------------
// History summaries and update rules

/// Markov summary: the history is represented by its last state only.
struct MarkovHistory {
  int state = 0;
  friend bool operator==(const MarkovHistory&, const MarkovHistory&) = default;
};
inline int last_state(const MarkovHistory& h) { return h.state; }
inline bool is_single_state(const MarkovHistory&) { return true; }

/// Summary holding the number of steps since option initiation and the
/// current observation; length(h) = steps + 1.
template <typename Observation>
struct StepHistory {
  int steps = 0;
  Observation observation{};
  friend bool operator==(const StepHistory&, const StepHistory&) = default;
};
template <typename Observation>
int history_length(const StepHistory<Observation>& h) { return h.steps + 1; }
template <typename Observation>
bool is_single_state(const StepHistory<Observation>& h) { return h.steps == 0; }
inline int last_state(const StepHistory<int>& h) { return h.observation; }

inline void require_primitive(AugmentedAction a) {
  if (a.is_terminate())
    throw std::invalid_argument("update_history: the termination action never extends a history");
}

/// u(h, a, s') = s'.
inline MarkovHistory update_history(const MarkovHistory&, AugmentedAction a, int next_state) {
  require_primitive(a);
  return MarkovHistory{next_state};
}

/// u((k, s), a, s') = (k + 1, s').
template <typename Observation>
StepHistory<Observation> update_history(const StepHistory<Observation>& h, AugmentedAction a,
                                        const Observation& next) {
  require_primitive(a);
  return StepHistory<Observation>{h.steps + 1, next};
}

// ---------------------------------------------------------------------------
// Extended MDP M⁺ over explicitly enumerated histories

/// One enumerated history h = s₀ a₀ s₁ ... s_k, stored as a tree node.
struct HistoryNode {
  int last_state = -1;  ///< -1 for the absorbing state s∅
  int length = 0;       ///< number of states in the history
  int parent = -1;
  int action = -1;      ///< action leading from parent
  bool frontier = false;
};

template <typename Scalar>
struct HistoryEdge {
  int next_state;      ///< s' observed by the transition (-1 inside s∅)
  Scalar probability;
  int target;          ///< node reached; the absorbing node past the frontier
};

struct ExtendedMdpOptions {
  std::size_t max_nodes = 200000;
};

/// M⁺ = (H⁺, A⁺, p̂, γ). Nodes [0, n_states) are the single-state histories,
/// node absorbing_state_index() is s∅. Primitive actions taken at frontier
/// histories (length == horizon bound) are truncated into s∅; cumulants are
/// still collected on those transitions.
template <typename Scalar = double>
class ExtendedMdpT {
 public:
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor>;

  const TabularMdpT<Scalar>& base() const { return base_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_primitive_actions() const { return base_.num_actions(); }
  int absorbing_state_index() const { return absorbing_; }
  int horizon_bound() const { return bound_; }
  /// True when histories are identified with their last state (u(h,a,s') = s').
  bool markov() const { return markov_; }
  Scalar discount() const { return base_.discount(); }

  const HistoryNode& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  bool is_absorbing(int i) const { return i == absorbing_; }

  /// Outgoing primitive transitions of node i under action a.
  std::span<const HistoryEdge<Scalar>> edges(int i, int action) const {
    return edges_[static_cast<std::size_t>(i) * static_cast<std::size_t>(base_.num_actions()) +
                  static_cast<std::size_t>(action)];
  }

  /// States s₀, ..., s_k of node i.
  std::vector<int> states_of(int i) const {
    std::vector<int> out;
    for (int n = i; n >= 0; n = nodes_[static_cast<std::size_t>(n)].parent)
      out.push_back(nodes_[static_cast<std::size_t>(n)].last_state);
    return {out.rbegin(), out.rend()};
  }

  /// p̂(·|h, a) as a node-by-node sparse matrix.
  SparseMatrix transition_matrix(AugmentedAction a) const {
    const int n = num_nodes();
    std::vector<Eigen::Triplet<Scalar>> trips;
    for (int i = 0; i < n; ++i) {
      if (a.is_terminate() || i == absorbing_) {
        trips.emplace_back(i, absorbing_, Scalar(1));
        continue;
      }
      for (const auto& e : edges(i, a.index())) trips.emplace_back(i, e.target, e.probability);
    }
    SparseMatrix m(n, n);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
  }

  template <typename S>
  friend ExtendedMdpT<S> build_extended_mdp(const TabularMdpT<S>&, int, ExtendedMdpOptions);
  template <typename S>
  friend ExtendedMdpT<S> build_markov_extended_mdp(const TabularMdpT<S>&);

 private:
  explicit ExtendedMdpT(TabularMdpT<Scalar> base) : base_(std::move(base)) {}

  TabularMdpT<Scalar> base_;
  std::vector<HistoryNode> nodes_;
  std::vector<std::vector<HistoryEdge<Scalar>>> edges_;
  int absorbing_ = -1;
  int bound_ = 0;
  bool markov_ = false;
};

using ExtendedMdp = ExtendedMdpT<double>;

/// Enumerates all histories with at most `horizon_bound` states reachable
/// with positive probability, breadth first.
template <typename Scalar>
ExtendedMdpT<Scalar> build_extended_mdp(const TabularMdpT<Scalar>& m, int horizon_bound,
                                        ExtendedMdpOptions options = {}) {
  if (horizon_bound < 1) throw std::invalid_argument("build_extended_mdp: horizon_bound must be >= 1");
  ExtendedMdpT<Scalar> x(m);
  x.bound_ = horizon_bound;
  const int ns = m.num_states();
  const int na = m.num_actions();
  auto check_cap = [&](std::size_t n) {
    if (n + 1 > options.max_nodes)
      throw HistoryBlowup("build_extended_mdp: history space exceeds " +
                          std::to_string(options.max_nodes) + " nodes");
  };
  for (int s = 0; s < ns; ++s) {
    check_cap(x.nodes_.size());
    x.nodes_.push_back(HistoryNode{s, 1, -1, -1, horizon_bound == 1});
  }
  // Children are appended in BFS order; edges are resolved once the
  // absorbing index is known.
  std::vector<std::vector<HistoryEdge<Scalar>>> pending;
  for (std::size_t i = 0; i < x.nodes_.size(); ++i) {
    const HistoryNode cur = x.nodes_[i];
    for (int a = 0; a < na; ++a) {
      std::vector<HistoryEdge<Scalar>> out;
      for (int s2 = 0; s2 < ns; ++s2) {
        const Scalar p = m.probability(cur.last_state, a, s2);
        if (p <= Scalar(0)) continue;
        if (cur.frontier) {
          out.push_back({s2, p, -1});
        } else {
          check_cap(x.nodes_.size());
          const int child = static_cast<int>(x.nodes_.size());
          x.nodes_.push_back(HistoryNode{s2, cur.length + 1, static_cast<int>(i), a,
                                         cur.length + 1 >= horizon_bound});
          out.push_back({s2, p, child});
        }
      }
      pending.push_back(std::move(out));
    }
  }
  x.absorbing_ = static_cast<int>(x.nodes_.size());
  x.nodes_.push_back(HistoryNode{-1, 0, -1, -1, false});
  for (auto& row : pending)
    for (auto& e : row)
      if (e.target < 0) e.target = x.absorbing_;
  pending.resize(pending.size() + static_cast<std::size_t>(na));
  for (int a = 0; a < na; ++a)
    pending[pending.size() - static_cast<std::size_t>(na) + static_cast<std::size_t>(a)] = {
        HistoryEdge<Scalar>{-1, Scalar(1), x.absorbing_}};
  x.edges_ = std::move(pending);
  return x;
}

/// M⁺ for Markov summaries: nodes are the states themselves plus s∅.
template <typename Scalar>
ExtendedMdpT<Scalar> build_markov_extended_mdp(const TabularMdpT<Scalar>& m) {
  ExtendedMdpT<Scalar> x(m);
  x.markov_ = true;
  const int ns = m.num_states();
  const int na = m.num_actions();
  for (int s = 0; s < ns; ++s) x.nodes_.push_back(HistoryNode{s, 1, -1, -1, false});
  x.absorbing_ = ns;
  x.nodes_.push_back(HistoryNode{-1, 0, -1, -1, false});
  for (int s = 0; s < ns; ++s) {
    for (int a = 0; a < na; ++a) {
      std::vector<HistoryEdge<Scalar>> out;
      for (int s2 = 0; s2 < ns; ++s2) {
        const Scalar p = m.probability(s, a, s2);
        if (p > Scalar(0)) out.push_back({s2, p, s2});
      }
      x.edges_.push_back(std::move(out));
    }
  }
  for (int a = 0; a < na; ++a) x.edges_.push_back({HistoryEdge<Scalar>{-1, Scalar(1), ns}});
  return x;
}

/// A handle on one node of an ExtendedMdp; the history type used by
/// cumulants evaluated inside the exact solvers.
template <typename Scalar = double>
struct HistoryRefT {
  const ExtendedMdpT<Scalar>* mdp = nullptr;
  int node = 0;
};
using HistoryRef = HistoryRefT<double>;

template <typename Scalar>
int last_state(const HistoryRefT<Scalar>& h) { return h.mdp->node(h.node).last_state; }
template <typename Scalar>
int history_length(const HistoryRefT<Scalar>& h) { return h.mdp->node(h.node).length; }
template <typename Scalar>
bool is_single_state(const HistoryRefT<Scalar>& h) { return h.mdp->node(h.node).length == 1; }

}  // namespace okb
