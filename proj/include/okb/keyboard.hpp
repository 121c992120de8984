#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "okb/approximator.hpp"
#include "okb/cumulant.hpp"
#include "okb/errors.hpp"
#include "okb/mdp_core.hpp"
#include "okb/rng.hpp"

namespace okb {

/// What an environment returns from one primitive step.
template <typename Observation>
struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
};

/// Everything about a keyboard except its learned tables.
///
/// Option i is induced by Σⱼ option_weights(i, j)·basis[j] + shared. With
/// option_weights = I and no shared term this is the plain d×d keyboard.
/// The shared term must be next-independent; its value under every option
/// is taken to be its immediate value, which holds when the options stop
/// as soon as it becomes active.
template <typename H, typename O>
struct KeyboardLayout {
  std::string domain;
  int n_primitives = 0;
  std::vector<ExtendedCumulant<H, O>> basis;
  std::optional<ExtendedCumulant<H, O>> shared;
  Eigen::MatrixXd option_weights;
  double gamma = 0.99;
  int max_option_steps = 100;
  /// Never return τ before the first primitive step of an option.
  bool commit_first_step = false;

  std::function<H(const O&)> start;
  std::function<H(const H&, AugmentedAction, const O&)> update;
  std::function<void(const H&, Encoding&)> encode;
  std::function<QFunction()> make_table;
  /// Domain-specific parameters needed to rebuild the layout on load.
  nlohmann::json params = nlohmann::json::object();
};

enum class OptionEnd { Tau, Terminal, StepCap };
std::string to_string(OptionEnd e);

template <typename O>
struct OptionOutcome {
  O next_state;
  double accumulated_reward = 0.0;    ///< r′
  double accumulated_discount = 1.0;  ///< γ′
  int steps_taken = 0;
  OptionEnd terminated_by = OptionEnd::Tau;
  double undiscounted_reward = 0.0;
};

struct OptionLimits {
  int max_steps = 100;
  bool commit_first_step = false;
};

/// The option keyboard: the set Q_E plus GPE and GPI.
template <typename H, typename O>
class Keyboard {
 public:
  using Layout = KeyboardLayout<H, O>;
  using Cumulant = ExtendedCumulant<H, O>;

  explicit Keyboard(Layout layout) : layout_(std::move(layout)) {
    validate_layout();
    tables_.reserve(static_cast<std::size_t>(num_options() * dim()));
    for (int n = 0; n < num_options() * dim(); ++n) tables_.push_back(layout_.make_table());
    check_tables();
  }
  Keyboard(Layout layout, std::vector<QFunction> tables) : layout_(std::move(layout)), tables_(std::move(tables)) {
    validate_layout();
    check_tables();
  }

  const Layout& layout() const { return layout_; }
  int num_options() const { return static_cast<int>(layout_.option_weights.rows()); }
  int dim() const { return static_cast<int>(layout_.basis.size()); }
  int num_primitives() const { return layout_.n_primitives; }
  int num_slots() const { return layout_.n_primitives + 1; }
  double gamma() const { return layout_.gamma; }
  OptionLimits default_limits() const { return {layout_.max_option_steps, layout_.commit_first_step}; }

  const QFunction& q(int i, int j) const { return tables_.at(index(i, j)); }
  QFunction& mutable_q(int i, int j) {
    if (frozen_) throw std::logic_error("Keyboard: frozen");
    return tables_.at(index(i, j));
  }
  const std::vector<QFunction>& tables() const { return tables_; }

  void freeze() {
    frozen_ = true;
    for (auto& t : tables_) t.freeze();
  }
  bool frozen() const { return frozen_; }

  Encoding encode(const H& h) const {
    Encoding x;
    layout_.encode(h, x);
    return x;
  }

  /// Σⱼ wⱼ Q̃[i][j](h, ·) (+ the shared term) over all slots.
  void gpe_values(int i, const WeightVector& w, const H& h, const Encoding& x, Eigen::Ref<Eigen::VectorXd> out) const {
    check_weights(w);
    out.setZero();
    for (int j = 0; j < dim(); ++j)
      if (w(j) != 0.0) q(i, j).add_scaled_values(x, w(j), out);
    add_shared(h, out);
  }

  double gpe(int i, const WeightVector& w, const H& h, AugmentedAction a) const {
    check_weights(w);
    if (i < 0 || i >= num_options()) throw DimensionError("gpe: option index out of range");
    const Encoding x = encode(h);
    double v = 0.0;
    const int slot = a.slot(num_primitives());
    for (int j = 0; j < dim(); ++j) v += w(j) * q(i, j).value(x, slot);
    if (layout_.shared) v += layout_.shared->evaluate(h, a, nullptr);
    return v;
  }

  /// Values of option i under its own inducing cumulant.
  void own_values(int i, const H& h, const Encoding& x, Eigen::Ref<Eigen::VectorXd> out) const {
    gpe_values(i, layout_.option_weights.row(i).transpose(), h, x, out);
  }

  /// Pointwise max over options of the GPE values.
  void gpi_values(const WeightVector& w, const H& h, const Encoding& x, Eigen::Ref<Eigen::VectorXd> out) const {
    Eigen::VectorXd row(num_slots());
    for (int i = 0; i < num_options(); ++i) {
      gpe_values(i, w, h, x, row);
      if (i == 0)
        out = row;
      else
        out = out.cwiseMax(row);
    }
  }

  AugmentedAction gpi_action(const WeightVector& w, const H& h, bool allow_terminate = true) const {
    const Encoding x = encode(h);
    Eigen::VectorXd v(num_slots());
    gpi_values(w, h, x, v);
    if (!allow_terminate) return greedy_action(v.head(num_primitives()), false);
    return greedy_action(v, true);
  }

  /// The greedy action of option i under its own cumulant, ω_{e_i}(h).
  AugmentedAction option_action(int i, const H& h) const {
    const Encoding x = encode(h);
    Eigen::VectorXd v(num_slots());
    own_values(i, h, x, v);
    return greedy_action(v, true);
  }

  /// The cumulant inducing option i.
  Cumulant option_cumulant(int i) const {
    std::vector<Cumulant> parts = layout_.basis;
    Eigen::VectorXd w = layout_.option_weights.row(i).transpose();
    return with_shared(std::move(parts), std::move(w));
  }

  /// Σⱼ wⱼ basis[j] (+ shared): the cumulant a weight vector stands for.
  Cumulant weighted_cumulant(const WeightVector& w) const {
    check_weights(w);
    return with_shared(layout_.basis, w);
  }

 private:
  std::size_t index(int i, int j) const {
    if (i < 0 || i >= num_options() || j < 0 || j >= dim()) throw DimensionError("Keyboard: table index out of range");
    return static_cast<std::size_t>(i * dim() + j);
  }

  Cumulant with_shared(std::vector<Cumulant> parts, Eigen::VectorXd w) const {
    if (!layout_.shared) return combine(std::move(parts), w);
    parts.push_back(*layout_.shared);
    Eigen::VectorXd ext(w.size() + 1);
    ext << w, 1.0;
    return combine(std::move(parts), ext);
  }

  void add_shared(const H& h, Eigen::Ref<Eigen::VectorXd> out) const {
    if (!layout_.shared) return;
    for (int s = 0; s < num_slots(); ++s)
      out(s) += layout_.shared->evaluate(h, AugmentedAction::from_slot(s, num_primitives()), nullptr);
  }

  void check_weights(const WeightVector& w) const {
    if (w.size() != dim())
      throw DimensionError("Keyboard: weight vector has size " + std::to_string(w.size()) + ", expected " +
                           std::to_string(dim()));
  }

  void validate_layout() const {
    if (layout_.basis.empty()) throw std::invalid_argument("Keyboard: need at least one cumulant");
    if (layout_.n_primitives < 1) throw std::invalid_argument("Keyboard: need at least one primitive action");
    if (layout_.option_weights.rows() < 1 || layout_.option_weights.cols() != dim())
      throw DimensionError("Keyboard: option_weights must be n_options x d");
    if (!(layout_.gamma >= 0.0 && layout_.gamma < 1.0)) throw std::invalid_argument("Keyboard: gamma must lie in [0, 1)");
    if (layout_.max_option_steps < 1) throw std::invalid_argument("Keyboard: max_option_steps must be >= 1");
    if (!layout_.start || !layout_.update || !layout_.encode || !layout_.make_table)
      throw std::invalid_argument("Keyboard: layout is missing a history or encoding function");
  }

  void check_tables() const {
    if (static_cast<int>(tables_.size()) != num_options() * dim())
      throw DimensionError("Keyboard: expected " + std::to_string(num_options() * dim()) + " value functions");
    for (const auto& t : tables_)
      if (t.num_actions() != num_slots()) throw DimensionError("Keyboard: value function over the wrong action set");
  }

  Layout layout_;
  std::vector<QFunction> tables_;
  bool frozen_ = false;
};

/// Identity option weights for a plain d×d keyboard.
inline Eigen::MatrixXd identity_option_weights(int d) { return Eigen::MatrixXd::Identity(d, d); }

/// 1 iff e(h, τ) strictly exceeds every primitive value of the option.
template <typename H, typename O>
int termination_check(const QFunction& q_option, const Encoding& x, const ExtendedCumulant<H, O>& e, const H& h) {
  Eigen::VectorXd v(q_option.num_actions());
  q_option.values(x, v);
  const double best = v.head(q_option.num_actions() - 1).maxCoeff();
  return e.bonus(h) > best ? 1 : 0;
}

/// s ∈ I_e iff the option does not terminate at the single-state history s.
template <typename H, typename O>
bool initiation_member(const QFunction& q_option, const Encoding& x, const ExtendedCumulant<H, O>& e, const H& s) {
  if (!is_single_state(s)) throw std::invalid_argument("initiation_member: expected a single-state history");
  return termination_check(q_option, x, e, s) == 0;
}

/// Runs the option synthesized for w from the environment's current state s.
template <typename H, typename O, typename Env>
OptionOutcome<O> run_option(const Keyboard<H, O>& kb, Env& env, const O& s, const WeightVector& w, double gamma,
                            OptionLimits limits) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("run_option: gamma must lie in [0, 1)");
  if (limits.max_steps < 0) throw std::invalid_argument("run_option: negative step limit");
  OptionOutcome<O> out{s, 0.0, 1.0, 0, OptionEnd::Tau, 0.0};
  H h = kb.layout().start(s);
  Encoding x;
  Eigen::VectorXd v(kb.num_slots());
  while (true) {
    if (out.steps_taken >= limits.max_steps) {
      out.terminated_by = OptionEnd::StepCap;
      return out;
    }
    x.clear();
    kb.layout().encode(h, x);
    kb.gpi_values(w, h, x, v);
    const bool may_stop = !(limits.commit_first_step && out.steps_taken == 0);
    const AugmentedAction a = may_stop ? greedy_action(v, true) : greedy_action(v.head(kb.num_primitives()), false);
    if (a.is_terminate()) {
      out.terminated_by = OptionEnd::Tau;
      return out;
    }
    StepResult<O> r = env.step(a.index());
    out.accumulated_reward += out.accumulated_discount * r.reward;
    out.undiscounted_reward += r.reward;
    ++out.steps_taken;
    h = kb.layout().update(h, a, r.observation);
    out.next_state = std::move(r.observation);
    if (r.terminal) {
      out.accumulated_discount = 0.0;
      out.terminated_by = OptionEnd::Terminal;
      return out;
    }
    out.accumulated_discount *= gamma;
  }
}

template <typename H, typename O, typename Env>
OptionOutcome<O> run_option(const Keyboard<H, O>& kb, Env& env, const O& s, const WeightVector& w, double gamma) {
  return run_option(kb, env, s, w, gamma, kb.default_limits());
}

/// Progress record of a keyboard build.
struct BuildLog {
  long long steps = 0;
  long long terminations = 0;
  long long episodes = 0;
  /// Mean |δ| per basis cumulant over consecutive windows of steps.
  std::vector<std::vector<double>> td_trace;
  long long trace_window = 0;
};

nlohmann::json to_json(const BuildLog& log);

/// ε-greedy Q-learning of every Q̃^{ω_i}_{e_j}. The budget counts
/// primitive environment steps; `hp.episode_length` bounds episodes.
template <typename H, typename O, typename Env>
BuildLog build_keyboard(Keyboard<H, O>& kb, Env& env, const HyperParams& hp, Rng& rng,
                        long long trace_window = 10000) {
  hp.validate();
  if (kb.frozen()) throw std::logic_error("build_keyboard: keyboard already frozen");
  const auto& L = kb.layout();
  const int n = kb.num_options();
  const int d = kb.dim();
  const int na = kb.num_primitives();
  const double gamma = hp.gamma;

  BuildLog log;
  log.trace_window = trace_window;
  log.td_trace.assign(static_cast<std::size_t>(d), {});
  std::vector<double> window_sum(static_cast<std::size_t>(d), 0.0);
  long long window_count = 0;

  O s = env.reset();
  H h = L.start(s);
  int k = rng.uniform_int(n);
  int episode_steps = 0;
  Encoding x, x2;
  Eigen::VectorXd v(kb.num_slots());
  std::vector<double> targets(static_cast<std::size_t>(d));
  // Without exploration of τ the loop may idle on τ; bound total iterations.
  const long long max_iterations = 50 * hp.total_steps + 1000;
  for (long long it = 0; log.steps < hp.total_steps && it < max_iterations; ++it) {
    if (rng.bernoulli(hp.epsilon1)) {
      h = L.start(s);
      k = rng.uniform_int(n);
    }
    x.clear();
    L.encode(h, x);
    AugmentedAction a = AugmentedAction::terminate();
    if (rng.bernoulli(hp.epsilon2)) {
      const int choice = rng.uniform_int(hp.explore_terminate ? na + 1 : na);
      a = AugmentedAction::from_slot(choice, na);
    } else {
      kb.own_values(k, h, x, v);
      a = greedy_action(v, true);
    }
    if (a.is_primitive()) {
      StepResult<O> r = env.step(a.index());
      ++log.steps;
      ++episode_steps;
      const H h2 = L.update(h, a, r.observation);
      x2.clear();
      L.encode(h2, x2);
      const double g = r.terminal ? 0.0 : gamma;
      for (int j = 0; j < d; ++j) targets[static_cast<std::size_t>(j)] = L.basis[static_cast<std::size_t>(j)](h, a, r.observation);
      const int slot = a.slot(na);
      for (int i = 0; i < n; ++i) {
        kb.own_values(i, h2, x2, v);
        const int next_slot = greedy_action(v, true).slot(na);
        for (int j = 0; j < d; ++j) {
          QFunction& q = kb.mutable_q(i, j);
          const double target = targets[static_cast<std::size_t>(j)] + g * q.value(x2, next_slot);
          const double delta = q.td_update(x, slot, target, hp.alpha);
          window_sum[static_cast<std::size_t>(j)] += std::abs(delta) / n;
        }
      }
      ++window_count;
      if (trace_window > 0 && window_count == trace_window) {
        for (int j = 0; j < d; ++j) {
          log.td_trace[static_cast<std::size_t>(j)].push_back(window_sum[static_cast<std::size_t>(j)] /
                                                              static_cast<double>(window_count));
          window_sum[static_cast<std::size_t>(j)] = 0.0;
        }
        window_count = 0;
      }
      s = std::move(r.observation);
      h = h2;
      if (r.terminal || episode_steps >= hp.episode_length) {
        s = env.reset();
        h = L.start(s);
        episode_steps = 0;
        ++log.episodes;
      }
    } else {
      ++log.terminations;
      const int slot = a.slot(na);
      for (int j = 0; j < d; ++j) targets[static_cast<std::size_t>(j)] = L.basis[static_cast<std::size_t>(j)].bonus(h);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) kb.mutable_q(i, j).td_update(x, slot, targets[static_cast<std::size_t>(j)], hp.alpha);
    }
  }
  kb.freeze();
  return log;
}

/// Which constituent the GPI action coincides with: the smallest i whose own
/// greedy action equals it, or -1 (a combined action).
template <typename H, typename O>
int attribute_action(const Keyboard<H, O>& kb, const WeightVector& w, const H& h) {
  const AugmentedAction a = kb.gpi_action(w, h);
  for (int i = 0; i < kb.num_options(); ++i)
    if (kb.option_action(i, h) == a) return i;
  return -1;
}

/// Keyboard document: {"version":1,"domain","d","n_options","gamma",
/// "cumulant_specs","shared_spec","option_weights","q_matrix",...}.
template <typename H, typename O>
nlohmann::json keyboard_to_json(const Keyboard<H, O>& kb) {
  const auto& L = kb.layout();
  nlohmann::json j;
  j["version"] = 1;
  j["domain"] = L.domain;
  j["d"] = kb.dim();
  j["n_options"] = kb.num_options();
  j["n_primitives"] = kb.num_primitives();
  j["gamma"] = kb.gamma();
  j["max_option_steps"] = L.max_option_steps;
  j["commit_first_step"] = L.commit_first_step;
  j["params"] = L.params;
  j["cumulant_specs"] = nlohmann::json::array();
  for (const auto& c : L.basis) j["cumulant_specs"].push_back(c.spec());
  j["shared_spec"] = L.shared ? L.shared->spec() : nlohmann::json(nullptr);
  j["option_weights"] = nlohmann::json::array();
  for (int i = 0; i < kb.num_options(); ++i) {
    std::vector<double> row(static_cast<std::size_t>(kb.dim()));
    for (int c = 0; c < kb.dim(); ++c) row[static_cast<std::size_t>(c)] = L.option_weights(i, c);
    j["option_weights"].push_back(row);
  }
  j["q_matrix"] = nlohmann::json::array();
  for (int i = 0; i < kb.num_options(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int c = 0; c < kb.dim(); ++c) row.push_back(kb.q(i, c).to_json());
    j["q_matrix"].push_back(std::move(row));
  }
  return j;
}

/// Restores a keyboard given a layout rebuilt by the owning domain from the
/// document's parameters. The result is frozen.
template <typename H, typename O>
Keyboard<H, O> keyboard_from_json(const nlohmann::json& j, KeyboardLayout<H, O> layout) {
  try {
    if (j.at("version").get<int>() != 1) throw ConfigError("keyboard: unsupported version");
    if (j.at("domain").get<std::string>() != layout.domain)
      throw ConfigError("keyboard: file is for domain '" + j.at("domain").get<std::string>() + "', expected '" +
                        layout.domain + "'");
    const int d = j.at("d").get<int>();
    const int n = j.at("n_options").get<int>();
    if (d != static_cast<int>(layout.basis.size())) throw ConfigError("keyboard: cumulant count mismatch");
    for (int c = 0; c < d; ++c)
      if (j.at("cumulant_specs").at(static_cast<std::size_t>(c)) != layout.basis[static_cast<std::size_t>(c)].spec())
        throw ConfigError("keyboard: cumulant spec mismatch at index " + std::to_string(c));
    layout.gamma = j.at("gamma").get<double>();
    layout.max_option_steps = j.at("max_option_steps").get<int>();
    layout.commit_first_step = j.at("commit_first_step").get<bool>();
    layout.option_weights.resize(n, d);
    for (int i = 0; i < n; ++i) {
      const auto row = j.at("option_weights").at(static_cast<std::size_t>(i)).get<std::vector<double>>();
      if (static_cast<int>(row.size()) != d) throw DimensionError("keyboard: option weight row has wrong size");
      for (int c = 0; c < d; ++c) layout.option_weights(i, c) = row[static_cast<std::size_t>(c)];
    }
    std::vector<QFunction> tables;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c)
        tables.push_back(QFunction::from_json(j.at("q_matrix").at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c))));
    Keyboard<H, O> kb(std::move(layout), std::move(tables));
    kb.freeze();
    return kb;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("keyboard: malformed document: ") + e.what());
  }
}

}  // namespace okb
