#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "okb/approximator.hpp"
#include "okb/cumulant.hpp"
#include "okb/keyboard.hpp"
#include "okb/rng.hpp"

namespace okb {

inline constexpr int kForagingGrid = 12;
inline constexpr int kForagingCells = kForagingGrid * kForagingGrid;
inline constexpr int kForagingItemTypes = 3;

enum ForagingAction : int { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

/// One piece of a piecewise-constant desirability function: applies to x up
/// to `max` (inclusive or not); the last piece has no bound.
struct DesirabilityPiece {
  std::optional<double> max;
  bool inclusive = true;
  double value = 0.0;
};

class DesirabilityProfile {
 public:
  DesirabilityProfile() : DesirabilityProfile(std::vector<DesirabilityPiece>{{std::nullopt, true, 0.0}}) {}
  explicit DesirabilityProfile(std::vector<DesirabilityPiece> pieces);

  static DesirabilityProfile constant(double v) { return DesirabilityProfile({{std::nullopt, true, v}}); }

  double operator()(double x) const;
  const std::vector<DesirabilityPiece>& pieces() const { return pieces_; }
  nlohmann::json to_json() const;
  static DesirabilityProfile from_json(const nlohmann::json& j);

 private:
  std::vector<DesirabilityPiece> pieces_;
};

struct ForagingScenario {
  std::string name;
  double leak = 0.05;
  std::array<int, kForagingItemTypes> item_counts{5, 5, 5};
  std::array<Eigen::Vector2d, kForagingItemTypes> item_types{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                                               Eigen::Vector2d(1, 1)};
  std::array<DesirabilityProfile, 2> desirability{};
  Eigen::Vector2d initial_nutrients = Eigen::Vector2d::Zero();

  void validate() const;
};

/// Scenario document: {"nutrients":2,"leak":…,"items":[{"type":1,"count":5},…],
/// "item_types":[[1,0],…] (optional), "desirability":[[{"max":10,"value":1},{"value":-1}],…]}.
/// Item types are numbered from 1 in documents.
ForagingScenario foraging_scenario_from_json(const nlohmann::json& j, std::string name = {});
nlohmann::json to_json(const ForagingScenario& s);
ForagingScenario load_foraging_scenario(const std::string& path);

struct ForagingObservation {
  int x = 0;
  int y = 0;
  /// 0 for an empty cell, item type + 1 otherwise; index y * 12 + x.
  std::array<std::int8_t, kForagingCells> grid{};
  Eigen::Vector2d nutrients = Eigen::Vector2d::Zero();
  /// Item type consumed by the step that produced this observation, or -1.
  int picked_type = -1;
  long long t = 0;

  int item_at(int cx, int cy) const { return grid[static_cast<std::size_t>(cy * kForagingGrid + cx)] - 1; }
  int item_count() const;
};

/// 12×12 toroidal grid with leaking nutrients and respawning items.
class ForagingEnv {
 public:
  ForagingEnv(ForagingScenario scenario, std::uint64_t seed);

  int num_actions() const { return 4; }
  const ForagingScenario& scenario() const { return scenario_; }
  const ForagingObservation& observation() const { return obs_; }

  /// Agent at (0, 0), nutrients at their initial level, items on random empty cells.
  ForagingObservation reset();
  StepResult<ForagingObservation> step(int action);
  /// Replaces the full state (testing and probes).
  void set_state(const ForagingObservation& obs) { obs_ = obs; }

  /// r = Σᵢ y_{ji} dᵢ(xᵢ) at post-pickup nutrient levels x.
  double pickup_reward(int type, const Eigen::Vector2d& x) const;

 private:
  void place_item(int type);

  ForagingScenario scenario_;
  Rng rng_;
  ForagingObservation obs_;
};

/// h = (picked flag, current observation).
struct ForagingHistory {
  bool picked = false;
  ForagingObservation obs;
};

inline int last_state(const ForagingHistory& h) { return h.obs.y * kForagingGrid + h.obs.x; }
inline bool is_single_state(const ForagingHistory& h) { return !h.picked; }

/// u(h, a, s') = (picked(h) or a pickup happened, s').
inline ForagingHistory update_history(const ForagingHistory& h, AugmentedAction a, const ForagingObservation& next) {
  require_primitive(a);
  return ForagingHistory{h.picked || next.picked_type >= 0, next};
}

using ForagingCumulant = ExtendedCumulant<ForagingHistory, ForagingObservation>;

/// Increase in nutrient i on the step that consumes the first item, 0 otherwise.
ForagingCumulant foraging_content_cumulant(int nutrient, std::array<Eigen::Vector2d, kForagingItemTypes> types);
/// −1{a ≠ τ} once an item has been consumed, 0 before.
ForagingCumulant foraging_stop_cumulant();
/// The per-nutrient cumulants: content plus the stop penalty.
std::vector<ForagingCumulant> foraging_cumulants(
    std::array<Eigen::Vector2d, kForagingItemTypes> types = ForagingScenario{}.item_types);

/// Discretization of nutrient levels used by the player encoders.
struct NutrientGrid {
  double lo = -2.0;
  double hi = 30.0;
  double width = 1.0;
  int bins() const;
  int bin(double x) const;
};

struct KeyboardOptions {
  double gamma = 0.99;
  int max_option_steps = 100;
  bool commit_first_step = true;
};

/// Keyboard over the two content cumulants plus the shared stop term.
/// Tables are linear in egocentric item occupancy (type × offset) with one
/// bias feature for histories after a pickup.
KeyboardLayout<ForagingHistory, ForagingObservation> foraging_layout(
    KeyboardOptions opt = {}, std::array<Eigen::Vector2d, kForagingItemTypes> types = ForagingScenario{}.item_types);
int foraging_keyboard_features();
void encode_foraging_history(const ForagingHistory& h, Encoding& x);

/// Player input: a table keyed on the nutrient cell.
void encode_foraging_player(const ForagingObservation& s, const NutrientGrid& g, Encoding& x);
/// Flat agent input: per item, (type, egocentric offset, nutrient, level bin)
/// features, plus a one-hot nutrient cell.
int foraging_flat_features(const NutrientGrid& g);
void encode_foraging_flat(const ForagingObservation& s, const NutrientGrid& g, Encoding& x);

}  // namespace okb
