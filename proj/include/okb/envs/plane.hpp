#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "okb/approximator.hpp"
#include "okb/cumulant.hpp"
#include "okb/keyboard.hpp"
#include "okb/rng.hpp"

namespace okb {

struct PlaneConfig {
  double arena = 10.0;         ///< positions live in [-arena, arena]²
  double spawn = 5.0;          ///< agent and target respawn in [-spawn, spawn]²
  double target_radius = 0.8;
  double step_size = 0.4;
  double noise_sigma = 0.0;
  int k = 8;                   ///< option length of the directional cumulants

  void validate() const;
};

nlohmann::json to_json(const PlaneConfig& c);
PlaneConfig plane_config_from_json(const nlohmann::json& j);

struct PlaneObservation {
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  /// Displacement realized by the last step, before any respawn.
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  Eigen::Vector2d target = Eigen::Vector2d::Zero();
};

inline Eigen::Vector2d velocity_of(const PlaneObservation& o) { return o.velocity; }

using PlaneHistory = StepHistory<PlaneObservation>;
inline Eigen::Vector2d velocity_of(const PlaneHistory& h) { return h.observation.velocity; }

/// Unit vector of compass action a: angle a·45°, action 0 pointing east.
Eigen::Vector2d compass_direction(int a);
/// n unit vectors at angles 2πk/n, k = 0..n-1.
std::vector<Eigen::Vector2d> evenly_spaced_directions(int n);

/// Point agent chasing a circular target on a bounded plane.
class PlaneEnv {
 public:
  PlaneEnv(PlaneConfig config, std::uint64_t seed);

  int num_actions() const { return 8; }
  const PlaneConfig& config() const { return config_; }
  const PlaneObservation& observation() const { return obs_; }

  PlaneObservation reset();
  StepResult<PlaneObservation> step(int action);
  void set_state(const PlaneObservation& obs) { obs_ = obs; }
  /// A state drawn from the respawn distribution with a random last velocity.
  PlaneObservation sample_state();

 private:
  void respawn();

  PlaneConfig config_;
  Rng rng_;
  PlaneObservation obs_;
};

using PlaneCumulant = ExtendedCumulant<PlaneHistory, PlaneObservation>;

/// Keyboard over the velocity components with the overrun penalty shared;
/// option i is induced by the directional cumulant of directions[i].
/// Tables are keyed on (steps, coarse position).
KeyboardLayout<PlaneHistory, PlaneObservation> plane_layout(const PlaneConfig& config,
                                                            const std::vector<Eigen::Vector2d>& directions,
                                                            double gamma = 0.9, int max_option_steps = 100,
                                                            bool commit_first_step = true);
void encode_plane_history(const PlaneHistory& h, const PlaneConfig& c, Encoding& x);

/// Player input: one-hot target-offset cell and one-hot coarse position, linear.
int plane_player_features();
void encode_plane_player(const PlaneObservation& s, Encoding& x);

}  // namespace okb
