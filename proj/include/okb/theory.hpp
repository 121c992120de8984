#pragma once

#include <cstdint>

#include "json.hpp"

namespace okb {

/// Sizes of the random instances drawn by the theory sweeps.
struct TheoryLimits {
  int max_states = 6;
  int max_actions = 3;
  int max_cumulants = 3;
  int max_horizon = 3;
  int roundtrip_max_states = 5;
  double tol = 1e-8;
};

struct GpiSweepReport {
  int instances = 0;
  int violations = 0;
  double min_slack = 0.0;
  double max_residual = 0.0;
};

struct RoundTripSweepReport {
  int instances = 0;
  int violations = 0;        ///< options not reproduced exactly for some z
  int z_mismatches = 0;      ///< induced options differing across z
  int ambiguous_nodes = 0;
  double max_residual = 0.0;
};

struct SemanticsSweepReport {
  int instances = 0;
  int k_step_checks = 0;
  int k_step_failures = 0;
  int goal_checks = 0;
  int goal_failures = 0;
};

/// GPI dominance over `instances` random (MDP, cumulants, w) draws.
GpiSweepReport gpi_bound_sweep(std::uint64_t seed, int instances, const TheoryLimits& lim = {});
/// Option embedding and re-induction for random deterministic options,
/// at z ∈ {-0.1, -1, -10}.
RoundTripSweepReport roundtrip_sweep(std::uint64_t seed, int instances, const TheoryLimits& lim = {});
/// k-step and goal cumulant options traced against their definitions on
/// random deterministic MDPs.
SemanticsSweepReport semantics_sweep(std::uint64_t seed, int instances);

nlohmann::json to_json(const GpiSweepReport& r);
nlohmann::json to_json(const RoundTripSweepReport& r);
nlohmann::json to_json(const SemanticsSweepReport& r);

}  // namespace okb
