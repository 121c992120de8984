#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "okb/approximator.hpp"
#include "okb/envs/foraging.hpp"
#include "okb/envs/plane.hpp"
#include "okb/players.hpp"

namespace okb {

/// Shortest decimal text that reads back as the same double.
std::string format_double(double v);

/// Mean, sample standard deviation and standard error of a sample.
struct SampleStats {
  int n = 0;
  double mean = 0.0;
  double std = 0.0;
  double se = 0.0;
};
SampleStats sample_stats(const std::vector<double>& xs);

/// Mean of the last `window` entries (all of them if fewer).
double tail_mean(const std::vector<double>& xs, int window);

struct AgentSpec {
  std::string name;
  std::string kind;  ///< "flat", "options_only" or "keyboard_player"
  std::vector<WeightVector> W;
};

struct ExperimentConfig {
  std::string name;
  std::string domain;  ///< "foraging" or "plane"
  std::filesystem::path scenario_path;
  std::filesystem::path keyboard_path;
  std::filesystem::path output_dir;
  PlaneConfig plane;
  std::vector<AgentSpec> agents;
  HyperParams hp;
  int episodes = 100;
  std::vector<std::uint64_t> seeds;
  std::vector<double> sweep;
  /// "final_window": mean of the last `final_window` episodes; "mean_return": all episodes.
  std::string selection = "final_window";
  int final_window = 100;
  int threads = 0;
  NutrientGrid grid;
};

/// Parses an experiment document; relative paths resolve against base_dir.
/// OK_OUTPUT_DIR, when set, replaces the output directory.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// {-1,0,1}² without the zero vector.
std::vector<WeightVector> sign_weight_set();

struct RunResult {
  std::string agent;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  LearningCurve curve;
  bool failed = false;
  std::string error;
  long long decisions = 0;
  long long step_caps = 0;
};

struct ExperimentResult {
  std::vector<RunResult> runs;
  nlohmann::json summary;
};

/// Runs every (agent, α, seed) combination, writes one CSV per run plus
/// summary.json under output_dir/name (unless write_files is false).
ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write_files = true);

/// Writes `episode,return,seed,agent,scenario` rows.
void write_curve_csv(const std::filesystem::path& path, const LearningCurve& curve);
std::vector<LearningCurve> read_curve_csv(const std::filesystem::path& path);

/// Per-agent statistics of the runs at the selected α.
struct AgentOutcome {
  double alpha = 0.0;
  SampleStats final_stats;
  SampleStats mean_return_stats;
  std::vector<double> finals;
};
AgentOutcome selected_outcome(const ExperimentResult& r, const std::string& agent);

struct KeyboardBuildConfig {
  std::string domain;
  HyperParams hp;
  std::vector<double> sweep;
  std::uint64_t seed = 0;
  std::filesystem::path output;
  // Foraging.
  KeyboardOptions keyboard;
  std::filesystem::path selection_scenario;
  WeightVector selection_w;
  int selection_episodes = 20;
  // Plane.
  PlaneConfig plane;
  int directions = 3;
  int selection_samples = 500;
};

KeyboardBuildConfig keyboard_build_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
KeyboardBuildConfig load_keyboard_build_config(const std::filesystem::path& path);

struct KeyboardBuildResult {
  nlohmann::json keyboard;
  nlohmann::json log;
  double selected_alpha = 0.0;
};

/// Builds one keyboard per α in the sweep, scores each and keeps the best.
/// Writes the keyboard to cfg.output and the build log next to it when
/// write_files is set.
KeyboardBuildResult build_keyboard_from_config(const KeyboardBuildConfig& cfg, bool write_files = true);

/// Histogram of attribute_action over uniformly drawn (state, w) pairs on
/// the plane, binned by the angle of w in 10° bins.
struct AttributionHistogram {
  int n_options = 0;
  std::vector<double> bin_start_deg;
  std::vector<std::vector<long long>> counts;  ///< per bin: options..., combined
};
AttributionHistogram attribution_histogram(const nlohmann::json& keyboard_doc, long long samples, std::uint64_t seed);
void write_attribution_csv(const std::filesystem::path& path, const AttributionHistogram& h);

/// Loaders that rebuild the domain layout from the keyboard document.
Keyboard<ForagingHistory, ForagingObservation> load_foraging_keyboard(const nlohmann::json& doc);
Keyboard<PlaneHistory, PlaneObservation> load_plane_keyboard(const nlohmann::json& doc);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace okb
