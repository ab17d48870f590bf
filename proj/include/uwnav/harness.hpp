#pragma once

#include <optional>
#include <string>
#include <vector>

#include "uwnav/bug2.hpp"
#include "uwnav/ppo.hpp"

namespace uwnav {

enum class Method { Ppo, PpoNoSbes, Bug2, Straight };

Method method_from_string(const std::string& s);
std::string method_to_string(Method m);

enum class MissionOutcome { Success, Crash, Timeout, Unreachable, NotAttempted };

struct TrajectoryPoint {
  double t = 0.0;
  Pose pose;
  Action action;
};

struct MissionResult {
  bool success = false;
  MissionOutcome outcome = MissionOutcome::Timeout;
  double travel_time = 0.0;
  double cumulative_reward = 0.0;
  std::vector<TrajectoryPoint> trajectory;

  std::string to_jsonl() const;  // one record per trajectory step
};

struct EvalReport {
  double success_ratio = 0.0;
  std::optional<double> travel_time_mean;  // successful runs only
  std::optional<double> travel_time_std;
  double reward_mean = 0.0;  // all runs
  double reward_std = 0.0;
  int n_runs = 0;

  std::string to_json() const;
  std::string to_table(const std::string& label) const;
};

struct VisibilityPreset {
  std::string name;
  double visibility;
};

const std::vector<VisibilityPreset>& visibility_presets();  // blurry/medium/clear

struct RunConfig {
  EnvConfig env;
  NetConfig net;
  PpoConfig ppo;
  Bug2Config bug2;
  MbsConfig mbs;

  static RunConfig from_json(const std::string& text);
  std::string to_json() const;
};

MissionResult run_mission(Method method, const Scene& scene,
                          const Mission& mission, const NetworkParams* params,
                          uint64_t seed, const RunConfig& cfg);

// Aggregates per the published-table conventions: failed runs are excluded
// from travel-time statistics, rewards cover every run.
EvalReport aggregate(const std::vector<MissionResult>& results);

EvalReport evaluate(Method method,
                    const std::vector<std::pair<Scene, Mission>>& suite,
                    const NetworkParams* params, uint64_t base_seed,
                    const RunConfig& cfg);

// Sequential goals from the mission start; a failure marks the remaining
// waypoints NotAttempted and the overall run failed.
std::vector<MissionResult> waypoint_mission(Method method, const Scene& scene,
                                            const Pose& start,
                                            const std::vector<Vec3>& waypoints,
                                            const NetworkParams* params,
                                            uint64_t seed,
                                            const RunConfig& cfg);

// Randomized scenes of well separated convex obstacles with reachable
// in-plane goals; the suite the Bug2 baseline is scored on.
std::vector<std::pair<Scene, Mission>> convex_suite(int n_scenes,
                                                    uint64_t seed,
                                                    const RunConfig& cfg);

// Held-out cluttered scenes at a fixed visibility, several missions per
// scene.
std::vector<std::pair<Scene, Mission>> heldout_suite(int n_scenes,
                                                     int missions_per_scene,
                                                     double visibility,
                                                     uint64_t seed,
                                                     const RunConfig& cfg);

enum class PlotProjection { Top, Side };

// Deterministic standalone SVG: obstacles, start/goal markers, trajectory
// polyline, crash marker on failed runs.
std::string emit_plot(const Scene& scene, const Mission& mission,
                      const MissionResult& result, PlotProjection projection);

}  // namespace uwnav
