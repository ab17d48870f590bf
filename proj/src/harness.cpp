#include "uwnav/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace uwnav {

using nlohmann::json;

Method method_from_string(const std::string& s) {
  if (s == "ppo") return Method::Ppo;
  if (s == "ppo-no-sbes") return Method::PpoNoSbes;
  if (s == "bug2") return Method::Bug2;
  if (s == "straight") return Method::Straight;
  throw std::invalid_argument("unknown method: " + s);
}

std::string method_to_string(Method m) {
  switch (m) {
    case Method::Ppo: return "ppo";
    case Method::PpoNoSbes: return "ppo-no-sbes";
    case Method::Bug2: return "bug2";
    case Method::Straight: return "straight";
  }
  return "?";
}

namespace {

std::string outcome_to_string(MissionOutcome o) {
  switch (o) {
    case MissionOutcome::Success: return "success";
    case MissionOutcome::Crash: return "crash";
    case MissionOutcome::Timeout: return "timeout";
    case MissionOutcome::Unreachable: return "unreachable";
    case MissionOutcome::NotAttempted: return "not_attempted";
  }
  return "?";
}

}  // namespace

std::string MissionResult::to_jsonl() const {
  std::ostringstream os;
  for (const auto& p : trajectory) {
    json j;
    j["t"] = p.t;
    j["position"] = {p.pose.position.x, p.pose.position.y, p.pose.position.z};
    j["yaw"] = p.pose.yaw;
    j["action"] = {p.action.v, p.action.w};
    os << j.dump() << "\n";
  }
  json tail;
  tail["outcome"] = outcome_to_string(outcome);
  tail["travel_time"] = travel_time;
  tail["cumulative_reward"] = cumulative_reward;
  os << tail.dump() << "\n";
  return os.str();
}

std::string EvalReport::to_json() const {
  json j;
  j["success_ratio"] = success_ratio;
  if (travel_time_mean) {
    j["travel_time_mean"] = *travel_time_mean;
    j["travel_time_std"] = *travel_time_std;
  } else {
    j["travel_time_mean"] = nullptr;
    j["travel_time_std"] = nullptr;
  }
  j["reward_mean"] = reward_mean;
  j["reward_std"] = reward_std;
  j["n_runs"] = n_runs;
  return j.dump();
}

std::string EvalReport::to_table(const std::string& label) const {
  std::ostringstream os;
  char buf[160];
  if (travel_time_mean) {
    std::snprintf(buf, sizeof(buf),
                  "%-24s reward %7.2f +- %-6.2f  success %5.1f%%  time %6.2f +- %-5.2f  (n=%d)",
                  label.c_str(), reward_mean, reward_std,
                  100.0 * success_ratio, *travel_time_mean, *travel_time_std,
                  n_runs);
  } else {
    std::snprintf(buf, sizeof(buf),
                  "%-24s reward %7.2f +- %-6.2f  success %5.1f%%  time    N/A          (n=%d)",
                  label.c_str(), reward_mean, reward_std,
                  100.0 * success_ratio, n_runs);
  }
  os << buf;
  return os.str();
}

const std::vector<VisibilityPreset>& visibility_presets() {
  static const std::vector<VisibilityPreset> presets = {
      {"blurry", 8.0}, {"medium", 12.0}, {"clear", 20.0}};
  return presets;
}

namespace {

constexpr int kConfigSchemaVersion = 1;

}  // namespace

std::string RunConfig::to_json() const {
  json j;
  j["schema_version"] = kConfigSchemaVersion;
  j["env"] = {
      {"forward_speed", env.limits.forward_speed},
      {"v_max", env.limits.v_max},
      {"w_max", env.limits.w_max},
      {"decision_period", env.limits.decision_period},
      {"substeps", env.limits.substeps},
      {"image_height", env.image_height},
      {"image_width", env.image_width},
      {"stack_k", env.stack_k},
      {"max_steps", env.max_steps},
      {"robot_radius", env.robot_radius},
      {"visibility_min", env.visibility_min},
      {"visibility_max", env.visibility_max},
      {"goal_dist_min", env.goal_dist_min},
      {"goal_dist_max", env.goal_dist_max},
      {"sbes_enabled", env.sbes_enabled},
      {"sensor_noise", env.sensor_noise},
      {"depth_convention", "0=near, 1=far"},
      {"camera_hfov_deg", env.camera.hfov * 180.0 / M_PI},
      {"camera_vfov_deg", env.camera.vfov * 180.0 / M_PI},
      {"sbes_max_range", env.sbes.max_range},
      {"sbes_beam_width_deg", env.sbes.beam_width * 180.0 / M_PI},
      {"sbes_n_rays", env.sbes.n_rays},
      {"sbes_noise_sigma", env.sbes.noise_sigma},
      {"depth_noise_sigma0", env.depth_noise.sigma0},
      {"loc_sigma_xy", env.loc_noise.sigma_xy},
      {"loc_sigma_z", env.loc_noise.sigma_z},
      {"loc_sigma_yaw", env.loc_noise.sigma_yaw},
  };
  if (env.fixed_visibility) j["env"]["fixed_visibility"] = *env.fixed_visibility;
  j["reward"] = {
      {"r_success", env.reward.r_success}, {"r_crash", env.reward.r_crash},
      {"delta_h_goal", env.reward.delta_h_goal}, {"delta_h", env.reward.delta_h},
      {"delta_v", env.reward.delta_v},
      {"s", {env.reward.s0, env.reward.s1, env.reward.s2, env.reward.s3,
             env.reward.s4, env.reward.s5}},
      {"gate_success_bonus", env.reward.gate_success_bonus},
  };
  json conv = json::array();
  for (const auto& c : net.conv)
    conv.push_back({{"out_ch", c.out_ch}, {"kh", c.kh}, {"kw", c.kw},
                    {"stride", c.stride}});
  j["net"] = {
      {"conv", conv},
      {"img_feat", net.img_feat},
      {"goal_feat", net.goal_feat},
      {"sbes_feat", net.sbes_feat},
      {"act_feat", net.act_feat},
      {"trunk_hidden", net.trunk_hidden},
      {"log_std_init", net.log_std_init},
      {"orthogonal_init", net.orthogonal_init},
  };
  j["ppo"] = {
      {"gamma", ppo.gamma},
      {"gae_lambda", ppo.gae_lambda},
      {"clip_eps", ppo.clip_eps},
      {"epochs", ppo.epochs},
      {"minibatch_size", ppo.minibatch_size},
      {"learning_rate", ppo.learning_rate},
      {"iterations", ppo.iterations},
      {"steps_per_iteration", ppo.steps_per_iteration},
      {"value_coef", ppo.value_coef},
      {"entropy_coef", ppo.entropy_coef},
      {"max_grad_norm", ppo.max_grad_norm},
      {"n_workers", ppo.n_workers},
      {"checkpoint_every", ppo.checkpoint_every},
  };
  j["bug2"] = {
      {"safety_distance", bug2.safety_distance},
      {"follow_distance", bug2.follow_distance},
      {"mline_tolerance", bug2.mline_tolerance},
      {"steer_gain", bug2.steer_gain},
      {"depth_gain", bug2.depth_gain},
  };
  j["mbs"] = {
      {"fov_deg", mbs.fov * 180.0 / M_PI},
      {"n_beams", mbs.n_beams},
      {"max_range", mbs.max_range},
      {"noise_sigma", mbs.noise_sigma},
  };
  return j.dump(2);
}

RunConfig RunConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("schema_version").get<int>() != kConfigSchemaVersion)
    throw std::runtime_error("config: unsupported schema version");
  RunConfig c;
  auto get = [](const json& obj, const char* key, auto fallback) {
    using T = decltype(fallback);
    if (obj.contains(key)) return obj.at(key).template get<T>();
    return fallback;
  };
  if (j.contains("env")) {
    const auto& e = j["env"];
    c.env.limits.forward_speed = get(e, "forward_speed", c.env.limits.forward_speed);
    c.env.limits.v_max = get(e, "v_max", c.env.limits.v_max);
    c.env.limits.w_max = get(e, "w_max", c.env.limits.w_max);
    c.env.limits.decision_period = get(e, "decision_period", c.env.limits.decision_period);
    c.env.limits.substeps = get(e, "substeps", c.env.limits.substeps);
    c.env.image_height = get(e, "image_height", c.env.image_height);
    c.env.image_width = get(e, "image_width", c.env.image_width);
    c.env.stack_k = get(e, "stack_k", c.env.stack_k);
    c.env.max_steps = get(e, "max_steps", c.env.max_steps);
    c.env.robot_radius = get(e, "robot_radius", c.env.robot_radius);
    c.env.visibility_min = get(e, "visibility_min", c.env.visibility_min);
    c.env.visibility_max = get(e, "visibility_max", c.env.visibility_max);
    c.env.goal_dist_min = get(e, "goal_dist_min", c.env.goal_dist_min);
    c.env.goal_dist_max = get(e, "goal_dist_max", c.env.goal_dist_max);
    c.env.sbes_enabled = get(e, "sbes_enabled", c.env.sbes_enabled);
    c.env.sensor_noise = get(e, "sensor_noise", c.env.sensor_noise);
    if (e.contains("fixed_visibility") && !e["fixed_visibility"].is_null())
      c.env.fixed_visibility = e["fixed_visibility"].get<double>();
    if (e.contains("camera_hfov_deg"))
      c.env.camera.hfov = e["camera_hfov_deg"].get<double>() * M_PI / 180.0;
    if (e.contains("camera_vfov_deg"))
      c.env.camera.vfov = e["camera_vfov_deg"].get<double>() * M_PI / 180.0;
    c.env.sbes.max_range = get(e, "sbes_max_range", c.env.sbes.max_range);
    if (e.contains("sbes_beam_width_deg"))
      c.env.sbes.beam_width = e["sbes_beam_width_deg"].get<double>() * M_PI / 180.0;
    c.env.sbes.n_rays = get(e, "sbes_n_rays", c.env.sbes.n_rays);
    c.env.sbes.noise_sigma = get(e, "sbes_noise_sigma", c.env.sbes.noise_sigma);
    c.env.depth_noise.sigma0 = get(e, "depth_noise_sigma0", c.env.depth_noise.sigma0);
    c.env.loc_noise.sigma_xy = get(e, "loc_sigma_xy", c.env.loc_noise.sigma_xy);
    c.env.loc_noise.sigma_z = get(e, "loc_sigma_z", c.env.loc_noise.sigma_z);
    c.env.loc_noise.sigma_yaw = get(e, "loc_sigma_yaw", c.env.loc_noise.sigma_yaw);
  }
  if (j.contains("reward")) {
    const auto& r = j["reward"];
    c.env.reward.r_success = get(r, "r_success", c.env.reward.r_success);
    c.env.reward.r_crash = get(r, "r_crash", c.env.reward.r_crash);
    c.env.reward.delta_h_goal = get(r, "delta_h_goal", c.env.reward.delta_h_goal);
    c.env.reward.delta_h = get(r, "delta_h", c.env.reward.delta_h);
    c.env.reward.delta_v = get(r, "delta_v", c.env.reward.delta_v);
    c.env.reward.gate_success_bonus =
        get(r, "gate_success_bonus", c.env.reward.gate_success_bonus);
    if (r.contains("s")) {
      const auto& s = r["s"];
      c.env.reward.s0 = s.at(0).get<double>();
      c.env.reward.s1 = s.at(1).get<double>();
      c.env.reward.s2 = s.at(2).get<double>();
      c.env.reward.s3 = s.at(3).get<double>();
      c.env.reward.s4 = s.at(4).get<double>();
      c.env.reward.s5 = s.at(5).get<double>();
    }
  }
  if (j.contains("net")) {
    const auto& n = j["net"];
    if (n.contains("conv")) {
      c.net.conv.clear();
      for (const auto& l : n["conv"])
        c.net.conv.push_back({l.at("out_ch").get<int>(), l.at("kh").get<int>(),
                              l.at("kw").get<int>(), l.at("stride").get<int>()});
    }
    c.net.img_feat = get(n, "img_feat", c.net.img_feat);
    c.net.goal_feat = get(n, "goal_feat", c.net.goal_feat);
    c.net.sbes_feat = get(n, "sbes_feat", c.net.sbes_feat);
    c.net.act_feat = get(n, "act_feat", c.net.act_feat);
    c.net.trunk_hidden = get(n, "trunk_hidden", c.net.trunk_hidden);
    c.net.log_std_init = get(n, "log_std_init", c.net.log_std_init);
    c.net.orthogonal_init = get(n, "orthogonal_init", c.net.orthogonal_init);
  }
  if (j.contains("ppo")) {
    const auto& p = j["ppo"];
    c.ppo.gamma = get(p, "gamma", c.ppo.gamma);
    c.ppo.gae_lambda = get(p, "gae_lambda", c.ppo.gae_lambda);
    c.ppo.clip_eps = get(p, "clip_eps", c.ppo.clip_eps);
    c.ppo.epochs = get(p, "epochs", c.ppo.epochs);
    c.ppo.minibatch_size = get(p, "minibatch_size", c.ppo.minibatch_size);
    c.ppo.learning_rate = get(p, "learning_rate", c.ppo.learning_rate);
    c.ppo.iterations = get(p, "iterations", c.ppo.iterations);
    c.ppo.steps_per_iteration = get(p, "steps_per_iteration", c.ppo.steps_per_iteration);
    c.ppo.value_coef = get(p, "value_coef", c.ppo.value_coef);
    c.ppo.entropy_coef = get(p, "entropy_coef", c.ppo.entropy_coef);
    c.ppo.max_grad_norm = get(p, "max_grad_norm", c.ppo.max_grad_norm);
    c.ppo.n_workers = get(p, "n_workers", c.ppo.n_workers);
    c.ppo.checkpoint_every = get(p, "checkpoint_every", c.ppo.checkpoint_every);
  }
  if (j.contains("bug2")) {
    const auto& b = j["bug2"];
    c.bug2.safety_distance = get(b, "safety_distance", c.bug2.safety_distance);
    c.bug2.follow_distance = get(b, "follow_distance", c.bug2.follow_distance);
    c.bug2.mline_tolerance = get(b, "mline_tolerance", c.bug2.mline_tolerance);
    c.bug2.steer_gain = get(b, "steer_gain", c.bug2.steer_gain);
    c.bug2.depth_gain = get(b, "depth_gain", c.bug2.depth_gain);
  }
  if (j.contains("mbs")) {
    const auto& m = j["mbs"];
    if (m.contains("fov_deg")) c.mbs.fov = m["fov_deg"].get<double>() * M_PI / 180.0;
    c.mbs.n_beams = get(m, "n_beams", c.mbs.n_beams);
    c.mbs.max_range = get(m, "max_range", c.mbs.max_range);
    c.mbs.noise_sigma = get(m, "noise_sigma", c.mbs.noise_sigma);
  }
  // Keep the network's image/stack geometry in sync with the environment.
  c.net.image_height = c.env.image_height;
  c.net.image_width = c.env.image_width;
  c.net.stack_k = c.env.stack_k;
  return c;
}

MissionResult run_mission(Method method, const Scene& scene,
                          const Mission& mission, const NetworkParams* params,
                          uint64_t seed, const RunConfig& cfg) {
  if ((method == Method::Ppo || method == Method::PpoNoSbes) && !params)
    throw std::invalid_argument("run_mission: learned method needs params");

  EnvConfig env_cfg = cfg.env;
  if (method == Method::PpoNoSbes) env_cfg.sbes_enabled = false;
  if (params) {
    env_cfg.image_height = params->cfg.image_height;
    env_cfg.image_width = params->cfg.image_width;
    env_cfg.stack_k = params->cfg.stack_k;
  }

  Env env(env_cfg, seed);
  StackedObservation obs = env.reset(scene, mission);
  Rng aux_rng(splitmix64(seed ^ 0xB065ULL));
  Bug2State bug2 = Bug2State::init(mission.start.position, mission.goal);

  MissionResult res;
  res.trajectory.push_back({0.0, mission.start, Action{}});
  MissionOutcome outcome = MissionOutcome::Timeout;
  while (!env.done()) {
    Action a;
    switch (method) {
      case Method::Ppo:
      case Method::PpoNoSbes: {
        const PolicyOutput po = forward(*params, encode_obs(obs, params->cfg));
        a = Action{po.mean[0], po.mean[1]}.clamped();
        break;
      }
      case Method::Bug2: {
        const MbsScan scan =
            mbs_scan(scene, env.pose(), cfg.mbs, env_cfg.sensor_noise, aux_rng);
        LocalizationFix fix{env.pose().position, env.pose().yaw};
        if (env_cfg.sensor_noise)
          fix = localize(env.pose(), env_cfg.loc_noise, aux_rng);
        a = bug2_step(bug2, scan, fix, mission.goal, cfg.bug2);
        break;
      }
      case Method::Straight: {
        LocalizationFix fix{env.pose().position, env.pose().yaw};
        if (env_cfg.sensor_noise)
          fix = localize(env.pose(), env_cfg.loc_noise, aux_rng);
        const RelativeGoal g = relative_goal(fix, mission.goal);
        a.w = std::clamp(2.0 * g.theta_h, -1.0, 1.0);
        a.v = std::clamp(2.0 * g.d_v, -1.0, 1.0);
        break;
      }
    }
    const StepOutcome out = env.step(a);
    obs = out.obs;
    res.cumulative_reward += out.reward.total;
    res.trajectory.push_back(
        {env.steps() * env_cfg.limits.decision_period, out.true_pose, a});
    if (method == Method::Bug2 && bug2.unreachable) {
      outcome = MissionOutcome::Unreachable;
      break;
    }
  }
  switch (env.status()) {
    case EpisodeStatus::Success: outcome = MissionOutcome::Success; break;
    case EpisodeStatus::Crash: outcome = MissionOutcome::Crash; break;
    case EpisodeStatus::Timeout: outcome = MissionOutcome::Timeout; break;
    case EpisodeStatus::Running: break;  // unreachable-by-bug2 exit
  }
  res.outcome = outcome;
  res.success = outcome == MissionOutcome::Success;
  res.travel_time = env.steps() * env_cfg.limits.decision_period;
  return res;
}

EvalReport aggregate(const std::vector<MissionResult>& results) {
  EvalReport rep;
  rep.n_runs = static_cast<int>(results.size());
  if (results.empty()) return rep;
  std::vector<double> times;
  double rsum = 0.0;
  int successes = 0;
  for (const auto& r : results) {
    rsum += r.cumulative_reward;
    if (r.success) {
      ++successes;
      times.push_back(r.travel_time);
    }
  }
  rep.success_ratio = (double)successes / rep.n_runs;
  rep.reward_mean = rsum / rep.n_runs;
  double rvar = 0.0;
  for (const auto& r : results)
    rvar += (r.cumulative_reward - rep.reward_mean) *
            (r.cumulative_reward - rep.reward_mean);
  rep.reward_std = std::sqrt(rvar / rep.n_runs);
  if (!times.empty()) {
    const double tmean =
        std::accumulate(times.begin(), times.end(), 0.0) / times.size();
    double tvar = 0.0;
    for (double t : times) tvar += (t - tmean) * (t - tmean);
    rep.travel_time_mean = tmean;
    rep.travel_time_std = std::sqrt(tvar / times.size());
  }
  return rep;
}

EvalReport evaluate(Method method,
                    const std::vector<std::pair<Scene, Mission>>& suite,
                    const NetworkParams* params, uint64_t base_seed,
                    const RunConfig& cfg) {
  std::vector<MissionResult> results;
  for (size_t i = 0; i < suite.size(); ++i) {
    const uint64_t seed = splitmix64(base_seed + 1000003ULL * (i + 1));
    results.push_back(
        run_mission(method, suite[i].first, suite[i].second, params, seed, cfg));
  }
  return aggregate(results);
}

std::vector<MissionResult> waypoint_mission(Method method, const Scene& scene,
                                            const Pose& start,
                                            const std::vector<Vec3>& waypoints,
                                            const NetworkParams* params,
                                            uint64_t seed,
                                            const RunConfig& cfg) {
  std::vector<MissionResult> results;
  Pose pose = start;
  bool failed = false;
  for (size_t i = 0; i < waypoints.size(); ++i) {
    if (failed) {
      MissionResult skip;
      skip.outcome = MissionOutcome::NotAttempted;
      results.push_back(std::move(skip));
      continue;
    }
    Mission m;
    m.start = pose;
    m.goal = waypoints[i];
    m.time_limit = cfg.env.max_steps * cfg.env.limits.decision_period;
    MissionResult r = run_mission(method, scene, m, params,
                                  splitmix64(seed + 7919ULL * (i + 1)), cfg);
    if (!r.success) failed = true;
    if (!r.trajectory.empty()) pose = r.trajectory.back().pose;
    results.push_back(std::move(r));
  }
  return results;
}

std::vector<std::pair<Scene, Mission>> convex_suite(int n_scenes,
                                                    uint64_t seed,
                                                    const RunConfig& cfg) {
  std::vector<std::pair<Scene, Mission>> suite;
  EnvConfig env_cfg = cfg.env;
  env_cfg.goal_dist_min = 8.0;
  env_cfg.goal_dist_max = 18.0;
  CustomSceneSpec spec;
  spec.bounds = {{-15, -15, 0}, {15, 15, 8}};
  spec.min_obstacles = 5;
  spec.max_obstacles = 9;
  // Corridors must admit the boundary-following standoff (safety 2.0 m on
  // each side), so obstacle gaps stay comfortably above twice that.
  spec.min_separation = 4.5;
  spec.max_radius = 1.5;
  uint64_t s = seed;
  while (static_cast<int>(suite.size()) < n_scenes) {
    s = splitmix64(s);
    Scene scene;
    try {
      scene = generate_scene(SceneKind::Custom, s, &spec);
    } catch (const SceneError&) {
      continue;
    }
    // Obstacles hugging the domain wall form corridors too; keep them off
    // the boundary by the same margin.
    bool clear_of_walls = true;
    for (const auto& ob : scene.obstacles) {
      const double r = ob.shape == ObstacleShape::Box
                           ? std::max(ob.half_extents.x, ob.half_extents.y)
                           : ob.radius;
      if (ob.center.x - r < scene.bounds.min.x + 4.0 ||
          ob.center.x + r > scene.bounds.max.x - 4.0 ||
          ob.center.y - r < scene.bounds.min.y + 4.0 ||
          ob.center.y + r > scene.bounds.max.y - 4.0) {
        clear_of_walls = false;
        break;
      }
    }
    if (!clear_of_walls) continue;
    // Bug2 senses in a horizontal plane, so the suite extrudes every
    // obstacle through the full water column: nothing can lurk just
    // outside the scan plane yet inside the clearance window.
    const double depth = scene.bounds.max.z - scene.bounds.min.z;
    const double mid = (scene.bounds.max.z + scene.bounds.min.z) / 2.0;
    for (auto& ob : scene.obstacles) {
      if (ob.shape == ObstacleShape::Sphere) {
        ob.shape = ObstacleShape::Cylinder;
      }
      ob.center.z = mid;
      if (ob.shape == ObstacleShape::Box)
        ob.half_extents.z = depth / 2.0;
      else
        ob.half_height = depth / 2.0;
    }
    scene.visibility = 20.0;
    Rng rng(splitmix64(s ^ 0x5317EULL));
    auto m = sample_mission(scene, env_cfg, rng);
    if (!m) continue;
    m->goal.z = m->start.position.z;  // Bug2 runs in-plane
    m->start.yaw = std::atan2(m->goal.y - m->start.position.y,
                              m->goal.x - m->start.position.x);
    suite.emplace_back(std::move(scene), *m);
  }
  return suite;
}

std::vector<std::pair<Scene, Mission>> heldout_suite(int n_scenes,
                                                     int missions_per_scene,
                                                     double visibility,
                                                     uint64_t seed,
                                                     const RunConfig& cfg) {
  std::vector<std::pair<Scene, Mission>> suite;
  EnvConfig env_cfg = cfg.env;
  for (int i = 0; i < n_scenes; ++i) {
    const uint64_t scene_seed = splitmix64(seed + 77ULL * (i + 1));
    Scene scene = generate_scene(SceneKind::B, scene_seed);
    scene.visibility = visibility;
    Rng rng(splitmix64(scene_seed ^ 0xE7A1ULL));
    int placed = 0;
    int guard = 0;
    while (placed < missions_per_scene && ++guard < 100) {
      auto m = sample_mission(scene, env_cfg, rng);
      if (!m) continue;
      suite.emplace_back(scene, *m);
      ++placed;
    }
  }
  return suite;
}

namespace {

struct Projector {
  PlotProjection proj;
  double sx, sy, scale, ox, oy;

  std::pair<double, double> map(const Vec3& p) const {
    const double u = p.x;
    const double v = proj == PlotProjection::Top ? p.y : p.z;
    return {ox + (u - sx) * scale, oy + (v - sy) * scale};
  }
};

void fmt(std::ostringstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  os << buf;
}

}  // namespace

std::string emit_plot(const Scene& scene, const Mission& mission,
                      const MissionResult& result, PlotProjection projection) {
  const auto& b = scene.bounds;
  const double u0 = b.min.x, u1 = b.max.x;
  const double v0 = projection == PlotProjection::Top ? b.min.y : b.min.z;
  const double v1 = projection == PlotProjection::Top ? b.max.y : b.max.z;
  const double margin = 20.0;
  const double scale = 600.0 / std::max(u1 - u0, v1 - v0);
  const double w = (u1 - u0) * scale + 2 * margin;
  const double h = (v1 - v0) * scale + 2 * margin;
  Projector pr{projection, u0, v0, scale, margin, margin};

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (int)w
     << "\" height=\"" << (int)h << "\">\n";
  os << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
     << (u1 - u0) * scale << "\" height=\"" << (v1 - v0) * scale
     << "\" fill=\"#eef6fb\" stroke=\"#333\"/>\n";

  for (const auto& ob : scene.obstacles) {
    if (projection == PlotProjection::Top) {
      if (ob.shape == ObstacleShape::Box) {
        auto [cx, cy] = pr.map(ob.center);
        os << "<rect x=\"" << cx - ob.half_extents.x * scale << "\" y=\""
           << cy - ob.half_extents.y * scale << "\" width=\""
           << 2 * ob.half_extents.x * scale << "\" height=\""
           << 2 * ob.half_extents.y * scale << "\" fill=\"#555\"/>\n";
      } else {
        auto [cx, cy] = pr.map(ob.center);
        os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\""
           << ob.radius * scale << "\" fill=\"#555\"/>\n";
      }
    } else {
      // Side view: draw the xz bounding rectangle of the solid.
      const double hx = ob.shape == ObstacleShape::Box ? ob.half_extents.x
                                                       : ob.radius;
      const double hz = (ob.z_max() - ob.z_min()) / 2.0;
      auto [cx, cy] = pr.map(ob.center);
      os << "<rect x=\"" << cx - hx * scale << "\" y=\"" << cy - hz * scale
         << "\" width=\"" << 2 * hx * scale << "\" height=\"" << 2 * hz * scale
         << "\" fill=\"#555\"/>\n";
    }
  }

  if (!result.trajectory.empty()) {
    os << "<polyline fill=\"none\" stroke=\"#d62728\" stroke-width=\"2\" points=\"";
    for (const auto& p : result.trajectory) {
      auto [x, y] = pr.map(p.pose.position);
      fmt(os, x);
      os << ",";
      fmt(os, y);
      os << " ";
    }
    os << "\"/>\n";
  }

  auto [gx, gy] = pr.map(mission.goal);
  auto [stx, sty] = pr.map(mission.start.position);
  os << "<circle cx=\"" << stx << "\" cy=\"" << sty
     << "\" r=\"5\" fill=\"#2ca02c\"/>\n";
  os << "<circle cx=\"" << gx << "\" cy=\"" << gy
     << "\" r=\"5\" fill=\"#1f77b4\"/>\n";

  if (result.outcome == MissionOutcome::Crash && !result.trajectory.empty()) {
    auto [x, y] = pr.map(result.trajectory.back().pose.position);
    os << "<text x=\"" << x - 6 << "\" y=\"" << y + 6
       << "\" font-size=\"18\" fill=\"#d62728\">X</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace uwnav
