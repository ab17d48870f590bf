#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "uwnav/gradcheck.hpp"
#include "uwnav/harness.hpp"

namespace fs = std::filesystem;
using namespace uwnav;

namespace {

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

SceneKind kind_from_string(const std::string& s) {
  if (s == "A" || s == "a") return SceneKind::A;
  if (s == "B" || s == "b") return SceneKind::B;
  throw CLI::ValidationError("--kind", "expected A or B");
}

double parse_visibility(const std::string& s) {
  for (const auto& p : visibility_presets())
    if (p.name == s) return p.visibility;
  return std::stod(s);
}

struct CommonOpts {
  std::string config_path;
  uint64_t seed = 1;
  std::string out_dir = "out";
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--config", c.config_path, "Run config JSON");
  cmd->add_option("--seed", c.seed, "Base RNG seed");
  cmd->add_option("--out-dir", c.out_dir, "Output directory");
}

RunConfig load_config(const CommonOpts& c) {
  if (c.config_path.empty()) return RunConfig{};
  return RunConfig::from_json(read_file(c.config_path));
}

std::pair<Scene, Mission> resolve_scene_mission(const std::string& scene_path,
                                                const std::string& kind,
                                                uint64_t scene_seed,
                                                std::optional<double> visibility,
                                                const RunConfig& cfg,
                                                uint64_t mission_seed) {
  Scene scene;
  if (!scene_path.empty()) {
    scene = Scene::from_json(read_file(scene_path));
  } else {
    scene = generate_scene(kind_from_string(kind), scene_seed);
  }
  if (visibility) scene.visibility = *visibility;
  Rng rng(splitmix64(mission_seed ^ 0x9151ULL));
  auto m = sample_mission(scene, cfg.env, rng);
  if (!m) throw SceneError("could not place a mission in the scene");
  return {std::move(scene), *m};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Underwater mapless navigation: simulator, trainer, evaluator"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a PPO policy");
  CommonOpts train_c;
  add_common(train_cmd, train_c);
  PpoConfig ppo_defaults;
  double t_gamma = ppo_defaults.gamma, t_lambda = ppo_defaults.gae_lambda;
  double t_clip = ppo_defaults.clip_eps, t_lr = ppo_defaults.learning_rate;
  double t_vc = ppo_defaults.value_coef, t_ec = ppo_defaults.entropy_coef;
  double t_gn = ppo_defaults.max_grad_norm;
  int t_epochs = ppo_defaults.epochs, t_mb = ppo_defaults.minibatch_size;
  int t_iters = ppo_defaults.iterations;
  int t_steps = ppo_defaults.steps_per_iteration;
  int t_workers = ppo_defaults.n_workers, t_ckpt = ppo_defaults.checkpoint_every;
  double t_fixed_vis = 0.0;
  bool t_no_sbes = false, t_no_noise = false;
  auto* o_gamma = train_cmd->add_option("--gamma", t_gamma);
  auto* o_lambda = train_cmd->add_option("--gae-lambda", t_lambda);
  auto* o_clip = train_cmd->add_option("--clip-eps", t_clip);
  auto* o_epochs = train_cmd->add_option("--epochs", t_epochs);
  auto* o_mb = train_cmd->add_option("--minibatch-size", t_mb);
  auto* o_lr = train_cmd->add_option("--learning-rate", t_lr);
  auto* o_iters = train_cmd->add_option("--iterations", t_iters);
  auto* o_steps = train_cmd->add_option("--steps-per-iteration", t_steps);
  auto* o_vc = train_cmd->add_option("--value-coef", t_vc);
  auto* o_ec = train_cmd->add_option("--entropy-coef", t_ec);
  auto* o_gn = train_cmd->add_option("--max-grad-norm", t_gn);
  auto* o_workers = train_cmd->add_option("--n-workers", t_workers);
  auto* o_ckpt = train_cmd->add_option("--checkpoint-every", t_ckpt);
  auto* o_fv = train_cmd->add_option("--fixed-visibility", t_fixed_vis,
                                     "Disable visibility randomization");
  train_cmd->add_flag("--no-sbes", t_no_sbes, "Train without the echo sounder");
  train_cmd->add_flag("--no-sensor-noise", t_no_noise);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a method on a suite");
  CommonOpts eval_c;
  add_common(eval_cmd, eval_c);
  std::string e_method = "straight", e_ckpt, e_suite = "heldout";
  std::string e_visibility = "clear";
  int e_scenes = 5, e_missions = 2;
  double e_min_success = -1.0;
  eval_cmd->add_option("--method", e_method, "ppo, ppo-no-sbes, bug2, straight");
  eval_cmd->add_option("--ckpt", e_ckpt, "Policy checkpoint (learned methods)");
  eval_cmd->add_option("--suite", e_suite, "heldout or convex");
  eval_cmd->add_option("--n-scenes", e_scenes);
  eval_cmd->add_option("--missions-per-scene", e_missions);
  eval_cmd->add_option("--visibility", e_visibility,
                       "Preset name (blurry/medium/clear) or meters");
  eval_cmd->add_option("--min-success", e_min_success,
                       "Exit 1 when the success ratio falls below this");

  // mission
  auto* mission_cmd = app.add_subcommand("mission", "Run a single mission");
  CommonOpts mission_c;
  add_common(mission_cmd, mission_c);
  std::string m_method = "straight", m_ckpt, m_scene, m_kind = "A";
  std::string m_visibility;
  uint64_t m_scene_seed = 1;
  bool m_dump_depth = false;
  mission_cmd->add_option("--method", m_method);
  mission_cmd->add_option("--ckpt", m_ckpt);
  mission_cmd->add_option("--scene", m_scene, "Scene JSON (else generated)");
  mission_cmd->add_option("--kind", m_kind, "Generated scene kind, A or B");
  mission_cmd->add_option("--scene-seed", m_scene_seed);
  mission_cmd->add_option("--visibility", m_visibility);
  mission_cmd->add_flag("--dump-depth", m_dump_depth,
                        "Write the first depth frame as a PGM");

  // plot
  auto* plot_cmd = app.add_subcommand("plot", "Re-plot a logged trajectory");
  CommonOpts plot_c;
  add_common(plot_cmd, plot_c);
  std::string p_scene, p_traj, p_mission, p_proj = "top";
  plot_cmd->add_option("--scene", p_scene, "Scene JSON")->required();
  plot_cmd->add_option("--trajectory", p_traj, "Trajectory JSONL")->required();
  plot_cmd->add_option("--mission", p_mission, "Mission JSON")->required();
  plot_cmd->add_option("--projection", p_proj, "top or side");

  // gen-scene
  auto* gen_cmd = app.add_subcommand("gen-scene", "Generate a random scene");
  CommonOpts gen_c;
  add_common(gen_cmd, gen_c);
  std::string g_kind = "A", g_name = "scene.json";
  gen_cmd->add_option("--kind", g_kind, "A or B");
  gen_cmd->add_option("--name", g_name, "Output file name");

  // gradcheck
  auto* grad_cmd = app.add_subcommand(
      "gradcheck", "Finite-difference check of the analytic gradients");
  CommonOpts grad_c;
  add_common(grad_cmd, grad_c);
  int gc_seeds = 20;
  double gc_tol = 1e-4;
  grad_cmd->add_option("--seeds", gc_seeds, "Number of random seeds");
  grad_cmd->add_option("--tol", gc_tol, "Relative-error tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (train_cmd->parsed()) {
      fs::create_directories(train_c.out_dir);
      RunConfig cfg = load_config(train_c);
      if (o_gamma->count()) cfg.ppo.gamma = t_gamma;
      if (o_lambda->count()) cfg.ppo.gae_lambda = t_lambda;
      if (o_clip->count()) cfg.ppo.clip_eps = t_clip;
      if (o_epochs->count()) cfg.ppo.epochs = t_epochs;
      if (o_mb->count()) cfg.ppo.minibatch_size = t_mb;
      if (o_lr->count()) cfg.ppo.learning_rate = t_lr;
      if (o_iters->count()) cfg.ppo.iterations = t_iters;
      if (o_steps->count()) cfg.ppo.steps_per_iteration = t_steps;
      if (o_vc->count()) cfg.ppo.value_coef = t_vc;
      if (o_ec->count()) cfg.ppo.entropy_coef = t_ec;
      if (o_gn->count()) cfg.ppo.max_grad_norm = t_gn;
      if (o_workers->count()) cfg.ppo.n_workers = t_workers;
      if (o_ckpt->count()) cfg.ppo.checkpoint_every = t_ckpt;
      if (o_fv->count()) cfg.env.fixed_visibility = t_fixed_vis;
      if (t_no_sbes) cfg.env.sbes_enabled = false;
      if (t_no_noise) cfg.env.sensor_noise = false;
      cfg.net.image_height = cfg.env.image_height;
      cfg.net.image_width = cfg.env.image_width;
      cfg.net.stack_k = cfg.env.stack_k;
      write_file(fs::path(train_c.out_dir) / "config.json", cfg.to_json());
      train(cfg.env, cfg.net, cfg.ppo, train_c.seed, train_c.out_dir, nullptr,
            &std::cerr);
      return 0;
    }

    if (eval_cmd->parsed()) {
      fs::create_directories(eval_c.out_dir);
      RunConfig cfg = load_config(eval_c);
      const Method method = method_from_string(e_method);
      std::optional<NetworkParams> params;
      if (method == Method::Ppo || method == Method::PpoNoSbes) {
        if (e_ckpt.empty())
          throw CLI::ValidationError("--ckpt", "required for learned methods");
        params = load_params(e_ckpt);
      }
      std::vector<std::pair<Scene, Mission>> suite;
      if (e_suite == "convex") {
        suite = convex_suite(e_scenes, eval_c.seed, cfg);
      } else if (e_suite == "heldout") {
        suite = heldout_suite(e_scenes, e_missions, parse_visibility(e_visibility),
                              eval_c.seed, cfg);
      } else {
        throw CLI::ValidationError("--suite", "expected heldout or convex");
      }
      const EvalReport rep = evaluate(method, suite, params ? &*params : nullptr,
                                      eval_c.seed, cfg);
      write_file(fs::path(eval_c.out_dir) / "report.json", rep.to_json() + "\n");
      const std::string table = rep.to_table(e_method + "/" + e_suite);
      write_file(fs::path(eval_c.out_dir) / "report.txt", table + "\n");
      std::cout << table << "\n";
      if (e_min_success >= 0.0 && rep.success_ratio < e_min_success) {
        std::cerr << "success ratio " << rep.success_ratio << " below threshold "
                  << e_min_success << "\n";
        return 1;
      }
      return 0;
    }

    if (mission_cmd->parsed()) {
      fs::create_directories(mission_c.out_dir);
      RunConfig cfg = load_config(mission_c);
      const Method method = method_from_string(m_method);
      std::optional<NetworkParams> params;
      if (method == Method::Ppo || method == Method::PpoNoSbes) {
        if (m_ckpt.empty())
          throw CLI::ValidationError("--ckpt", "required for learned methods");
        params = load_params(m_ckpt);
      }
      std::optional<double> vis;
      if (!m_visibility.empty()) vis = parse_visibility(m_visibility);
      auto [scene, mission] = resolve_scene_mission(
          m_scene, m_kind, m_scene_seed, vis, cfg, mission_c.seed);
      const MissionResult res = run_mission(method, scene, mission,
                                            params ? &*params : nullptr,
                                            mission_c.seed, cfg);
      const fs::path out(mission_c.out_dir);
      write_file(out / "scene.json", scene.to_json());
      nlohmann::json mj;
      mj["start"] = {{"position", {mission.start.position.x,
                                   mission.start.position.y,
                                   mission.start.position.z}},
                     {"yaw", mission.start.yaw}};
      mj["goal"] = {mission.goal.x, mission.goal.y, mission.goal.z};
      mj["time_limit"] = mission.time_limit;
      write_file(out / "mission.json", mj.dump(2) + "\n");
      write_file(out / "trajectory.jsonl", res.to_jsonl());
      write_file(out / "plot_top.svg",
                 emit_plot(scene, mission, res, PlotProjection::Top));
      write_file(out / "plot_side.svg",
                 emit_plot(scene, mission, res, PlotProjection::Side));
      if (m_dump_depth) {
        Rng rng(splitmix64(mission_c.seed ^ 0xDE97ULL));
        const DepthImage img =
            render_depth(scene, mission.start, cfg.env.camera,
                         cfg.env.image_height, cfg.env.image_width,
                         cfg.env.depth_noise, rng);
        write_file(out / "depth.pgm", img.to_pgm());
      }
      std::cout << "outcome: "
                << (res.success ? "success"
                                : res.outcome == MissionOutcome::Crash
                                      ? "crash"
                                      : res.outcome == MissionOutcome::Unreachable
                                            ? "unreachable"
                                            : "timeout")
                << "  time " << res.travel_time << " s  reward "
                << res.cumulative_reward << "\n";
      return 0;
    }

    if (plot_cmd->parsed()) {
      fs::create_directories(plot_c.out_dir);
      const Scene scene = Scene::from_json(read_file(p_scene));
      const nlohmann::json mj = nlohmann::json::parse(read_file(p_mission));
      Mission mission;
      mission.start.position = {mj["start"]["position"][0].get<double>(),
                                mj["start"]["position"][1].get<double>(),
                                mj["start"]["position"][2].get<double>()};
      mission.start.yaw = mj["start"]["yaw"].get<double>();
      mission.goal = {mj["goal"][0].get<double>(), mj["goal"][1].get<double>(),
                      mj["goal"][2].get<double>()};
      MissionResult res;
      std::istringstream lines(read_file(p_traj));
      std::string line;
      while (std::getline(lines, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("outcome")) {
          if (j["outcome"] == "crash") res.outcome = MissionOutcome::Crash;
          continue;
        }
        TrajectoryPoint p;
        p.t = j["t"].get<double>();
        p.pose.position = {j["position"][0].get<double>(),
                           j["position"][1].get<double>(),
                           j["position"][2].get<double>()};
        p.pose.yaw = j["yaw"].get<double>();
        p.action = {j["action"][0].get<double>(), j["action"][1].get<double>()};
        res.trajectory.push_back(p);
      }
      const PlotProjection proj =
          p_proj == "side" ? PlotProjection::Side : PlotProjection::Top;
      const std::string name = p_proj == "side" ? "plot_side.svg" : "plot_top.svg";
      write_file(fs::path(plot_c.out_dir) / name,
                 emit_plot(scene, mission, res, proj));
      return 0;
    }

    if (gen_cmd->parsed()) {
      fs::create_directories(gen_c.out_dir);
      const Scene scene = generate_scene(kind_from_string(g_kind), gen_c.seed);
      write_file(fs::path(gen_c.out_dir) / g_name, scene.to_json());
      return 0;
    }

    if (grad_cmd->parsed()) {
      double worst = 0.0;
      bool ok = true;
      for (int i = 0; i < gc_seeds; ++i) {
        const uint64_t s = splitmix64(grad_c.seed + 31ULL * (i + 1));
        const GradCheckResult r = gradient_check(s, 1e-3, gc_tol);
        worst = std::max(worst, r.max_rel_error);
        ok = ok && r.pass;
      }
      std::cout << "gradcheck: max rel error " << worst << " over " << gc_seeds
                << " seeds, tol " << gc_tol << (ok ? " PASS" : " FAIL") << "\n";
      return ok ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
