#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "uwnav/network.hpp"

namespace uwnav {

struct Transition {
  EncodedObs obs;
  std::array<double, 2> raw_action{};  // pre-clamp sample
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  bool terminated = false;  // true terminal: crash or success
  bool truncated = false;   // timeout or rollout cut
  double bootstrap_value = 0.0;  // V(s') when truncated
};

struct EpisodeSummary {
  double total_reward = 0.0;
  int length = 0;
  bool success = false;
};

struct RolloutBuffer {
  std::vector<Transition> transitions;
  std::vector<EpisodeSummary> episodes;  // completed within the rollout
};

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  int epochs = 4;
  int minibatch_size = 256;
  double learning_rate = 3e-5;
  int iterations = 250;
  int steps_per_iteration = 2048;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double max_grad_norm = 0.5;
  int n_workers = 1;
  int checkpoint_every = 10;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

struct TrainStatsRow {
  int iteration = 0;
  double mean_episode_reward = 0.0;
  double success_rate = 0.0;
  int n_episodes = 0;
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double approx_kl = 0.0;

  std::string to_json() const;
  static TrainStatsRow from_json(const std::string& line);
};

struct AdamState {
  std::vector<Tensor> m, v;
  int64_t t = 0;

  static AdamState init(const NetworkParams& params);
};

uint64_t splitmix64(uint64_t x);

// Runs each of n_workers fresh environments (seeded from iteration_seed)
// for ceil(n_steps / n_workers) decision steps. Workers are independent;
// with use_threads they run concurrently and produce the same buffer as
// the serial path.
RolloutBuffer collect_rollout(const NetworkParams& params,
                              const EnvConfig& env_cfg, uint64_t iteration_seed,
                              int n_steps, int n_workers,
                              bool use_threads = false);

// GAE(lambda) advantages and returns (= advantage + value). Bootstraps at
// truncation points, not at true terminals. Advantages are unnormalized.
std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const RolloutBuffer& buffer, double gamma, double lambda);

void normalize_advantages(std::vector<double>& advantages);

// One PPO iteration of clipped-surrogate updates over the buffer.
// Advantages must be normalized already.
TrainStatsRow ppo_update(NetworkParams& params, AdamState& adam,
                         const RolloutBuffer& buffer,
                         const std::vector<double>& advantages,
                         const std::vector<double>& returns,
                         const PpoConfig& cfg, Rng& rng);

struct TrainResult {
  NetworkParams params;
  std::vector<TrainStatsRow> stats;
};

// Full training loop. Emits one JSON line per iteration to `stats_out` (if
// given), checkpoints into out_dir, and resumes from an existing
// checkpoint-state file in out_dir when present.
TrainResult train(const EnvConfig& env_cfg, const NetConfig& net_cfg,
                  const PpoConfig& ppo_cfg, uint64_t seed,
                  const std::string& out_dir, std::ostream* stats_out = nullptr,
                  std::ostream* progress = nullptr);

}  // namespace uwnav
