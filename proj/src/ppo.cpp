#include "uwnav/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <thread>

#include <json.hpp>

namespace uwnav {

using nlohmann::json;

std::string TrainStatsRow::to_json() const {
  json j;
  j["iteration"] = iteration;
  j["mean_episode_reward"] = mean_episode_reward;
  j["success_rate"] = success_rate;
  j["n_episodes"] = n_episodes;
  j["policy_loss"] = policy_loss;
  j["value_loss"] = value_loss;
  j["entropy"] = entropy;
  j["approx_kl"] = approx_kl;
  return j.dump();
}

TrainStatsRow TrainStatsRow::from_json(const std::string& line) {
  json j = json::parse(line);
  TrainStatsRow r;
  r.iteration = j.at("iteration").get<int>();
  r.mean_episode_reward = j.at("mean_episode_reward").get<double>();
  r.success_rate = j.at("success_rate").get<double>();
  r.n_episodes = j.at("n_episodes").get<int>();
  r.policy_loss = j.at("policy_loss").get<double>();
  r.value_loss = j.at("value_loss").get<double>();
  r.entropy = j.at("entropy").get<double>();
  r.approx_kl = j.at("approx_kl").get<double>();
  return r;
}

AdamState AdamState::init(const NetworkParams& params) {
  AdamState s;
  for (const auto& t : params.tensors) {
    s.m.push_back(Tensor::zeros(t.shape));
    s.v.push_back(Tensor::zeros(t.shape));
  }
  return s;
}

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {

void worker_rollout(const NetworkParams& params, const EnvConfig& env_cfg,
                    uint64_t worker_seed, int steps, RolloutBuffer& out) {
  Env env(env_cfg, worker_seed);
  Rng action_rng(splitmix64(worker_seed ^ 0xAC710FBBULL));
  StackedObservation obs = env.reset();
  double ep_reward = 0.0;
  int ep_len = 0;
  for (int s = 0; s < steps; ++s) {
    Transition tr;
    tr.obs = encode_obs(obs, params.cfg);
    const PolicyOutput po = forward(params, tr.obs);
    const SampledAction sa = sample_action(po, action_rng);
    tr.raw_action = sa.raw;
    tr.log_prob = sa.log_prob;
    tr.value = po.value;

    const StepOutcome outcome = env.step(sa.action);
    tr.reward = outcome.reward.total;
    ep_reward += tr.reward;
    ++ep_len;

    const bool last_step = s + 1 == steps;
    if (outcome.terminated) {
      tr.terminated = true;
      out.episodes.push_back({ep_reward, ep_len, outcome.reward.reached});
      out.transitions.push_back(std::move(tr));
      ep_reward = 0.0;
      ep_len = 0;
      if (!last_step) obs = env.reset();
    } else if (outcome.truncated || last_step) {
      tr.truncated = true;
      const EncodedObs next = encode_obs(outcome.obs, params.cfg);
      tr.bootstrap_value = forward(params, next).value;
      if (outcome.truncated) {
        out.episodes.push_back({ep_reward, ep_len, false});
        ep_reward = 0.0;
        ep_len = 0;
        if (!last_step) obs = env.reset();
      } else {
        obs = outcome.obs;
      }
      out.transitions.push_back(std::move(tr));
    } else {
      obs = outcome.obs;
      out.transitions.push_back(std::move(tr));
    }
  }
}

}  // namespace

RolloutBuffer collect_rollout(const NetworkParams& params,
                              const EnvConfig& env_cfg, uint64_t iteration_seed,
                              int n_steps, int n_workers, bool use_threads) {
  if (n_steps < 1) throw ContractViolation("collect_rollout: n_steps >= 1");
  n_workers = std::max(n_workers, 1);
  const int per_worker = (n_steps + n_workers - 1) / n_workers;
  std::vector<RolloutBuffer> parts(n_workers);
  auto run = [&](int w) {
    worker_rollout(params, env_cfg, splitmix64(iteration_seed + w), per_worker,
                   parts[w]);
  };
  if (use_threads && n_workers > 1) {
    std::vector<std::thread> threads;
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(run, w);
    for (auto& t : threads) t.join();
  } else {
    for (int w = 0; w < n_workers; ++w) run(w);
  }
  RolloutBuffer buffer;
  for (auto& p : parts) {
    std::move(p.transitions.begin(), p.transitions.end(),
              std::back_inserter(buffer.transitions));
    std::move(p.episodes.begin(), p.episodes.end(),
              std::back_inserter(buffer.episodes));
  }
  return buffer;
}

std::pair<std::vector<double>, std::vector<double>> compute_gae(
    const RolloutBuffer& buffer, double gamma, double lambda) {
  const auto& tr = buffer.transitions;
  std::vector<double> adv(tr.size(), 0.0), ret(tr.size(), 0.0);
  double next_adv = 0.0;
  double next_value = 0.0;
  bool next_exists = false;
  for (int i = static_cast<int>(tr.size()) - 1; i >= 0; --i) {
    const Transition& t = tr[i];
    double v_next, a_next;
    if (t.terminated) {
      v_next = 0.0;
      a_next = 0.0;
    } else if (t.truncated) {
      v_next = t.bootstrap_value;
      a_next = 0.0;
    } else {
      if (!next_exists)
        throw ContractViolation("compute_gae: buffer segment not closed");
      v_next = next_value;
      a_next = next_adv;
    }
    const double delta = t.reward + gamma * v_next - t.value;
    adv[i] = delta + gamma * lambda * a_next;
    ret[i] = adv[i] + t.value;
    next_adv = adv[i];
    next_value = t.value;
    next_exists = true;
  }
  return {adv, ret};
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  const double mean =
      std::accumulate(advantages.begin(), advantages.end(), 0.0) /
      advantages.size();
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double std = std::sqrt(var / advantages.size());
  for (auto& a : advantages) a = (a - mean) / (std + 1e-8);
}

namespace {

double grad_global_norm(const std::vector<Tensor>& grads) {
  double sq = 0.0;
  for (const auto& g : grads)
    for (float v : g.v) sq += (double)v * v;
  return std::sqrt(sq);
}

void adam_step(NetworkParams& params, AdamState& adam,
               std::vector<Tensor>& grads, const PpoConfig& cfg) {
  const double norm = grad_global_norm(grads);
  if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) {
    const float scale = (float)(cfg.max_grad_norm / norm);
    for (auto& g : grads)
      for (auto& v : g.v) v *= scale;
  }
  ++adam.t;
  const double bc1 = 1.0 - std::pow(cfg.adam_beta1, (double)adam.t);
  const double bc2 = 1.0 - std::pow(cfg.adam_beta2, (double)adam.t);
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    auto& th = params.tensors[i].v;
    auto& m = adam.m[i].v;
    auto& vv = adam.v[i].v;
    const auto& g = grads[i].v;
    for (size_t j = 0; j < th.size(); ++j) {
      m[j] = (float)(cfg.adam_beta1 * m[j] + (1.0 - cfg.adam_beta1) * g[j]);
      vv[j] = (float)(cfg.adam_beta2 * vv[j] +
                      (1.0 - cfg.adam_beta2) * (double)g[j] * g[j]);
      const double mhat = m[j] / bc1;
      const double vhat = vv[j] / bc2;
      th[j] -= (float)(cfg.learning_rate * mhat /
                       (std::sqrt(vhat) + cfg.adam_eps));
    }
  }
  // log-std stays within its invariant range
  auto& ls = params.tensors.back().v;
  for (auto& v : ls) v = std::clamp(v, -5.0f, 2.0f);
}

}  // namespace

TrainStatsRow ppo_update(NetworkParams& params, AdamState& adam,
                         const RolloutBuffer& buffer,
                         const std::vector<double>& advantages,
                         const std::vector<double>& returns,
                         const PpoConfig& cfg, Rng& rng) {
  const auto& tr = buffer.transitions;
  std::vector<int> indices(tr.size());
  std::iota(indices.begin(), indices.end(), 0);

  double sum_policy = 0.0, sum_value = 0.0, sum_entropy = 0.0, sum_kl = 0.0;
  int64_t n_samples = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(indices.begin(), indices.end(), rng);
    for (size_t start = 0; start < indices.size();
         start += (size_t)cfg.minibatch_size) {
      const size_t end =
          std::min(start + (size_t)cfg.minibatch_size, indices.size());
      const double inv_mb = 1.0 / (double)(end - start);
      auto grads = zero_grads(params);
      for (size_t ii = start; ii < end; ++ii) {
        const Transition& t = tr[indices[ii]];
        const double A = advantages[indices[ii]];
        const double ret = returns[indices[ii]];

        ForwardCache cache;
        const PolicyOutput po = forward(params, t.obs, &cache);
        const double lp_new = action_log_prob(po, t.raw_action);
        const double ratio = std::exp(lp_new - t.log_prob);

        const double surr1 = ratio * A;
        const double surr2 =
            std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * A;
        const double policy_loss = -std::min(surr1, surr2);
        const double value_err = (double)po.value - ret;
        const double value_loss = value_err * value_err;
        double entropy = 0.0;
        for (int k = 0; k < 2; ++k)
          entropy += (double)po.log_std[k] +
                     0.5 * std::log(2.0 * M_PI * std::exp(1.0));

        const double loss = policy_loss + cfg.value_coef * value_loss -
                            cfg.entropy_coef * entropy;
        if (!std::isfinite(loss))
          throw std::runtime_error(
              "ppo_update: non-finite loss (ratio=" + std::to_string(ratio) +
              ", value=" + std::to_string(po.value) + ")");

        sum_policy += policy_loss;
        sum_value += value_loss;
        sum_entropy += entropy;
        sum_kl += t.log_prob - lp_new;
        ++n_samples;

        // d policy_loss / d ratio: zero when the clipped branch is active
        // and the ratio sits outside the clip interval.
        double d_ratio = 0.0;
        if (surr1 <= surr2) {
          d_ratio = -A;
        } else if (ratio > 1.0 - cfg.clip_eps && ratio < 1.0 + cfg.clip_eps) {
          d_ratio = -A;
        }
        const double d_lp = d_ratio * ratio;

        OutputGrad up;
        for (int k = 0; k < 2; ++k) {
          const double sigma = std::exp((double)po.log_std[k]);
          const double z = (t.raw_action[k] - (double)po.mean[k]) / sigma;
          // d lp_new / d mean = z / sigma ; d lp_new / d log_std = z^2 - 1
          up.d_mean[k] = (float)(inv_mb * d_lp * z / sigma);
          up.d_log_std[k] =
              (float)(inv_mb * (d_lp * (z * z - 1.0) - cfg.entropy_coef));
        }
        up.d_value = (float)(inv_mb * cfg.value_coef * 2.0 * value_err);
        backward(params, cache, up, grads);
      }
      adam_step(params, adam, grads, cfg);
    }
  }

  TrainStatsRow row;
  double ep_reward = 0.0, ep_success = 0.0;
  for (const auto& e : buffer.episodes) {
    ep_reward += e.total_reward;
    ep_success += e.success ? 1.0 : 0.0;
  }
  row.n_episodes = static_cast<int>(buffer.episodes.size());
  if (row.n_episodes > 0) {
    row.mean_episode_reward = ep_reward / row.n_episodes;
    row.success_rate = ep_success / row.n_episodes;
  }
  if (n_samples > 0) {
    row.policy_loss = sum_policy / n_samples;
    row.value_loss = sum_value / n_samples;
    row.entropy = sum_entropy / n_samples;
    row.approx_kl = sum_kl / n_samples;
  }
  return row;
}

namespace fs = std::filesystem;

TrainResult train(const EnvConfig& env_cfg, const NetConfig& net_cfg,
                  const PpoConfig& ppo_cfg, uint64_t seed,
                  const std::string& out_dir, std::ostream* stats_out,
                  std::ostream* progress) {
  fs::create_directories(out_dir);
  const std::string params_path = out_dir + "/params.ckpt";
  const std::string adam_m_path = out_dir + "/adam_m.ckpt";
  const std::string adam_v_path = out_dir + "/adam_v.ckpt";
  const std::string state_path = out_dir + "/train_state.json";
  const std::string stats_path = out_dir + "/train_stats.jsonl";

  NetworkParams params = init_params(splitmix64(seed), net_cfg);
  AdamState adam = AdamState::init(params);
  int start_iter = 0;
  std::vector<TrainStatsRow> stats;

  if (fs::exists(state_path)) {
    std::ifstream st(state_path);
    json j = json::parse(st);
    start_iter = j.at("next_iteration").get<int>();
    adam.t = j.at("adam_t").get<int64_t>();
    params = load_params(params_path);
    NetworkParams m = load_params(adam_m_path);
    NetworkParams v = load_params(adam_v_path);
    adam.m = std::move(m.tensors);
    adam.v = std::move(v.tensors);
    std::ifstream sf(stats_path);
    std::string line;
    while (std::getline(sf, line))
      if (!line.empty()) stats.push_back(TrainStatsRow::from_json(line));
    if (progress)
      *progress << "resuming from iteration " << start_iter << "\n";
  }

  std::ofstream stats_file(stats_path, std::ios::app);
  auto checkpoint = [&](int next_iter) {
    save_params(params, params_path);
    NetworkParams mw{params.cfg, adam.m};
    NetworkParams vw{params.cfg, adam.v};
    save_params(mw, adam_m_path);
    save_params(vw, adam_v_path);
    json j;
    j["next_iteration"] = next_iter;
    j["adam_t"] = adam.t;
    j["seed"] = seed;
    std::ofstream st(state_path);
    st << j.dump(2) << "\n";
    if (!st) throw std::runtime_error("train: checkpoint write failed");
  };

  for (int iter = start_iter; iter < ppo_cfg.iterations; ++iter) {
    const uint64_t iter_seed = splitmix64(seed + 0x17e7 * (uint64_t)(iter + 1));
    RolloutBuffer buffer =
        collect_rollout(params, env_cfg, iter_seed, ppo_cfg.steps_per_iteration,
                        ppo_cfg.n_workers, ppo_cfg.n_workers > 1);
    auto [adv, ret] = compute_gae(buffer, ppo_cfg.gamma, ppo_cfg.gae_lambda);
    normalize_advantages(adv);
    // Per-iteration shuffle stream so resume reproduces the exact run.
    Rng iter_rng(splitmix64(iter_seed ^ 0x5AFFE175ULL));
    TrainStatsRow row = ppo_update(params, adam, buffer, adv, ret, ppo_cfg,
                                   iter_rng);
    row.iteration = iter;
    stats.push_back(row);
    const std::string line = row.to_json();
    if (stats_out) *stats_out << line << "\n";
    stats_file << line << "\n";
    stats_file.flush();
    if (progress)
      *progress << "iter " << iter << " reward " << row.mean_episode_reward
                << " success " << row.success_rate << " eps "
                << row.n_episodes << "\n";
    if ((iter + 1) % std::max(ppo_cfg.checkpoint_every, 1) == 0 ||
        iter + 1 == ppo_cfg.iterations)
      checkpoint(iter + 1);
  }
  // Never rewind a directory that is already trained past this budget.
  if (start_iter < ppo_cfg.iterations) checkpoint(ppo_cfg.iterations);
  return {std::move(params), std::move(stats)};
}

}  // namespace uwnav
