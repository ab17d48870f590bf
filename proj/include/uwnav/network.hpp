#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "uwnav/env.hpp"

namespace uwnav {

struct Tensor {
  std::vector<int> shape;
  std::vector<float> v;

  static Tensor zeros(std::vector<int> shape);
  int64_t size() const { return static_cast<int64_t>(v.size()); }
};

struct ConvSpec {
  int out_ch = 0;
  int kh = 0, kw = 0;
  int stride = 1;
};

struct NetConfig {
  int image_height = 32;
  int image_width = 40;
  int stack_k = 5;
  std::vector<ConvSpec> conv{{8, 5, 5, 2}, {16, 3, 3, 2}, {32, 3, 3, 2}};
  int img_feat = 512;
  int goal_feat = 96;
  int sbes_feat = 32;
  int act_feat = 64;
  int trunk_hidden = 256;
  float log_std_init = -0.5f;
  bool orthogonal_init = false;

  // Flattened conv-stack output size.
  int conv_out_size() const;
  int concat_size() const {
    return img_feat + goal_feat + sbes_feat + act_feat;
  }
};

// All learnable tensors, in the fixed order given by tensor_names().
struct NetworkParams {
  NetConfig cfg;
  std::vector<Tensor> tensors;

  static std::vector<std::string> tensor_names(const NetConfig& cfg);
  int64_t param_count() const;
};

// Flat, normalized network input built from a StackedObservation.
struct EncodedObs {
  std::vector<float> image;  // k * H * W, channel-major
  std::vector<float> goal;   // k * 3
  std::vector<float> sbes;   // k
  std::vector<float> act;    // k * 2
};

EncodedObs encode_obs(const StackedObservation& obs, const NetConfig& cfg);

struct PolicyOutput {
  std::array<float, 2> mean{};
  std::array<float, 2> log_std{};
  float value = 0.0f;
};

// Opaque activation cache for backward().
struct ForwardCache {
  EncodedObs in;
  std::vector<std::vector<float>> conv_act;  // post-ReLU, per conv layer
  std::vector<float> img_act, goal_act, sbes_act, act_act;
  std::vector<float> concat, trunk_act;
};

PolicyOutput forward(const NetworkParams& params, const EncodedObs& obs,
                     ForwardCache* cache = nullptr);

// Same computation with double accumulators and activations; the reference
// path for finite-difference gradient checks.
struct PolicyOutputF64 {
  std::array<double, 2> mean{};
  std::array<double, 2> log_std{};
  double value = 0.0;
};

PolicyOutputF64 forward_fp64(const NetworkParams& params,
                             const EncodedObs& obs);

struct OutputGrad {
  std::array<float, 2> d_mean{};
  std::array<float, 2> d_log_std{};
  float d_value = 0.0f;
};

// Accumulates exact gradients of the scalar loss (whose partials w.r.t. the
// network outputs are given) into `grads`, which must match the parameter
// layout.
void backward(const NetworkParams& params, const ForwardCache& cache,
              const OutputGrad& upstream, std::vector<Tensor>& grads);

std::vector<Tensor> zero_grads(const NetworkParams& params);

NetworkParams init_params(uint64_t seed, const NetConfig& cfg);

struct SampledAction {
  Action action;       // clamped to [-1, 1]
  std::array<double, 2> raw{};  // pre-clamp sample; log_prob is taken here
  double log_prob = 0.0;
};

SampledAction sample_action(const PolicyOutput& out, Rng& rng);

// Gaussian log-density of a (pre-clamp) sample under the policy head.
double action_log_prob(const PolicyOutput& out,
                       const std::array<double, 2>& raw);

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void save_params(const NetworkParams& params, const std::string& path);
NetworkParams load_params(const std::string& path);

}  // namespace uwnav
