#include "uwnav/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

namespace uwnav {

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  t.shape = std::move(shape);
  int64_t n = 1;
  for (int d : t.shape) n *= d;
  t.v.assign(n, 0.0f);
  return t;
}

int NetConfig::conv_out_size() const {
  int h = image_height, w = image_width, c = stack_k;
  for (const auto& l : conv) {
    h = (h - l.kh) / l.stride + 1;
    w = (w - l.kw) / l.stride + 1;
    c = l.out_ch;
  }
  return c * h * w;
}

namespace {

struct TensorSpec {
  std::string name;
  std::vector<int> shape;
};

std::vector<TensorSpec> tensor_specs(const NetConfig& cfg) {
  std::vector<TensorSpec> specs;
  int in_ch = cfg.stack_k;
  for (size_t i = 0; i < cfg.conv.size(); ++i) {
    const auto& l = cfg.conv[i];
    const std::string id = std::to_string(i);
    specs.push_back({"conv" + id + "_w", {l.out_ch, in_ch, l.kh, l.kw}});
    specs.push_back({"conv" + id + "_b", {l.out_ch}});
    in_ch = l.out_ch;
  }
  specs.push_back({"img_fc_w", {cfg.img_feat, cfg.conv_out_size()}});
  specs.push_back({"img_fc_b", {cfg.img_feat}});
  specs.push_back({"goal_fc_w", {cfg.goal_feat, cfg.stack_k * 3}});
  specs.push_back({"goal_fc_b", {cfg.goal_feat}});
  specs.push_back({"sbes_fc_w", {cfg.sbes_feat, cfg.stack_k}});
  specs.push_back({"sbes_fc_b", {cfg.sbes_feat}});
  specs.push_back({"act_fc_w", {cfg.act_feat, cfg.stack_k * 2}});
  specs.push_back({"act_fc_b", {cfg.act_feat}});
  specs.push_back({"trunk_w", {cfg.trunk_hidden, cfg.concat_size()}});
  specs.push_back({"trunk_b", {cfg.trunk_hidden}});
  specs.push_back({"mean_w", {2, cfg.trunk_hidden}});
  specs.push_back({"mean_b", {2}});
  specs.push_back({"value_w", {1, cfg.trunk_hidden}});
  specs.push_back({"value_b", {1}});
  specs.push_back({"log_std", {2}});
  return specs;
}

// Indices into the tensor list, derived from the fixed layout above.
struct Layout {
  int n_conv;
  int img_fc, goal_fc, sbes_fc, act_fc, trunk, mean, value, log_std;
  explicit Layout(const NetConfig& cfg) {
    n_conv = static_cast<int>(cfg.conv.size());
    img_fc = 2 * n_conv;
    goal_fc = img_fc + 2;
    sbes_fc = goal_fc + 2;
    act_fc = sbes_fc + 2;
    trunk = act_fc + 2;
    mean = trunk + 2;
    value = mean + 2;
    log_std = value + 2;
  }
};

struct ConvDims {
  int ih, iw, ic, oh, ow, oc, kh, kw, s;
};

std::vector<ConvDims> conv_dims(const NetConfig& cfg) {
  std::vector<ConvDims> dims;
  int h = cfg.image_height, w = cfg.image_width, c = cfg.stack_k;
  for (const auto& l : cfg.conv) {
    ConvDims d;
    d.ih = h; d.iw = w; d.ic = c;
    d.kh = l.kh; d.kw = l.kw; d.s = l.stride;
    d.oh = (h - l.kh) / l.stride + 1;
    d.ow = (w - l.kw) / l.stride + 1;
    d.oc = l.out_ch;
    h = d.oh; w = d.ow; c = d.oc;
    dims.push_back(d);
  }
  return dims;
}

template <typename T>
void conv_forward(const ConvDims& d, const T* in, const float* w,
                  const float* b, T* out, bool relu) {
  for (int oc = 0; oc < d.oc; ++oc) {
    for (int oy = 0; oy < d.oh; ++oy) {
      for (int ox = 0; ox < d.ow; ++ox) {
        T acc = b[oc];
        for (int ic = 0; ic < d.ic; ++ic) {
          const T* in_c = in + (int64_t)ic * d.ih * d.iw;
          const float* w_c =
              w + (((int64_t)oc * d.ic + ic) * d.kh) * d.kw;
          for (int ky = 0; ky < d.kh; ++ky) {
            const T* in_row = in_c + (int64_t)(oy * d.s + ky) * d.iw + ox * d.s;
            const float* w_row = w_c + (int64_t)ky * d.kw;
            for (int kx = 0; kx < d.kw; ++kx) acc += in_row[kx] * w_row[kx];
          }
        }
        if (relu && acc < T(0)) acc = T(0);
        out[((int64_t)oc * d.oh + oy) * d.ow + ox] = acc;
      }
    }
  }
}

// d_out already has the ReLU mask applied. Accumulates into dw/db/d_in.
void conv_backward(const ConvDims& d, const float* in, const float* w,
                   const float* d_out, float* dw, float* db, float* d_in) {
  if (d_in)
    std::fill(d_in, d_in + (int64_t)d.ic * d.ih * d.iw, 0.0f);
  for (int oc = 0; oc < d.oc; ++oc) {
    for (int oy = 0; oy < d.oh; ++oy) {
      for (int ox = 0; ox < d.ow; ++ox) {
        const float g = d_out[((int64_t)oc * d.oh + oy) * d.ow + ox];
        if (g == 0.0f) continue;
        db[oc] += g;
        for (int ic = 0; ic < d.ic; ++ic) {
          const float* in_c = in + (int64_t)ic * d.ih * d.iw;
          float* dw_c = dw + (((int64_t)oc * d.ic + ic) * d.kh) * d.kw;
          float* din_c = d_in ? d_in + (int64_t)ic * d.ih * d.iw : nullptr;
          const float* w_c = w + (((int64_t)oc * d.ic + ic) * d.kh) * d.kw;
          for (int ky = 0; ky < d.kh; ++ky) {
            const float* in_row =
                in_c + (int64_t)(oy * d.s + ky) * d.iw + ox * d.s;
            float* dw_row = dw_c + (int64_t)ky * d.kw;
            for (int kx = 0; kx < d.kw; ++kx) dw_row[kx] += g * in_row[kx];
            if (din_c) {
              float* din_row =
                  din_c + (int64_t)(oy * d.s + ky) * d.iw + ox * d.s;
              const float* w_row = w_c + (int64_t)ky * d.kw;
              for (int kx = 0; kx < d.kw; ++kx) din_row[kx] += g * w_row[kx];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void fc_forward(int out_n, int in_n, const float* w, const float* b,
                const T* x, T* y, bool relu) {
  for (int o = 0; o < out_n; ++o) {
    const float* row = w + (int64_t)o * in_n;
    T acc = b[o];
    for (int i = 0; i < in_n; ++i) acc += row[i] * x[i];
    if (relu && acc < T(0)) acc = T(0);
    y[o] = acc;
  }
}

// d_y already masked. Accumulates into dw/db and (optionally) dx.
void fc_backward(int out_n, int in_n, const float* w, const float* x,
                 const float* d_y, float* dw, float* db, float* dx) {
  if (dx) std::fill(dx, dx + in_n, 0.0f);
  for (int o = 0; o < out_n; ++o) {
    const float g = d_y[o];
    if (g == 0.0f) continue;
    db[o] += g;
    const float* row = w + (int64_t)o * in_n;
    float* dw_row = dw + (int64_t)o * in_n;
    for (int i = 0; i < in_n; ++i) {
      dw_row[i] += g * x[i];
      if (dx) dx[i] += g * row[i];
    }
  }
}

void relu_mask(const std::vector<float>& act, std::vector<float>& grad) {
  for (size_t i = 0; i < act.size(); ++i)
    if (act[i] <= 0.0f) grad[i] = 0.0f;
}

}  // namespace

std::vector<std::string> NetworkParams::tensor_names(const NetConfig& cfg) {
  std::vector<std::string> names;
  for (const auto& s : tensor_specs(cfg)) names.push_back(s.name);
  return names;
}

int64_t NetworkParams::param_count() const {
  int64_t n = 0;
  for (const auto& t : tensors) n += t.size();
  return n;
}

EncodedObs encode_obs(const StackedObservation& obs, const NetConfig& cfg) {
  EncodedObs e;
  const int hw = cfg.image_height * cfg.image_width;
  e.image.reserve((size_t)cfg.stack_k * hw);
  e.goal.reserve((size_t)cfg.stack_k * 3);
  e.sbes.reserve(cfg.stack_k);
  e.act.reserve((size_t)cfg.stack_k * 2);
  for (const auto& f : obs.frames) {
    for (double v : f.depth.values) e.image.push_back((float)v);
    e.goal.push_back((float)std::clamp(f.goal.d_h / 10.0, 0.0, 2.0));
    e.goal.push_back((float)(f.goal.d_v / 5.0));
    e.goal.push_back((float)(f.goal.theta_h / M_PI));
    e.sbes.push_back((float)f.range);
    e.act.push_back((float)f.last_action.v);
    e.act.push_back((float)f.last_action.w);
  }
  return e;
}

PolicyOutput forward(const NetworkParams& params, const EncodedObs& obs,
                     ForwardCache* cache) {
  const NetConfig& cfg = params.cfg;
  const Layout L(cfg);
  const auto dims = conv_dims(cfg);
  if ((int64_t)obs.image.size() !=
      (int64_t)cfg.stack_k * cfg.image_height * cfg.image_width)
    throw ContractViolation("forward: observation shape mismatch");

  ForwardCache local;
  ForwardCache& c = cache ? *cache : local;
  c.in = obs;
  c.conv_act.resize(dims.size());

  const float* cur = obs.image.data();
  for (size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    c.conv_act[i].assign((size_t)d.oc * d.oh * d.ow, 0.0f);
    conv_forward(d, cur, params.tensors[2 * i].v.data(),
                 params.tensors[2 * i + 1].v.data(), c.conv_act[i].data(),
                 /*relu=*/true);
    cur = c.conv_act[i].data();
  }

  c.img_act.assign(cfg.img_feat, 0.0f);
  fc_forward(cfg.img_feat, cfg.conv_out_size(), params.tensors[L.img_fc].v.data(),
             params.tensors[L.img_fc + 1].v.data(), cur, c.img_act.data(), true);
  c.goal_act.assign(cfg.goal_feat, 0.0f);
  fc_forward(cfg.goal_feat, cfg.stack_k * 3, params.tensors[L.goal_fc].v.data(),
             params.tensors[L.goal_fc + 1].v.data(), obs.goal.data(),
             c.goal_act.data(), true);
  c.sbes_act.assign(cfg.sbes_feat, 0.0f);
  fc_forward(cfg.sbes_feat, cfg.stack_k, params.tensors[L.sbes_fc].v.data(),
             params.tensors[L.sbes_fc + 1].v.data(), obs.sbes.data(),
             c.sbes_act.data(), true);
  c.act_act.assign(cfg.act_feat, 0.0f);
  fc_forward(cfg.act_feat, cfg.stack_k * 2, params.tensors[L.act_fc].v.data(),
             params.tensors[L.act_fc + 1].v.data(), obs.act.data(),
             c.act_act.data(), true);

  c.concat.clear();
  c.concat.insert(c.concat.end(), c.img_act.begin(), c.img_act.end());
  c.concat.insert(c.concat.end(), c.goal_act.begin(), c.goal_act.end());
  c.concat.insert(c.concat.end(), c.sbes_act.begin(), c.sbes_act.end());
  c.concat.insert(c.concat.end(), c.act_act.begin(), c.act_act.end());

  c.trunk_act.assign(cfg.trunk_hidden, 0.0f);
  fc_forward(cfg.trunk_hidden, cfg.concat_size(),
             params.tensors[L.trunk].v.data(),
             params.tensors[L.trunk + 1].v.data(), c.concat.data(),
             c.trunk_act.data(), true);

  PolicyOutput out;
  float mean[2];
  fc_forward(2, cfg.trunk_hidden, params.tensors[L.mean].v.data(),
             params.tensors[L.mean + 1].v.data(), c.trunk_act.data(), mean,
             false);
  out.mean = {mean[0], mean[1]};
  float value;
  fc_forward(1, cfg.trunk_hidden, params.tensors[L.value].v.data(),
             params.tensors[L.value + 1].v.data(), c.trunk_act.data(), &value,
             false);
  out.value = value;
  out.log_std = {params.tensors[L.log_std].v[0], params.tensors[L.log_std].v[1]};
  return out;
}

PolicyOutputF64 forward_fp64(const NetworkParams& params,
                             const EncodedObs& obs) {
  const NetConfig& cfg = params.cfg;
  const Layout L(cfg);
  const auto dims = conv_dims(cfg);

  std::vector<double> cur(obs.image.begin(), obs.image.end());
  for (size_t i = 0; i < dims.size(); ++i) {
    const auto& d = dims[i];
    std::vector<double> next((size_t)d.oc * d.oh * d.ow);
    conv_forward(d, cur.data(), params.tensors[2 * i].v.data(),
                 params.tensors[2 * i + 1].v.data(), next.data(), true);
    cur = std::move(next);
  }
  std::vector<double> img(cfg.img_feat);
  fc_forward(cfg.img_feat, cfg.conv_out_size(),
             params.tensors[L.img_fc].v.data(),
             params.tensors[L.img_fc + 1].v.data(), cur.data(), img.data(),
             true);
  const std::vector<double> goal_in(obs.goal.begin(), obs.goal.end());
  const std::vector<double> sbes_in(obs.sbes.begin(), obs.sbes.end());
  const std::vector<double> act_in(obs.act.begin(), obs.act.end());
  std::vector<double> goal(cfg.goal_feat), sbes(cfg.sbes_feat),
      act(cfg.act_feat);
  fc_forward(cfg.goal_feat, cfg.stack_k * 3, params.tensors[L.goal_fc].v.data(),
             params.tensors[L.goal_fc + 1].v.data(), goal_in.data(),
             goal.data(), true);
  fc_forward(cfg.sbes_feat, cfg.stack_k, params.tensors[L.sbes_fc].v.data(),
             params.tensors[L.sbes_fc + 1].v.data(), sbes_in.data(),
             sbes.data(), true);
  fc_forward(cfg.act_feat, cfg.stack_k * 2, params.tensors[L.act_fc].v.data(),
             params.tensors[L.act_fc + 1].v.data(), act_in.data(), act.data(),
             true);
  std::vector<double> concat;
  concat.insert(concat.end(), img.begin(), img.end());
  concat.insert(concat.end(), goal.begin(), goal.end());
  concat.insert(concat.end(), sbes.begin(), sbes.end());
  concat.insert(concat.end(), act.begin(), act.end());
  std::vector<double> trunk(cfg.trunk_hidden);
  fc_forward(cfg.trunk_hidden, cfg.concat_size(),
             params.tensors[L.trunk].v.data(),
             params.tensors[L.trunk + 1].v.data(), concat.data(), trunk.data(),
             true);
  PolicyOutputF64 out;
  double mean[2], value;
  fc_forward(2, cfg.trunk_hidden, params.tensors[L.mean].v.data(),
             params.tensors[L.mean + 1].v.data(), trunk.data(), mean, false);
  fc_forward(1, cfg.trunk_hidden, params.tensors[L.value].v.data(),
             params.tensors[L.value + 1].v.data(), trunk.data(), &value,
             false);
  out.mean = {mean[0], mean[1]};
  out.value = value;
  out.log_std = {(double)params.tensors[L.log_std].v[0],
                 (double)params.tensors[L.log_std].v[1]};
  return out;
}

std::vector<Tensor> zero_grads(const NetworkParams& params) {
  std::vector<Tensor> grads;
  grads.reserve(params.tensors.size());
  for (const auto& t : params.tensors) grads.push_back(Tensor::zeros(t.shape));
  return grads;
}

void backward(const NetworkParams& params, const ForwardCache& c,
              const OutputGrad& up, std::vector<Tensor>& grads) {
  const NetConfig& cfg = params.cfg;
  const Layout L(cfg);
  const auto dims = conv_dims(cfg);

  grads[L.log_std].v[0] += up.d_log_std[0];
  grads[L.log_std].v[1] += up.d_log_std[1];

  // Heads into trunk activation.
  std::vector<float> d_trunk(cfg.trunk_hidden, 0.0f);
  const float d_mean[2] = {up.d_mean[0], up.d_mean[1]};
  {
    std::vector<float> tmp(cfg.trunk_hidden, 0.0f);
    fc_backward(2, cfg.trunk_hidden, params.tensors[L.mean].v.data(),
                c.trunk_act.data(), d_mean, grads[L.mean].v.data(),
                grads[L.mean + 1].v.data(), tmp.data());
    for (int i = 0; i < cfg.trunk_hidden; ++i) d_trunk[i] += tmp[i];
    const float d_value[1] = {up.d_value};
    fc_backward(1, cfg.trunk_hidden, params.tensors[L.value].v.data(),
                c.trunk_act.data(), d_value, grads[L.value].v.data(),
                grads[L.value + 1].v.data(), tmp.data());
    for (int i = 0; i < cfg.trunk_hidden; ++i) d_trunk[i] += tmp[i];
  }
  relu_mask(c.trunk_act, d_trunk);

  std::vector<float> d_concat(cfg.concat_size(), 0.0f);
  fc_backward(cfg.trunk_hidden, cfg.concat_size(),
              params.tensors[L.trunk].v.data(), c.concat.data(),
              d_trunk.data(), grads[L.trunk].v.data(),
              grads[L.trunk + 1].v.data(), d_concat.data());

  // Split the concat gradient back into the four encoder outputs.
  std::vector<float> d_img(d_concat.begin(), d_concat.begin() + cfg.img_feat);
  auto it = d_concat.begin() + cfg.img_feat;
  std::vector<float> d_goal(it, it + cfg.goal_feat);
  it += cfg.goal_feat;
  std::vector<float> d_sbes(it, it + cfg.sbes_feat);
  it += cfg.sbes_feat;
  std::vector<float> d_act(it, it + cfg.act_feat);

  relu_mask(c.img_act, d_img);
  relu_mask(c.goal_act, d_goal);
  relu_mask(c.sbes_act, d_sbes);
  relu_mask(c.act_act, d_act);

  fc_backward(cfg.goal_feat, cfg.stack_k * 3, params.tensors[L.goal_fc].v.data(),
              c.in.goal.data(), d_goal.data(), grads[L.goal_fc].v.data(),
              grads[L.goal_fc + 1].v.data(), nullptr);
  fc_backward(cfg.sbes_feat, cfg.stack_k, params.tensors[L.sbes_fc].v.data(),
              c.in.sbes.data(), d_sbes.data(), grads[L.sbes_fc].v.data(),
              grads[L.sbes_fc + 1].v.data(), nullptr);
  fc_backward(cfg.act_feat, cfg.stack_k * 2, params.tensors[L.act_fc].v.data(),
              c.in.act.data(), d_act.data(), grads[L.act_fc].v.data(),
              grads[L.act_fc + 1].v.data(), nullptr);

  const float* conv_out =
      dims.empty() ? c.in.image.data() : c.conv_act.back().data();
  std::vector<float> d_conv_out(cfg.conv_out_size(), 0.0f);
  fc_backward(cfg.img_feat, cfg.conv_out_size(),
              params.tensors[L.img_fc].v.data(), conv_out, d_img.data(),
              grads[L.img_fc].v.data(), grads[L.img_fc + 1].v.data(),
              d_conv_out.data());

  // Conv stack, last to first.
  std::vector<float> d_cur = std::move(d_conv_out);
  for (int i = static_cast<int>(dims.size()) - 1; i >= 0; --i) {
    const auto& d = dims[i];
    relu_mask(c.conv_act[i], d_cur);
    const float* in =
        i == 0 ? c.in.image.data() : c.conv_act[i - 1].data();
    const bool need_din = i > 0;
    std::vector<float> d_in(need_din ? (size_t)d.ic * d.ih * d.iw : 0);
    conv_backward(d, in, params.tensors[2 * i].v.data(), d_cur.data(),
                  grads[2 * i].v.data(), grads[2 * i + 1].v.data(),
                  need_din ? d_in.data() : nullptr);
    d_cur = std::move(d_in);
  }
}

NetworkParams init_params(uint64_t seed, const NetConfig& cfg) {
  NetworkParams p;
  p.cfg = cfg;
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Layout L(cfg);
  const auto specs = tensor_specs(cfg);
  int64_t last_fan_in = 1;
  for (size_t idx = 0; idx < specs.size(); ++idx) {
    Tensor t = Tensor::zeros(specs[idx].shape);
    const bool is_weight = specs[idx].shape.size() >= 2;
    if (is_weight) {
      int64_t fan_in = 1;
      for (size_t d = 1; d < t.shape.size(); ++d) fan_in *= t.shape[d];
      last_fan_in = fan_in;
      if (cfg.orthogonal_init && t.shape.size() == 2) {
        // Row-orthogonal via Gram-Schmidt on Gaussian rows.
        const int rows = t.shape[0], cols = t.shape[1];
        for (auto& v : t.v) v = (float)gauss(rng);
        for (int r = 0; r < rows; ++r) {
          float* row = t.v.data() + (int64_t)r * cols;
          for (int q = 0; q < r; ++q) {
            const float* prev = t.v.data() + (int64_t)q * cols;
            double dot = 0.0;
            for (int i = 0; i < cols; ++i) dot += row[i] * prev[i];
            for (int i = 0; i < cols; ++i) row[i] -= (float)dot * prev[i];
          }
          double nrm = 0.0;
          for (int i = 0; i < cols; ++i) nrm += row[i] * row[i];
          nrm = std::sqrt(std::max(nrm, 1e-12));
          for (int i = 0; i < cols; ++i) row[i] = (float)(row[i] / nrm);
        }
      } else {
        const double bound = std::sqrt(6.0 / (double)fan_in);
        for (auto& v : t.v) v = (float)(unif(rng) * bound);
      }
      if ((int)idx == L.mean)
        for (auto& v : t.v) v *= 0.01f;
    } else if ((int)idx == L.log_std) {
      std::fill(t.v.begin(), t.v.end(), cfg.log_std_init);
    } else {
      // Bias: small uniform, never exactly zero, so no unit starts on the
      // ReLU kink.
      const double bound = 1.0 / std::sqrt((double)last_fan_in);
      for (auto& v : t.v) v = (float)(unif(rng) * bound);
      if ((int)idx == L.mean + 1)
        for (auto& v : t.v) v *= 0.01f;
    }
    p.tensors.push_back(std::move(t));
  }
  return p;
}

SampledAction sample_action(const PolicyOutput& out, Rng& rng) {
  SampledAction s;
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int i = 0; i < 2; ++i) {
    const double sigma = std::exp((double)out.log_std[i]);
    s.raw[i] = (double)out.mean[i] + sigma * gauss(rng);
  }
  s.action.v = std::clamp(s.raw[0], -1.0, 1.0);
  s.action.w = std::clamp(s.raw[1], -1.0, 1.0);
  s.log_prob = action_log_prob(out, s.raw);
  return s;
}

double action_log_prob(const PolicyOutput& out,
                       const std::array<double, 2>& raw) {
  double lp = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double log_sigma = (double)out.log_std[i];
    const double z = (raw[i] - (double)out.mean[i]) / std::exp(log_sigma);
    lp += -0.5 * z * z - log_sigma - 0.5 * std::log(2.0 * M_PI);
  }
  return lp;
}

namespace {

constexpr char kMagic[8] = {'U', 'W', 'N', 'V', 'N', 'E', 'T', '\0'};
constexpr uint32_t kCheckpointVersion = 1;

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw CheckpointError("checkpoint: truncated file");
  return v;
}

void write_string(std::ostream& os, const std::string& s) {
  write_pod<uint32_t>(os, (uint32_t)s.size());
  os.write(s.data(), (std::streamsize)s.size());
}

std::string read_string(std::istream& is) {
  const uint32_t n = read_pod<uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) throw CheckpointError("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_params(const NetworkParams& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path);
  os.write(kMagic, sizeof(kMagic));
  write_pod<uint32_t>(os, kCheckpointVersion);
  const NetConfig& c = params.cfg;
  write_pod<int32_t>(os, c.image_height);
  write_pod<int32_t>(os, c.image_width);
  write_pod<int32_t>(os, c.stack_k);
  write_pod<int32_t>(os, (int32_t)c.conv.size());
  for (const auto& l : c.conv) {
    write_pod<int32_t>(os, l.out_ch);
    write_pod<int32_t>(os, l.kh);
    write_pod<int32_t>(os, l.kw);
    write_pod<int32_t>(os, l.stride);
  }
  write_pod<int32_t>(os, c.img_feat);
  write_pod<int32_t>(os, c.goal_feat);
  write_pod<int32_t>(os, c.sbes_feat);
  write_pod<int32_t>(os, c.act_feat);
  write_pod<int32_t>(os, c.trunk_hidden);
  write_pod<float>(os, c.log_std_init);
  write_pod<uint8_t>(os, c.orthogonal_init ? 1 : 0);

  const auto names = NetworkParams::tensor_names(c);
  write_pod<uint32_t>(os, (uint32_t)params.tensors.size());
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    const Tensor& t = params.tensors[i];
    write_string(os, names[i]);
    write_pod<uint32_t>(os, (uint32_t)t.shape.size());
    for (int d : t.shape) write_pod<int32_t>(os, d);
    os.write(reinterpret_cast<const char*>(t.v.data()),
             (std::streamsize)(t.v.size() * sizeof(float)));
  }
  if (!os) throw CheckpointError("checkpoint: write failed for " + path);
}

NetworkParams load_params(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw CheckpointError("checkpoint: bad magic");
  const uint32_t version = read_pod<uint32_t>(is);
  if (version != kCheckpointVersion)
    throw CheckpointError("checkpoint: unsupported version " +
                          std::to_string(version));
  NetConfig c;
  c.image_height = read_pod<int32_t>(is);
  c.image_width = read_pod<int32_t>(is);
  c.stack_k = read_pod<int32_t>(is);
  const int n_conv = read_pod<int32_t>(is);
  c.conv.clear();
  for (int i = 0; i < n_conv; ++i) {
    ConvSpec l;
    l.out_ch = read_pod<int32_t>(is);
    l.kh = read_pod<int32_t>(is);
    l.kw = read_pod<int32_t>(is);
    l.stride = read_pod<int32_t>(is);
    c.conv.push_back(l);
  }
  c.img_feat = read_pod<int32_t>(is);
  c.goal_feat = read_pod<int32_t>(is);
  c.sbes_feat = read_pod<int32_t>(is);
  c.act_feat = read_pod<int32_t>(is);
  c.trunk_hidden = read_pod<int32_t>(is);
  c.log_std_init = read_pod<float>(is);
  c.orthogonal_init = read_pod<uint8_t>(is) != 0;

  NetworkParams p;
  p.cfg = c;
  const auto names = NetworkParams::tensor_names(c);
  const uint32_t count = read_pod<uint32_t>(is);
  if (count != names.size())
    throw CheckpointError("checkpoint: tensor count mismatch");
  for (uint32_t i = 0; i < count; ++i) {
    const std::string name = read_string(is);
    if (name != names[i])
      throw CheckpointError("checkpoint: unexpected tensor " + name);
    const uint32_t ndim = read_pod<uint32_t>(is);
    std::vector<int> shape(ndim);
    int64_t n = 1;
    for (auto& d : shape) {
      d = read_pod<int32_t>(is);
      n *= d;
    }
    Tensor t;
    t.shape = shape;
    t.v.resize(n);
    is.read(reinterpret_cast<char*>(t.v.data()),
            (std::streamsize)(n * sizeof(float)));
    if (!is) throw CheckpointError("checkpoint: truncated tensor data");
    p.tensors.push_back(std::move(t));
  }
  return p;
}

}  // namespace uwnav
