#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "uwnav/gradcheck.hpp"
#include "uwnav/network.hpp"

using namespace uwnav;

namespace {

EncodedObs random_obs(const NetConfig& cfg, uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  EncodedObs obs;
  for (int i = 0; i < cfg.stack_k * cfg.image_height * cfg.image_width; ++i)
    obs.image.push_back((float)std::abs(u(rng)));
  for (int i = 0; i < cfg.stack_k * 3; ++i) obs.goal.push_back((float)u(rng));
  for (int i = 0; i < cfg.stack_k; ++i)
    obs.sbes.push_back((float)std::abs(u(rng)));
  for (int i = 0; i < cfg.stack_k * 2; ++i) obs.act.push_back((float)u(rng));
  return obs;
}

}  // namespace

TEST_CASE("zero parameters give zero mean and value") {
  const NetConfig cfg = gradcheck_config();
  NetworkParams params = init_params(1, cfg);
  for (auto& t : params.tensors)
    std::fill(t.v.begin(), t.v.end(), 0.0f);
  const PolicyOutput out = forward(params, random_obs(cfg, 2));
  CHECK(out.mean[0] == 0.0f);
  CHECK(out.mean[1] == 0.0f);
  CHECK(out.value == 0.0f);
}

TEST_CASE("forward is deterministic and pure") {
  const NetConfig cfg = gradcheck_config();
  const NetworkParams params = init_params(3, cfg);
  const EncodedObs obs = random_obs(cfg, 4);
  const PolicyOutput a = forward(params, obs);
  const PolicyOutput b = forward(params, obs);
  CHECK(a.mean == b.mean);
  CHECK(a.value == b.value);
  CHECK(a.log_std == b.log_std);
}

TEST_CASE("init is deterministic and shapes are consistent") {
  const NetConfig cfg;  // full default network
  const NetworkParams a = init_params(9, cfg);
  const NetworkParams b = init_params(9, cfg);
  REQUIRE(a.tensors.size() == b.tensors.size());
  for (size_t i = 0; i < a.tensors.size(); ++i) CHECK(a.tensors[i].v == b.tensors[i].v);

  const auto names = NetworkParams::tensor_names(cfg);
  CHECK(names.size() == a.tensors.size());
  for (const auto& t : a.tensors) {
    int64_t n = 1;
    for (int d : t.shape) n *= d;
    CHECK(n == t.size());
  }
}

TEST_CASE("default parameter count matches the architecture formula") {
  const NetConfig cfg;
  const NetworkParams p = init_params(1, cfg);
  // Conv stack on 5x32x40: 8@5x5/2, 16@3x3/2, 32@3x3/2 -> 32x2x3 = 192.
  CHECK(cfg.conv_out_size() == 192);
  int64_t expect = 0;
  expect += 8 * 5 * 5 * 5 + 8;        // conv0
  expect += 16 * 8 * 3 * 3 + 16;      // conv1
  expect += 32 * 16 * 3 * 3 + 32;     // conv2
  expect += 512 * 192 + 512;          // image projection
  expect += 96 * 15 + 96;             // goal encoder
  expect += 32 * 5 + 32;              // sbes encoder
  expect += 64 * 10 + 64;             // action encoder
  expect += 256 * 704 + 256;          // trunk
  expect += 2 * 256 + 2;              // mean head
  expect += 1 * 256 + 1;              // value head
  expect += 2;                        // log_std
  CHECK(p.param_count() == expect);
}

TEST_CASE("small-head init keeps initial means near zero") {
  const NetConfig cfg = gradcheck_config();
  int small = 0;
  for (int i = 0; i < 100; ++i) {
    const NetworkParams p = init_params(1000 + i, cfg);
    const PolicyOutput out = forward(p, random_obs(cfg, 2000 + i));
    if (std::abs(out.mean[0]) < 0.1 && std::abs(out.mean[1]) < 0.1) ++small;
  }
  CHECK(small >= 95);
}

TEST_CASE("sample_action statistics") {
  PolicyOutput out;
  out.mean = {0.3f, -0.2f};
  out.log_std = {-5.0f, -5.0f};
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const SampledAction s = sample_action(out, rng);
    CHECK(s.action.v == doctest::Approx(0.3).epsilon(0.05));
    CHECK(s.action.w == doctest::Approx(-0.2).epsilon(0.05));
  }

  out.mean = {0.0f, 0.0f};
  out.log_std = {0.0f, 0.0f};
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const SampledAction s = sample_action(out, rng);
    sum += s.action.v;
    sum2 += s.action.v * s.action.v;
  }
  const double mean = sum / n;
  const double std = std::sqrt(sum2 / n - mean * mean);
  // Censored (clamped) standard normal: E[x^2] = 2*Phi(1) - 1 - 2*phi(1)
  // + 2*(1 - Phi(1)) = 0.51606, std = 0.71837.
  CHECK(std == doctest::Approx(0.71837).epsilon(0.02));
}

TEST_CASE("log_prob closed form at the mean") {
  PolicyOutput out;
  out.mean = {0.4f, -0.1f};
  out.log_std = {-0.5f, 0.3f};
  const double lp = action_log_prob(out, {0.4, -0.1});
  const double expect = -(-0.5 + 0.3) - std::log(2.0 * M_PI);
  CHECK(lp == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("unclipped density integrates to one") {
  PolicyOutput out;
  out.mean = {0.0f, 0.0f};
  out.log_std = {0.0f, 0.0f};
  Rng rng(6);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const int n = 200000;
  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += std::exp(action_log_prob(out, {u(rng), u(rng)}));
  const double integral = sum / n * 100.0;  // box area 10 x 10
  CHECK(integral == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("all-zero upstream gives zero gradients") {
  const NetConfig cfg = gradcheck_config();
  const NetworkParams params = init_params(7, cfg);
  ForwardCache cache;
  forward(params, random_obs(cfg, 8), &cache);
  auto grads = zero_grads(params);
  backward(params, cache, OutputGrad{}, grads);
  for (const auto& g : grads)
    for (float v : g.v) CHECK(v == 0.0f);
}

TEST_CASE("value head bias gradient is the upstream value gradient") {
  const NetConfig cfg = gradcheck_config();
  const NetworkParams params = init_params(7, cfg);
  ForwardCache cache;
  forward(params, random_obs(cfg, 8), &cache);
  auto grads = zero_grads(params);
  OutputGrad up;
  up.d_value = 1.7f;
  backward(params, cache, up, grads);
  const auto names = NetworkParams::tensor_names(cfg);
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == "value_b") CHECK(grads[i].v[0] == doctest::Approx(1.7f));
}

TEST_CASE("perturbing a final-layer weight moves the value linearly") {
  const NetConfig cfg = gradcheck_config();
  NetworkParams params = init_params(7, cfg);
  const EncodedObs obs = random_obs(cfg, 8);
  ForwardCache cache;
  const PolicyOutput base = forward(params, obs, &cache);
  const auto names = NetworkParams::tensor_names(cfg);
  size_t vw = 0;
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == "value_w") vw = i;
  const float eps = 0.25f;
  params.tensors[vw].v[2] += eps;
  const PolicyOutput bumped = forward(params, obs);
  CHECK(bumped.value - base.value ==
        doctest::Approx(eps * cache.trunk_act[2]).epsilon(1e-4));
}

TEST_CASE("finite differences confirm the composed gradients") {
  const GradCheckResult r = gradient_check(99);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("finite differences confirm the fully-connected-only path") {
  NetConfig cfg = gradcheck_config();
  cfg.conv.clear();  // image goes straight into the linear projection
  const GradCheckResult r = gradient_check_on(cfg, 31);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("finite differences confirm a single conv layer") {
  NetConfig cfg = gradcheck_config();
  cfg.conv = {{2, 3, 3, 2}};
  const GradCheckResult r = gradient_check_on(cfg, 32);
  CHECK(r.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const NetConfig cfg = gradcheck_config();
  const NetworkParams params = init_params(11, cfg);
  const std::string path = "test_params.ckpt";
  save_params(params, path);
  const NetworkParams back = load_params(path);
  REQUIRE(back.tensors.size() == params.tensors.size());
  for (size_t i = 0; i < params.tensors.size(); ++i) {
    CHECK(back.tensors[i].shape == params.tensors[i].shape);
    CHECK(back.tensors[i].v == params.tensors[i].v);
  }
  std::remove(path.c_str());
}

TEST_CASE("checkpoint corruption is rejected") {
  const NetConfig cfg = gradcheck_config();
  const NetworkParams params = init_params(11, cfg);
  const std::string path = "test_params_corrupt.ckpt";
  save_params(params, path);

  std::ifstream is(path, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  is.close();

  {
    std::ofstream os(path, std::ios::binary);
    os.write(bytes.data(), (std::streamsize)(bytes.size() / 2));
  }
  CHECK_THROWS_AS((void)load_params(path), CheckpointError);

  {
    std::string bad = bytes;
    bad[0] = 'X';  // magic
    std::ofstream os(path, std::ios::binary);
    os.write(bad.data(), (std::streamsize)bad.size());
  }
  CHECK_THROWS_AS((void)load_params(path), CheckpointError);

  {
    std::string bad = bytes;
    bad[8] = 99;  // version field
    std::ofstream os(path, std::ios::binary);
    os.write(bad.data(), (std::streamsize)bad.size());
  }
  CHECK_THROWS_AS((void)load_params(path), CheckpointError);

  std::remove(path.c_str());
}
