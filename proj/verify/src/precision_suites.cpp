// Copyright 2026 The DADF Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dadf_verify/precision.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

#include "dadf/gradcheck.hpp"
#include "dadf/losses.hpp"
#include "dadf/model.hpp"
#include "dadf/ops.hpp"
#include "dadf/train.hpp"
#include "dadf_verify/oracles.hpp"

DADF_NAMESPACE_BEGIN
namespace checks {
namespace {

using ::dadf::verify::CheckResult;
using ::dadf::verify::Report;

constexpr const char* kFlavour = kRealIsDouble ? "f64" : "f32";

template <typename... Args>
std::string fmt(const char* format, Args... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

[[maybe_unused]] void jitter(const ParameterList& params, Rng& rng, Real stddev) {
  for (const NamedTensor& p : params) {
    Tensor t = p.tensor;
    for (Real& v : t.mutable_data()) v += rng.normal(0, stddev);
  }
}

}  // namespace

double roundtrip_error(const FlowStack& stack, std::span<const Tensor> inputs) {
  NoGradGuard guard;
  double worst = 0;
  for (const Tensor& u : inputs) {
    const Tensor back = stack.inverse(stack.forward(u).z);
    const auto a = u.data(), b = back.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    }
  }
  return worst;
}

Report flow_roundtrip() {
  constexpr double kTolerance = kRealIsDouble ? 1e-10 : 1e-5;
  constexpr std::size_t kInputs = 100;
  const ModelConfig config;
  const auto geometry = pyramid_geometry(config.encoder, config.patch);
  Report report;
  for (std::size_t i = 0; i < geometry.size(); ++i) {
    const std::size_t channels = geometry[i].channels * variant_multiplicity(config.flow.variant);
    const Shape dims{geometry[i].height, geometry[i].width, channels};
    Rng rng(derive_seed(11, i));
    // Per-channel offsets and spreads, like raw joint features.
    std::vector<Real> offset(channels), spread(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      offset[c] = rng.normal(0, 2);
      spread[c] = rng.uniform(Real(0.2), Real(3));
    }
    auto draw = [&] {
      Tensor t = Tensor::zeros(dims);
      auto d = t.mutable_data();
      for (std::size_t p = 0; p < d.size(); ++p) d[p] = offset[p % channels] + spread[p % channels] * rng.normal();
      return t;
    };
    std::vector<Tensor> inputs;
    for (std::size_t k = 0; k < kInputs; ++k) inputs.push_back(draw());

    std::vector<FlowStack> stacks;
    stacks.emplace_back(channels, config.flow, derive_seed(13, i));
    const double at_init = roundtrip_error(stacks[0], inputs);

    std::vector<Tensor> fit_set;
    std::vector<std::vector<Tensor>> samples;
    for (std::size_t k = 0; k < 8; ++k) {
      fit_set.push_back(draw());
      samples.push_back({fit_set.back()});
    }
    stacks[0].fit_standardization(fit_set);
    TrainConfig train;
    train.lr = Real(1e-3);
    train.batch_size = 4;
    train.stage2_epochs = 3;
    fit_flows(stacks, samples, train);
    const double fitted = roundtrip_error(stacks[0], inputs);

    const double worst = std::max(at_init, fitted);
    report.push_back({fmt("flow_roundtrip/%s/scale%zu", kFlavour, i), worst < kTolerance,
                      fmt("max |u - g^-1(g(u))| init %.2e fitted %.2e (tol %.0e, %zu inputs)", at_init, fitted,
                          kTolerance, kInputs)});
  }
  return report;
}

#if defined(DADF_REAL_F64)

Report logdet() {
  constexpr double kTolerance = 1e-3;
  constexpr double kLocalTolerance = 1e-9;
  constexpr std::size_t kSeeds = 20;
  double worst = 0, worst_local = 0;
  std::size_t max_dims = 0;
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    // Alternate 2x2x8 and 4x4x4 instances: 32 and 64 dims.
    const std::size_t channels = seed % 2 == 0 ? 8 : 4;
    const std::size_t side = seed % 2 == 0 ? 2 : 4;
    const Shape dims{side, side, channels};
    FlowConfig config;
    config.n_blocks = 4;
    FlowStack stack(channels, config, derive_seed(17, seed));
    Rng rng(derive_seed(19, seed));
    ParameterList params;
    stack.collect(params, "flow");
    jitter(params, rng, Real(0.5));
    std::vector<Real> mean(channels), inv_std(channels);
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = rng.normal();
      inv_std[c] = rng.uniform(Real(0.5), Real(2));
    }
    stack.set_standardization(Tensor::from({channels}, mean), Tensor::from({channels}, inv_std));
    const Tensor u = rng.normal_tensor(dims, 1);

    NoGradGuard guard;
    const FlowOutput out = stack.forward(u);
    const double analytic = out.logdet.item();
    double local = 0;
    for (Real v : out.local_logdet.data()) local += v;
    auto f = [&](const std::vector<double>& x) {
      const Tensor z = stack.forward(Tensor::from(dims, std::vector<Real>(x.begin(), x.end()))).z;
      return std::vector<double>(z.data().begin(), z.data().end());
    };
    const std::vector<double> x(u.data().begin(), u.data().end());
    const double numeric = ::dadf::verify::oracle::jacobian_logabsdet(f, x, 1e-5);
    worst = std::max(worst, std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)));
    worst_local = std::max(worst_local, std::abs(local - analytic) / std::max(1.0, std::abs(analytic)));
    max_dims = std::max(max_dims, x.size());
  }
  return {
      {"logdet/jacobian", worst < kTolerance,
       fmt("max rel err %.2e over %zu seeds, <= %zu dims (tol %.0e)", worst, kSeeds, max_dims, kTolerance)},
      {"logdet/local_sum", worst_local < kLocalTolerance,
       fmt("max rel err of summed local log-det %.2e (tol %.0e)", worst_local, kLocalTolerance)},
  };
}

Report density() {
  constexpr double kTolerance = 0.01;
  constexpr std::size_t kSamples = 1024;
  constexpr std::size_t kGrid = 240;
  // Curved, skewed 2-dim target: x ~ N(0,1), y = 0.3 x^2 + 0.5 x + 0.4 N(0,1).
  Rng rng(23);
  std::vector<std::vector<Tensor>> samples;
  std::vector<Tensor> flat;
  double sx = 0, sy = 0, sxx = 0, syy = 0;
  for (std::size_t k = 0; k < kSamples; ++k) {
    const double x = rng.normal();
    const double y = 0.3 * x * x + 0.5 * x + 0.4 * rng.normal();
    flat.push_back(Tensor::from({1, 1, 2}, {x, y}));
    samples.push_back({flat.back()});
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
  }
  const double n = kSamples;
  const double mx = sx / n, my = sy / n;
  const double dx = std::sqrt(sxx / n - mx * mx), dy = std::sqrt(syy / n - my * my);

  FlowConfig config;
  config.n_blocks = 6;
  std::vector<FlowStack> stacks;
  stacks.emplace_back(2, config, 29);
  stacks[0].fit_standardization(flat);
  TrainConfig train;
  train.lr = Real(5e-3);
  train.batch_size = 64;
  train.stage2_epochs = 40;
  const StageResult fit = fit_flows(stacks, samples, train);

  NoGradGuard guard;
  const FlowStack& flow = stacks[0];
  auto density_at = [&](double x, double y) {
    const FlowOutput out = flow.forward(Tensor::from({1, 1, 2}, {x, y}));
    return std::exp(log_likelihood(out.z, out.logdet).item());
  };
  const double mass = ::dadf::verify::oracle::grid_integral(density_at, mx - 6 * dx, mx + 6 * dx, my - 6 * dy,
                                            my + 6 * dy, kGrid);
  const double first = fit.epochs.front().loss_flow, last = fit.epochs.back().loss_flow;
  return {
      {"density/fit", last < first, fmt("toy flow NLL %.4f -> %.4f over %zu epochs", first, last, fit.epochs.size())},
      {"density/normalization", std::abs(mass - 1) < kTolerance,
       fmt("integral of exp(log p) on +-6 sigma grid %.5f (tol %.2f, %zux%zu cells)", mass, kTolerance,
           kGrid, kGrid)},
  };
}

namespace {

struct GradCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Tensor()> loss;
};

std::vector<Tensor> leaves(const ParameterList& params) {
  std::vector<Tensor> out;
  for (const NamedTensor& p : params) out.push_back(p.tensor);
  return out;
}

Tensor input(Shape dims, Rng& rng) { return rng.normal_tensor(std::move(dims), 1).set_requires_grad(true); }

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;
  auto rng = std::make_shared<Rng>(31);
  // Tensor outputs are reduced by a fixed random projection, so no gradient
  // component cancels by symmetry.
  auto add_case = [&](std::string name, std::vector<Tensor> inputs, std::function<Tensor()> out) {
    auto weights = std::make_shared<Tensor>();
    auto probe_rng = std::make_shared<Rng>(derive_seed(37, cases.size()));
    cases.push_back({std::move(name), std::move(inputs), [out, weights, probe_rng] {
                       const Tensor y = out();
                       if (!weights->defined()) *weights = probe_rng->normal_tensor(y.dims(), 1);
                       return sum(mul(y, *weights));
                     }});
  };

  // Primitive ops.
  {
    Tensor a = input({3, 4}, *rng), b = input({4, 5}, *rng);
    add_case("op/matmul", {a, b}, [a, b] { return matmul(a, b); });
  }
  {
    Tensor x = input({3, 5}, *rng);
    add_case("op/softmax_rows", {x}, [x] { return softmax_rows(x); });
  }
  {
    Tensor x = input({3, 6}, *rng), g = input({6}, *rng), b = input({6}, *rng);
    add_case("op/layer_norm", {x, g, b}, [x, g, b] { return layer_norm(x, g, b, Real(1e-5)); });
  }
  {
    Tensor x = input({4, 5, 3}, *rng), k = input({3, 3, 3}, *rng);
    add_case("op/conv2d_depthwise", {x, k}, [x, k] { return conv2d(x, k, ConvMode::kDepthwise3x3); });
  }
  {
    Tensor x = input({4, 5, 3}, *rng), k = input({3, 2}, *rng);
    add_case("op/conv2d_pointwise", {x, k}, [x, k] { return conv2d(x, k, ConvMode::kPointwise1x1); });
  }
  {
    Tensor x = input({4, 6}, *rng);
    add_case("op/leaky_relu", {x}, [x] { return leaky_relu(x, Real(0.2)); });
    add_case("op/gelu", {x}, [x] { return gelu(x); });
    add_case("op/tanh_exp", {x}, [x] { return exp(tanh(x)); });
  }

  // Learnable modules, with every parameter moved off its init so that
  // zero-initialized outputs do not hide upstream gradients.
  {
    Linear lin = Linear::xavier(5, 3, *rng);
    ParameterList p;
    lin.collect(p, "lin");
    jitter(p, *rng, Real(0.3));
    Tensor x = input({4, 5}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    add_case("module/linear", in, [lin, x] { return lin(x); });
  }
  {
    LayerNormParams ln = LayerNormParams::identity(6);
    ParameterList p;
    ln.collect(p, "ln");
    jitter(p, *rng, Real(0.3));
    Tensor x = input({3, 6}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    add_case("module/layer_norm", in, [ln, x] { return ln(x); });
  }
  DualAttnConfig attn;
  attn.depth = 2;
  attn.heads = 2;
  attn.token_dim = 8;
  attn.mlp_ratio = 2;
  {
    AttentionParams params = AttentionParams::init(8, *rng);
    ParameterList p;
    params.collect(p, "attn");
    jitter(p, *rng, Real(0.2));
    Tensor q = input({4, 8}, *rng), kv = input({4, 8}, *rng);
    auto in = leaves(p);
    in.push_back(q);
    in.push_back(kv);
    add_case("module/multi_head_attention", in,
             [params, q, kv] { return multi_head_attention(q, kv, params, 2, nullptr); });
  }
  {
    Mlp mlp = Mlp::init(8, 16, *rng);
    ParameterList p;
    mlp.collect(p, "mlp");
    jitter(p, *rng, Real(0.2));
    Tensor x = input({4, 8}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    add_case("module/mlp", in, [mlp, x] { return mlp(x); });
  }
  {
    SelfBlock block = SelfBlock::init(attn, *rng);
    ParameterList p;
    block.collect(p, "self");
    jitter(p, *rng, Real(0.2));
    Tensor x = input({4, 8}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    add_case("module/self_block", in, [block, x] { return block(x, 2); });
  }
  {
    MemorialBlock block = MemorialBlock::init(attn, *rng);
    ParameterList p;
    block.collect(p, "memorial");
    jitter(p, *rng, Real(0.2));
    Tensor q = input({4, 8}, *rng), g = input({4, 8}, *rng);
    auto in = leaves(p);
    in.push_back(q);
    in.push_back(g);
    add_case("module/memorial_block", in, [block, q, g] { return block(q, g, 2); });
  }

  // A two-scale pyramid that tokenizes to 4 tokens per scale.
  const std::vector<ScaleGeometry> geometry = {{4, 4, 3, 2}, {2, 2, 5, 1}};
  auto random_pyramid = [&](Rng& r) {
    FeaturePyramid pyr;
    for (const ScaleGeometry& g : geometry) pyr.maps.push_back(input(g.map_shape(), r));
    return pyr;
  };
  {
    PatchEmbedding embed(geometry, 8, *rng);
    ParameterList p;
    embed.collect(p, "embed");
    jitter(p, *rng, Real(0.2));
    const FeaturePyramid pyr = random_pyramid(*rng);
    auto in = leaves(p);
    for (const Tensor& m : pyr.maps) in.push_back(m);
    add_case("module/patch_embedding", in, [embed, pyr] { return embed(pyr).tokens; });
  }
  for (QuerySource source : {QuerySource::kStream, QuerySource::kInput}) {
    DualAttnConfig cfg = attn;
    cfg.memorial_query_source = source;
    DualAttentionTransformer transformer(cfg, 4, *rng);
    ParameterList p;
    transformer.collect(p, "transformer");
    jitter(p, *rng, Real(0.2));
    TokenSequence tokens{input({4, 8}, *rng), position_encoding(4, 8)};
    auto in = leaves(p);
    in.push_back(tokens.tokens);
    auto weights = std::make_shared<std::pair<Tensor, Tensor>>(rng->normal_tensor({4, 8}, 1),
                                                                 rng->normal_tensor({4, 8}, 1));
    cases.push_back({std::string("module/dual_attention_transformer/") +
                         (source == QuerySource::kStream ? "stream" : "input"),
                     in, [transformer, tokens, weights] {
                       const DualStreams s = transformer(tokens);
                       return add(sum(mul(s.self_tokens, weights->first)),
                                  sum(mul(s.memory_tokens, weights->second)));
                     }});
  }
  {
    OutputHeads heads(geometry, 8, *rng);
    ParameterList p;
    heads.collect(p, "heads");
    jitter(p, *rng, Real(0.2));
    Tensor tokens = input({4, 8}, *rng);
    auto in = leaves(p);
    in.push_back(tokens);
    auto weights = std::make_shared<std::pair<Tensor, Tensor>>(rng->normal_tensor({4, 4, 3}, 1),
                                                                 rng->normal_tensor({2, 2, 5}, 1));
    cases.push_back({"module/output_heads", in, [heads, tokens, weights] {
                       const FeaturePyramid out = heads(tokens);
                       return add(sum(mul(out.maps[0], weights->first)), sum(mul(out.maps[1], weights->second)));
                     }});
  }
  {
    CouplingSubnet net = CouplingSubnet::init(3, 2, *rng);
    ParameterList p;
    net.collect(p, "subnet");
    jitter(p, *rng, Real(0.3));
    Tensor x = input({3, 4, 3}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    add_case("module/coupling_subnet", in, [net, x] { return net(x); });
  }
  for (bool upper : {false, true}) {
    CouplingLayer layer(5, upper, Real(2), *rng);
    ParameterList p;
    layer.collect(p, "coupling");
    jitter(p, *rng, Real(0.3));
    Tensor x = input({3, 3, 5}, *rng);
    auto in = leaves(p);
    in.push_back(x);
    auto weights = std::make_shared<Tensor>(rng->normal_tensor({3, 3, 5}, 1));
    cases.push_back({std::string("module/coupling_layer/") + (upper ? "upper" : "lower"), in,
                     [layer, x, weights] {
                       const CouplingOutput out = layer.forward(x);
                       return add(sum(mul(out.y, *weights)), sum(out.log_scale));
                     }});
  }
  {
    FlowConfig cfg;
    cfg.n_blocks = 3;
    FlowStack stack(6, cfg, 41);
    ParameterList p;
    stack.collect(p, "flow");
    jitter(p, *rng, Real(0.3));
    Tensor u = input({3, 3, 6}, *rng);
    auto in = leaves(p);
    in.push_back(u);
    cases.push_back({"module/flow_stack_log_likelihood", in, [stack, u] {
                       const FlowOutput out = stack.forward(u);
                       return log_likelihood(out.z, out.logdet);
                     }});
  }

  // Composite objectives through a small full network.
  {
    FlowConfig flow;
    flow.n_blocks = 2;
    auto net = std::make_shared<DadfNet>(geometry, attn, flow, 43);
    ParameterList p = net->parameters();
    jitter(p, *rng, Real(0.2));
    const FeaturePyramid prior = random_pyramid(*rng);
    auto all = leaves(p);
    for (const Tensor& m : prior.maps) all.push_back(m);
    cases.push_back({"loss/self", all, [net, prior] {
                       return loss_self(prior, net->reconstruct(prior).self_rec);
                     }});
    cases.push_back({"loss/memory", all, [net, prior] {
                       return loss_memory(prior, net->reconstruct(prior).memory_rec);
                     }});
    cases.push_back({"loss/total_transformer_stage", all, [net, prior] {
                       const Reconstruction rec = net->reconstruct(prior);
                       return total_loss(TrainStage::kTransformer, prior, rec.self_rec, rec.memory_rec, {}, {})
                           .total;
                     }});
    // The flow stage treats reconstructions as constants, so only the flow
    // parameters carry a gradient.
    cases.push_back({"loss/total_flow_stage", leaves(net->flow_parameters()), [net, prior] {
                       const Reconstruction rec = net->reconstruct(prior);
                       const std::vector<Tensor> joint = net->joint(prior, rec);
                       return total_loss(TrainStage::kFlow, prior, rec.self_rec, rec.memory_rec, net->flows(),
                                         joint)
                           .total;
                     }});
    const FeaturePyramid second = random_pyramid(*rng);
    std::vector<std::vector<Tensor>> batch;
    {
      NoGradGuard off;
      for (const FeaturePyramid* pyr : {&prior, &second}) {
        std::vector<Tensor> joint = net->joint(*pyr, net->reconstruct(*pyr));
        for (Tensor& t : joint) t = t.detach();
        batch.push_back(std::move(joint));
      }
    }
    cases.push_back({"loss/flow_batch", leaves(net->flow_parameters()),
                     [net, batch] { return loss_flow(batch, net->flows()); }});
  }
  return cases;
}

}  // namespace

Report gradcheck_modules() {
  constexpr double kTolerance = 1e-4;
  Report report;
  for (GradCase& c : grad_cases()) {
    GradcheckOptions options;
    options.step = 1e-6;
    const GradcheckResult r = gradcheck(c.loss, c.inputs, options);
    report.push_back({"gradcheck/" + c.name, r.max_rel_error < kTolerance,
                      fmt("max rel err %.2e over %zu elements (tol %.0e)", r.max_rel_error,
                          r.elements_checked, kTolerance)});
  }
  return report;
}

#endif

}  // namespace checks
DADF_NAMESPACE_END
