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

#include "dadf/train.hpp"

#include <cmath>
#include <string>

#include "dadf/ops.hpp"
#include "dadf/optim.hpp"
#include "dadf/random.hpp"

DADF_NAMESPACE_BEGIN

void TrainConfig::validate() const {
  if (!(lr > 0)) throw ContractError("learning rate must be positive");
  if (weight_decay < 0) throw ContractError("weight decay must be non-negative");
  if (batch_size == 0) throw ContractError("batch size must be positive");
}

namespace {

std::vector<std::string> names_of(const ParameterList& list) {
  std::vector<std::string> out;
  for (const auto& p : list) out.push_back(p.name);
  return out;
}

AdamW make_optimizer(const ParameterList& params, const TrainConfig& config) {
  AdamWOptions options;
  options.lr = config.lr;
  options.weight_decay = config.weight_decay;
  return AdamW(tensors_of(params), options);
}

void require_finite(double value, const std::string& module) {
  if (!std::isfinite(value)) throw NumericError("non-finite loss in " + module);
}

// Batches of sample indices for one epoch, in a seeded order.
std::vector<std::vector<std::size_t>> epoch_batches(std::size_t n, std::size_t batch_size,
                                                    std::uint64_t seed, std::uint64_t stream) {
  Rng rng(derive_seed(seed, stream));
  const auto order = rng.permutation(n);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

}  // namespace

StageResult train_transformer(DadfModel& model, std::span<const Tensor> images,
                              const TrainConfig& config, const TrainHooks& hooks) {
  config.validate();
  if (images.empty()) throw ContractError("no training images");
  model.normalizer() = ImageNormalizer::fit(images);

  std::vector<FeaturePyramid> priors;
  priors.reserve(images.size());
  for (const Tensor& img : images) priors.push_back(model.prior(img));

  DadfNet& net = model.net();
  const ParameterList params = net.transformer_parameters();
  AdamW optimizer = make_optimizer(params, config);
  StageResult result{{}, names_of(params)};
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.stage1_epochs; ++epoch) {
    double sum_self = 0, sum_mem = 0;
    for (const auto& batch : epoch_batches(priors.size(), config.batch_size, config.seed, epoch)) {
      Tensor loss;
      for (std::size_t idx : batch) {
        const Reconstruction rec = net.reconstruct(priors[idx]);
        const StageLoss parts = total_loss(TrainStage::kTransformer, priors[idx], rec.self_rec,
                                           rec.memory_rec, {}, {});
        sum_self += parts.self_part.item();
        sum_mem += parts.memory_part.item();
        loss = loss.defined() ? add(loss, parts.total) : parts.total;
      }
      loss = scale(loss, Real(1) / static_cast<Real>(batch.size()));
      require_finite(loss.item(), "transformer reconstruction loss");
      optimizer.zero_grad();
      backward(loss);
      optimizer.step();
      if (hooks.on_step) hooks.on_step(++step, loss.item());
    }
    EpochLog log{TrainStage::kTransformer, epoch, sum_self / static_cast<double>(priors.size()),
                 sum_mem / static_cast<double>(priors.size()), 0.0};
    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
  }
  optimizer.zero_grad();
  model.transformer_trained = true;
  return result;
}

std::vector<Tensor> frozen_joint_features(const DadfModel& model, const Tensor& raw_image) {
  NoGradGuard guard;
  const FeaturePyramid prior = model.prior(raw_image);
  return model.net().joint(prior, model.net().reconstruct(prior));
}

StageResult fit_flows(std::vector<FlowStack>& stacks, std::span<const std::vector<Tensor>> samples,
                      const TrainConfig& config, const TrainHooks& hooks,
                      const std::string& name_prefix) {
  config.validate();
  if (samples.empty()) throw ContractError("no flow training samples");
  ParameterList params;
  for (std::size_t i = 0; i < stacks.size(); ++i) {
    stacks[i].collect(params, name_prefix + std::to_string(i));
  }
  AdamW optimizer = make_optimizer(params, config);
  StageResult result{{}, names_of(params)};
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.stage2_epochs; ++epoch) {
    double sum_nll = 0;
    for (const auto& batch :
         epoch_batches(samples.size(), config.batch_size, config.seed, 10000 + epoch)) {
      std::vector<std::vector<Tensor>> chosen;
      for (std::size_t idx : batch) chosen.push_back(samples[idx]);
      const Tensor loss = loss_flow(chosen, stacks);
      require_finite(loss.item(), "flow likelihood loss");
      sum_nll += loss.item() * static_cast<double>(batch.size());
      optimizer.zero_grad();
      backward(loss);
      optimizer.step();
      if (hooks.on_step) hooks.on_step(++step, loss.item());
    }
    EpochLog log{TrainStage::kFlow, epoch, 0.0, 0.0, sum_nll / static_cast<double>(samples.size())};
    result.epochs.push_back(log);
    if (hooks.on_epoch) hooks.on_epoch(log);
  }
  optimizer.zero_grad();
  return result;
}

StageResult train_flow(DadfModel& model, std::span<const Tensor> images, const TrainConfig& config,
                       const TrainHooks& hooks) {
  if (!model.transformer_trained) {
    throw ContractError("flow training requires a trained transformer (run the transformer stage first)");
  }
  if (images.empty()) throw ContractError("no training images");
  std::vector<std::vector<Tensor>> samples;
  samples.reserve(images.size());
  for (const Tensor& img : images) samples.push_back(frozen_joint_features(model, img));

  auto& flows = model.net().flows();
  for (std::size_t i = 0; i < flows.size(); ++i) {
    std::vector<Tensor> per_scale;
    for (const auto& s : samples) per_scale.push_back(s[i]);
    flows[i].fit_standardization(per_scale);
  }
  StageResult result = fit_flows(flows, samples, config, hooks);
  model.flow_trained = true;
  return result;
}

DADF_NAMESPACE_END
