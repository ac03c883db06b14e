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

#include "dadf/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

DADF_NAMESPACE_BEGIN

std::string to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::kLikelihood: return "likelihood";
    case ScoreMode::kLatentNorm: return "latent_norm";
    case ScoreMode::kReconSelf: return "recon_self";
    case ScoreMode::kReconMemory: return "recon_mem";
    case ScoreMode::kReconFused: return "recon_fused";
  }
  return "?";
}

ScoreMode parse_score_mode(const std::string& text) {
  for (ScoreMode m : {ScoreMode::kLikelihood, ScoreMode::kLatentNorm, ScoreMode::kReconSelf,
                      ScoreMode::kReconMemory, ScoreMode::kReconFused}) {
    if (to_string(m) == text) return m;
  }
  throw ContractError("unknown scoring mode '" + text +
                      "' (expected likelihood, latent_norm, recon_self, recon_mem or recon_fused)");
}

std::string to_string(Interpolation interpolation) {
  return interpolation == Interpolation::kMap ? "map" : "field";
}

Interpolation parse_interpolation(const std::string& text) {
  if (text == "map") return Interpolation::kMap;
  if (text == "field") return Interpolation::kField;
  throw ContractError("unknown interpolation '" + text + "' (expected map or field)");
}

ImageAnalysis analyze(const Tensor& raw_image, const DadfModel& model) {
  NoGradGuard guard;
  ImageAnalysis out;
  out.out_height = raw_image.dim(0);
  out.out_width = raw_image.dim(1);
  out.prior = model.prior(raw_image);
  out.reconstruction = model.net().reconstruct(out.prior);
  out.flow_trained = model.flow_trained;
  const auto joint = model.net().joint(out.prior, out.reconstruction);
  for (std::size_t i = 0; i < joint.size(); ++i) {
    out.flow_stats.push_back(per_location_stats(joint[i], model.net().flows()[i]));
  }
  return out;
}

namespace {

std::vector<Real> squared_error(const Tensor& a, const Tensor& b) {
  const std::size_t c = a.dim(2);
  const auto av = a.data(), bv = b.data();
  std::vector<Real> out(a.numel() / c, Real(0));
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t k = 0; k < c; ++k) {
      const Real d = av[p * c + k] - bv[p * c + k];
      out[p] += d * d;
    }
  }
  return out;
}

}  // namespace

std::vector<Real> scale_map(const ImageAnalysis& analysis, std::size_t scale,
                            const ScoringOptions& options) {
  switch (options.mode) {
    case ScoreMode::kLikelihood:
    case ScoreMode::kLatentNorm: {
      if (options.mode == ScoreMode::kLikelihood && !analysis.flow_trained) {
        throw ContractError("likelihood scoring requires a trained flow");
      }
      const LocationStats& stats = analysis.flow_stats.at(scale);
      std::vector<Real> out(stats.z_norm_sq.size());
      if (options.mode == ScoreMode::kLatentNorm) return stats.z_norm_sq;
      for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = Real(0.5) * stats.z_norm_sq[p] - stats.local_logdet[p];
      }
      return out;
    }
    case ScoreMode::kReconSelf:
      return squared_error(analysis.prior.maps[scale], analysis.reconstruction.self_rec.maps[scale]);
    case ScoreMode::kReconMemory:
      return squared_error(analysis.prior.maps[scale], analysis.reconstruction.memory_rec.maps[scale]);
    case ScoreMode::kReconFused: {
      std::vector<Real> self_err =
          squared_error(analysis.prior.maps[scale], analysis.reconstruction.self_rec.maps[scale]);
      const std::vector<Real> mem_err =
          squared_error(analysis.prior.maps[scale], analysis.reconstruction.memory_rec.maps[scale]);
      const Real w = options.fuse_weight;
      for (std::size_t p = 0; p < self_err.size(); ++p) {
        self_err[p] = w * self_err[p] + (Real(1) - w) * mem_err[p];
      }
      return self_err;
    }
  }
  throw ContractError("invalid scoring mode");
}

namespace {

std::vector<Real> norm_sq(const std::vector<Real>& field, std::size_t channels) {
  std::vector<Real> out(field.size() / channels, Real(0));
  for (std::size_t p = 0; p < out.size(); ++p) {
    for (std::size_t k = 0; k < channels; ++k) out[p] += field[p * channels + k] * field[p * channels + k];
  }
  return out;
}

std::vector<Real> upsampled_error(const Tensor& prior, const Tensor& rec, std::size_t out_height,
                                  std::size_t out_width) {
  const auto pv = prior.data(), rv = rec.data();
  std::vector<Real> diff(pv.size());
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] = pv[i] - rv[i];
  return norm_sq(bilinear_upsample(diff, prior.dim(0), prior.dim(1), prior.dim(2), out_height, out_width),
                 prior.dim(2));
}

}  // namespace

std::vector<Real> upsampled_scale_map(const ImageAnalysis& analysis, std::size_t scale,
                                      const ScoringOptions& options) {
  const std::size_t oh = analysis.out_height, ow = analysis.out_width;
  if (options.interpolation == Interpolation::kMap) {
    const Tensor& ref = analysis.prior.maps.at(scale);
    return bilinear_upsample(scale_map(analysis, scale, options), ref.dim(0), ref.dim(1), oh, ow);
  }
  const Tensor& prior = analysis.prior.maps.at(scale);
  switch (options.mode) {
    case ScoreMode::kLikelihood:
    case ScoreMode::kLatentNorm: {
      if (options.mode == ScoreMode::kLikelihood && !analysis.flow_trained) {
        throw ContractError("likelihood scoring requires a trained flow");
      }
      const LocationStats& stats = analysis.flow_stats.at(scale);
      const Tensor& z = stats.z;
      std::vector<Real> out =
          norm_sq(bilinear_upsample(z.data(), z.dim(0), z.dim(1), z.dim(2), oh, ow), z.dim(2));
      if (options.mode == ScoreMode::kLatentNorm) return out;
      const std::vector<Real> logdet =
          bilinear_upsample(stats.local_logdet, stats.height, stats.width, oh, ow);
      for (std::size_t p = 0; p < out.size(); ++p) out[p] = Real(0.5) * out[p] - logdet[p];
      return out;
    }
    case ScoreMode::kReconSelf:
      return upsampled_error(prior, analysis.reconstruction.self_rec.maps[scale], oh, ow);
    case ScoreMode::kReconMemory:
      return upsampled_error(prior, analysis.reconstruction.memory_rec.maps[scale], oh, ow);
    case ScoreMode::kReconFused: {
      std::vector<Real> out = upsampled_error(prior, analysis.reconstruction.self_rec.maps[scale], oh, ow);
      const std::vector<Real> mem =
          upsampled_error(prior, analysis.reconstruction.memory_rec.maps[scale], oh, ow);
      const Real w = options.fuse_weight;
      for (std::size_t p = 0; p < out.size(); ++p) out[p] = w * out[p] + (Real(1) - w) * mem[p];
      return out;
    }
  }
  throw ContractError("invalid scoring mode");
}

AnomalyMap anomaly_map(const ImageAnalysis& analysis, const ScoringOptions& options) {
  AnomalyMap out;
  out.height = analysis.out_height;
  out.width = analysis.out_width;
  out.mode = options.mode;
  out.scores.assign(out.height * out.width, Real(0));
  for (std::size_t i = 0; i < analysis.prior.scales(); ++i) {
    std::vector<Real> up = upsampled_scale_map(analysis, i, options);
    for (std::size_t p = 0; p < up.size(); ++p) out.scores[p] += up[p];
    out.per_scale.push_back(std::move(up));
  }
  for (Real v : out.scores) {
    if (!std::isfinite(v)) throw NumericError("non-finite anomaly score (" + to_string(options.mode) + ")");
  }
  out.image_score = image_score(out.scores, out.height, out.width, options);
  return out;
}

AnomalyMap anomaly_map(const Tensor& raw_image, const DadfModel& model,
                       const ScoringOptions& options) {
  if (options.mode == ScoreMode::kLikelihood && !model.flow_trained) {
    throw ContractError("likelihood scoring requires a trained flow");
  }
  return anomaly_map(analyze(raw_image, model), options);
}

Real image_score(const std::vector<Real>& map, std::size_t height, std::size_t width,
                 const ScoringOptions& options) {
  if (map.empty()) throw ContractError("image score of an empty map");
  if (!options.smoothing) return *std::max_element(map.begin(), map.end());
  const std::vector<Real> smooth = gaussian_smooth(map, height, width, options.sigma);
  return *std::max_element(smooth.begin(), smooth.end());
}

std::vector<Real> bilinear_upsample(std::span<const Real> src, std::size_t height, std::size_t width,
                                    std::size_t channels, std::size_t out_height,
                                    std::size_t out_width) {
  if (src.size() != height * width * channels) throw ShapeError("bilinear_upsample: size mismatch");
  auto axis = [](std::size_t dst, std::size_t in, std::size_t out) {
    double s = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto lo = static_cast<std::size_t>(std::floor(s));
    const std::size_t hi = std::min(lo + 1, in - 1);
    return std::tuple{lo, hi, static_cast<Real>(s - static_cast<double>(lo))};
  };
  std::vector<Real> out(out_height * out_width * channels);
  for (std::size_t y = 0; y < out_height; ++y) {
    const auto [y0, y1, fy] = axis(y, height, out_height);
    for (std::size_t x = 0; x < out_width; ++x) {
      const auto [x0, x1, fx] = axis(x, width, out_width);
      const Real* a = src.data() + (y0 * width + x0) * channels;
      const Real* b = src.data() + (y0 * width + x1) * channels;
      const Real* c = src.data() + (y1 * width + x0) * channels;
      const Real* d = src.data() + (y1 * width + x1) * channels;
      Real* o = out.data() + (y * out_width + x) * channels;
      for (std::size_t k = 0; k < channels; ++k) {
        const Real top = a[k] * (1 - fx) + b[k] * fx;
        const Real bottom = c[k] * (1 - fx) + d[k] * fx;
        o[k] = top * (1 - fy) + bottom * fy;
      }
    }
  }
  return out;
}

std::vector<Real> bilinear_upsample(const std::vector<Real>& src, std::size_t height,
                                    std::size_t width, std::size_t out_height,
                                    std::size_t out_width) {
  return bilinear_upsample(std::span<const Real>(src), height, width, 1, out_height, out_width);
}

std::vector<Real> gaussian_smooth(const std::vector<Real>& src, std::size_t height,
                                  std::size_t width, Real sigma) {
  if (src.size() != height * width) throw ShapeError("gaussian_smooth: size mismatch");
  if (!(sigma > 0)) throw ContractError("gaussian_smooth: sigma must be positive");
  const auto radius = static_cast<std::ptrdiff_t>(std::ceil(3 * sigma));
  std::vector<Real> kernel(static_cast<std::size_t>(2 * radius + 1));
  Real total = 0;
  for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
    const Real v = std::exp(-Real(0.5) * static_cast<Real>(k * k) / (sigma * sigma));
    kernel[static_cast<std::size_t>(k + radius)] = v;
    total += v;
  }
  for (Real& v : kernel) v /= total;
  const auto h = static_cast<std::ptrdiff_t>(height), w = static_cast<std::ptrdiff_t>(width);
  auto clampi = [](std::ptrdiff_t v, std::ptrdiff_t n) { return std::clamp<std::ptrdiff_t>(v, 0, n - 1); };
  std::vector<Real> tmp(src.size()), out(src.size());
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      Real acc = 0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * src[static_cast<std::size_t>(y * w + clampi(x + k, w))];
      }
      tmp[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  for (std::ptrdiff_t y = 0; y < h; ++y) {
    for (std::ptrdiff_t x = 0; x < w; ++x) {
      Real acc = 0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        acc += kernel[static_cast<std::size_t>(k + radius)] * tmp[static_cast<std::size_t>(clampi(y + k, h) * w + x)];
      }
      out[static_cast<std::size_t>(y * w + x)] = acc;
    }
  }
  return out;
}

DADF_NAMESPACE_END
