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

#include "dadf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>

DADF_NAMESPACE_BEGIN

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::uint8_t kDtypeF32 = 0;
constexpr std::uint8_t kDtypeF64 = 1;
constexpr std::uint8_t kNativeDtype = kRealIsDouble ? kDtypeF64 : kDtypeF32;

class Writer {
 public:
  template <typename T>
  void put(T value) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    T value;
    std::memcpy(&value, take(sizeof(T), what), sizeof(T));
    return value;
  }
  const std::uint8_t* take(std::size_t size, const char* what) {
    if (bytes_.size() - pos_ < size) {
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += size;
    return p;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

Tensor array_tensor(const std::array<Real, 3>& values) {
  return Tensor::from({3}, {values[0], values[1], values[2]});
}

}  // namespace

ParameterList checkpoint_entries(const DadfModel& model) {
  ParameterList out = model.net().parameters();
  out.push_back({"normalizer.mean", array_tensor(model.normalizer().mean)});
  out.push_back({"normalizer.std", array_tensor(model.normalizer().stddev)});
  const auto& flows = model.net().flows();
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string prefix = "flow" + std::to_string(i) + ".standardize.";
    out.push_back({prefix + "mean", flows[i].standardize_mean()});
    out.push_back({prefix + "inv_std", flows[i].standardize_inv_std()});
  }
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const DadfModel& model, const RunConfig& run) {
  RunConfig echo = run;
  echo.model = model.config();
  const ParameterList entries = checkpoint_entries(model);
  Writer w;
  w.put_bytes("DADF", 4);
  w.put<std::uint32_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(entries.size()));
  for (const NamedTensor& e : entries) {
    w.put<std::uint16_t>(static_cast<std::uint16_t>(e.name.size()));
    w.put_bytes(e.name.data(), e.name.size());
    w.put<std::uint8_t>(kNativeDtype);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.dims()) w.put<std::uint64_t>(d);
    w.put_bytes(e.tensor.data().data(), e.tensor.numel() * sizeof(Real));
  }
  const std::string text =
      serialize(echo, ConfigState{model.transformer_trained, model.flow_trained});
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text.data(), text.size());
  return w.take();
}

void save_checkpoint(const std::filesystem::path& path, const DadfModel& model,
                     const RunConfig& run) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(model, run);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(path.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(path.string() + ": write failed");
}

LoadedCheckpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  if (std::memcmp(r.take(4, "magic"), "DADF", 4) != 0) throw FormatError("not a checkpoint (bad magic)");
  const auto version = r.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const auto count = r.get<std::uint32_t>("entry count");
  std::map<std::string, Tensor> stored;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name_len = r.get<std::uint16_t>("entry name length");
    const auto* name_ptr = r.take(name_len, "entry name");
    std::string name(reinterpret_cast<const char*>(name_ptr), name_len);
    const auto dtype = r.get<std::uint8_t>("entry dtype");
    if (dtype != kDtypeF32 && dtype != kDtypeF64) {
      throw FormatError("checkpoint entry '" + name + "' has unknown dtype " + std::to_string(dtype));
    }
    const auto rank = r.get<std::uint8_t>("entry rank");
    Shape dims(rank);
    std::size_t numel = 1;
    for (auto& d : dims) {
      d = static_cast<std::size_t>(r.get<std::uint64_t>("entry dims"));
      if (d != 0 && numel > (std::size_t{1} << 40) / d) {
        throw FormatError("checkpoint entry '" + name + "' is implausibly large");
      }
      numel *= d;
    }
    std::vector<Real> values(numel);
    if (dtype == kDtypeF32) {
      const auto* p = r.take(numel * sizeof(float), "entry data");
      for (std::size_t i = 0; i < numel; ++i) {
        float v;
        std::memcpy(&v, p + i * sizeof(float), sizeof(float));
        values[i] = static_cast<Real>(v);
      }
    } else {
      const auto* p = r.take(numel * sizeof(double), "entry data");
      for (std::size_t i = 0; i < numel; ++i) {
        double v;
        std::memcpy(&v, p + i * sizeof(double), sizeof(double));
        values[i] = static_cast<Real>(v);
      }
    }
    if (!stored.emplace(name, Tensor::from(std::move(dims), std::move(values))).second) {
      throw FormatError("checkpoint entry '" + name + "' appears twice");
    }
  }
  const auto text_len = r.get<std::uint32_t>("config length");
  const auto* text_ptr = r.take(text_len, "config text");
  if (!r.done()) throw FormatError("checkpoint has trailing bytes");

  LoadedCheckpoint out;
  ConfigState state;
  try {
    out.config = parse_run_config(std::string(reinterpret_cast<const char*>(text_ptr), text_len), &state);
  } catch (const ContractError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  auto model = std::make_unique<DadfModel>(out.config.model);
  const ParameterList expected = checkpoint_entries(*model);
  if (expected.size() != stored.size()) {
    throw FormatError("checkpoint holds " + std::to_string(stored.size()) + " entries, model expects " +
                      std::to_string(expected.size()));
  }
  for (const NamedTensor& e : expected) {
    const auto it = stored.find(e.name);
    if (it == stored.end()) throw FormatError("checkpoint lacks entry '" + e.name + "'");
    if (it->second.dims() != e.tensor.dims()) {
      throw FormatError("checkpoint entry '" + e.name + "' has shape " + shape_string(it->second.dims()) +
                        ", model expects " + shape_string(e.tensor.dims()));
    }
  }
  for (const NamedTensor& e : model->net().parameters()) {
    const auto src = stored.at(e.name).data();
    Tensor target = e.tensor;
    std::copy(src.begin(), src.end(), target.mutable_data().begin());
  }
  auto as_array = [&](const std::string& name) {
    const auto v = stored.at(name).data();
    return std::array<Real, 3>{v[0], v[1], v[2]};
  };
  model->normalizer().mean = as_array("normalizer.mean");
  model->normalizer().stddev = as_array("normalizer.std");
  auto& flows = model->net().flows();
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string prefix = "flow" + std::to_string(i) + ".standardize.";
    flows[i].set_standardization(stored.at(prefix + "mean"), stored.at(prefix + "inv_std"));
  }
  model->transformer_trained = state.transformer_trained;
  model->flow_trained = state.flow_trained;
  out.model = std::move(model);
  return out;
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open checkpoint");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

DADF_NAMESPACE_END
