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

#include "dadf/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

DADF_NAMESPACE_BEGIN

namespace {

namespace pt = boost::property_tree;

struct Field {
  std::string section;
  std::string key;
  std::string help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;

};

[[noreturn]] void bad_value(const std::string& what, const std::string& value) {
  throw ContractError("config: invalid value '" + value + "' for " + what);
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  T value{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    bad_value(what, text);
  }
  return value;
}

template <typename T>
std::string format_number(T value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t") - first + 1);
}

std::array<std::size_t, 3> parse_triple(const std::string& text, const std::string& what) {
  std::array<std::size_t, 3> out{};
  std::stringstream ss(text);
  std::size_t n = 0;
  for (std::string item; std::getline(ss, item, ',');) {
    if (n == 3) bad_value(what, text);
    out[n++] = parse_number<std::size_t>(trim(item), what);
  }
  if (n != 3) bad_value(what, text);
  return out;
}

std::string format_triple(const std::array<std::size_t, 3>& v) {
  return std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]);
}

bool parse_bool(const std::string& text, const std::string& what) {
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  bad_value(what, text);
}

// `ref` maps a config to the referenced member; reads go through a
// const_cast and never write.
template <typename Ref>
Field number(std::string section, std::string key, std::string help, Ref ref) {
  const std::string what = section + "." + key;
  return {section, key, help,
          [ref](const RunConfig& c) { return format_number(ref(const_cast<RunConfig&>(c))); },
          [ref, what](RunConfig& c, const std::string& v) {
            auto& slot = ref(c);
            slot = parse_number<std::remove_reference_t<decltype(slot)>>(v, what);
          }};
}

template <typename Ref>
Field triple(std::string section, std::string key, std::string help, Ref ref) {
  const std::string what = section + "." + key;
  return {section, key, help,
          [ref](const RunConfig& c) { return format_triple(ref(const_cast<RunConfig&>(c))); },
          [ref, what](RunConfig& c, const std::string& v) { ref(c) = parse_triple(v, what); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    f.push_back(number("encoder", "in_size", "input image side length (multiple of 16)",
                       [](RunConfig& c) -> auto& { return c.model.encoder.in_size; }));
    f.push_back(triple("encoder", "stage_channels", "channels of the three frozen stages",
                       [](RunConfig& c) -> auto& { return c.model.encoder.stage_channels; }));
    f.push_back(number("encoder", "seed", "seed of the frozen random encoder weights",
                       [](RunConfig& c) -> auto& { return c.model.encoder.seed; }));
    f.push_back(triple("patch", "patch_sizes", "patch side per scale (equal token counts)",
                       [](RunConfig& c) -> auto& { return c.model.patch.patch_sizes; }));
    f.push_back({"patch", "token_dim", "transformer token width (multiple of 4 and of heads)",
                 [](const RunConfig& c) { return format_number(c.model.patch.token_dim); },
                 [](RunConfig& c, const std::string& v) {
                   c.model.patch.token_dim = parse_number<std::size_t>(v, "patch.token_dim");
                   c.model.attention.token_dim = c.model.patch.token_dim;
                 }});
    f.push_back(number("attention", "depth", "transformer blocks per branch",
                       [](RunConfig& c) -> auto& { return c.model.attention.depth; }));
    f.push_back(number("attention", "heads", "attention heads",
                       [](RunConfig& c) -> auto& { return c.model.attention.heads; }));
    f.push_back(number("attention", "mlp_ratio", "MLP hidden width as a multiple of token_dim",
                       [](RunConfig& c) -> auto& { return c.model.attention.mlp_ratio; }));
    f.push_back({"attention", "query_source", "memorial queries: stream or input",
                 [](const RunConfig& c) {
                   return std::string(c.model.attention.memorial_query_source == QuerySource::kStream
                                          ? "stream"
                                          : "input");
                 },
                 [](RunConfig& c, const std::string& v) {
                   if (v == "stream") {
                     c.model.attention.memorial_query_source = QuerySource::kStream;
                   } else if (v == "input") {
                     c.model.attention.memorial_query_source = QuerySource::kInput;
                   } else {
                     bad_value("attention.query_source", v);
                   }
                 }});
    f.push_back(number("flow", "n_blocks", "coupling layers per scale",
                       [](RunConfig& c) -> auto& { return c.model.flow.n_blocks; }));
    f.push_back(number("flow", "clamp", "soft clamp of coupling log-scales",
                       [](RunConfig& c) -> auto& { return c.model.flow.clamp; }));
    f.push_back(number("train", "lr", "AdamW learning rate",
                       [](RunConfig& c) -> auto& { return c.train.lr; }));
    f.push_back(number("train", "weight_decay", "AdamW decoupled weight decay",
                       [](RunConfig& c) -> auto& { return c.train.weight_decay; }));
    f.push_back(number("train", "batch_size", "images per optimizer step",
                       [](RunConfig& c) -> auto& { return c.train.batch_size; }));
    f.push_back(number("train", "stage1_epochs", "reconstruction-stage epochs",
                       [](RunConfig& c) -> auto& { return c.train.stage1_epochs; }));
    f.push_back(number("train", "stage2_epochs", "likelihood-stage epochs",
                       [](RunConfig& c) -> auto& { return c.train.stage2_epochs; }));
    f.push_back({"train", "seed", "seed of learnable initialization and data order",
                 [](const RunConfig& c) { return format_number(c.train.seed); },
                 [](RunConfig& c, const std::string& v) {
                   c.train.seed = parse_number<std::uint64_t>(v, "train.seed");
                   c.model.seed = c.train.seed;
                 }});
    f.push_back({"train", "flow_variant", "flow input: P, P-S, P-M or D",
                 [](const RunConfig& c) { return to_string(c.model.flow.variant); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.model.flow.variant = parse_flow_variant(v);
                   } catch (const ContractError&) {
                     bad_value("train.flow_variant", v);
                   }
                 }});
    f.push_back({"score", "mode",
                 "likelihood, latent_norm, recon_self, recon_mem or recon_fused",
                 [](const RunConfig& c) { return to_string(c.scoring.mode); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.scoring.mode = parse_score_mode(v);
                   } catch (const ContractError&) {
                     bad_value("score.mode", v);
                   }
                 }});
    f.push_back({"score", "interpolation", "per-scale upsampling of the scalar map or the vector field",
                 [](const RunConfig& c) { return to_string(c.scoring.interpolation); },
                 [](RunConfig& c, const std::string& v) {
                   try {
                     c.scoring.interpolation = parse_interpolation(v);
                   } catch (const ContractError&) {
                     bad_value("score.interpolation", v);
                   }
                 }});
    f.push_back(number("score", "fuse_weight", "weight of the self branch in recon_fused",
                       [](RunConfig& c) -> auto& { return c.scoring.fuse_weight; }));
    f.push_back({"score", "smoothing", "Gaussian smoothing before the image max (0 or 1)",
                 [](const RunConfig& c) { return std::string(c.scoring.smoothing ? "1" : "0"); },
                 [](RunConfig& c, const std::string& v) {
                   c.scoring.smoothing = parse_bool(v, "score.smoothing");
                 }});
    f.push_back(number("score", "sigma", "smoothing standard deviation in pixels",
                       [](RunConfig& c) -> auto& { return c.scoring.sigma; }));
    return f;
  }();
  return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
  for (const Field& f : fields()) {
    if (f.section == section && f.key == key) return &f;
  }
  return nullptr;
}

std::string render(const RunConfig& config, bool with_help) {
  std::ostringstream out;
  std::string section;
  for (const Field& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << "\n";
      section = f.section;
      out << "[" << section << "]\n";
    }
    if (with_help) out << "; " << f.help << "\n";
    out << f.key << " = " << f.get(config) << "\n";
  }
  return out.str();
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  train.validate();
  if (!(scoring.fuse_weight >= 0 && scoring.fuse_weight <= 1)) {
    throw ContractError("config: score.fuse_weight must lie in [0, 1]");
  }
  if (!(scoring.sigma > 0)) throw ContractError("config: score.sigma must be positive");
  if (!(model.flow.clamp > 0)) throw ContractError("config: flow.clamp must be positive");
  if (model.flow.n_blocks == 0) throw ContractError("config: flow.n_blocks must be positive");
}

void apply_config_text(RunConfig& config, const std::string& text, ConfigState* state) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ContractError(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) {
      throw ContractError("config: key '" + section + "' outside any section");
    }
    if (section == "state") {
      if (state == nullptr) throw ContractError("config: unknown section [state]");
      for (const auto& [key, value] : body) {
        const std::string v = trim(value.data());
        if (key == "transformer_trained") {
          state->transformer_trained = parse_bool(v, "state.transformer_trained");
        } else if (key == "flow_trained") {
          state->flow_trained = parse_bool(v, "state.flow_trained");
        } else {
          throw ContractError("config: unknown key state." + key);
        }
      }
      continue;
    }
    bool known_section = false;
    for (const Field& f : fields()) known_section = known_section || f.section == section;
    if (!known_section) throw ContractError("config: unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const Field* f = find_field(section, key);
      if (f == nullptr) throw ContractError("config: unknown key " + section + "." + key);
      f->set(config, trim(value.data()));
    }
  }
}

RunConfig parse_run_config(const std::string& text, ConfigState* state) {
  RunConfig config;
  apply_config_text(config, text, state);
  config.validate();
  return config;
}

std::string read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(path.string() + ": cannot open config");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_config_file(path));
}

std::string serialize(const RunConfig& config) { return render(config, false); }

std::string serialize(const RunConfig& config, const ConfigState& state) {
  return render(config, false) + "\n[state]\ntransformer_trained = " +
         (state.transformer_trained ? "1" : "0") + "\nflow_trained = " +
         (state.flow_trained ? "1" : "0") + "\n";
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ContractError("config: override must look like section.key=value, got '" + assignment + "'");
  }
  const std::string section = trim(assignment.substr(0, dot));
  const std::string key = trim(assignment.substr(dot + 1, eq - dot - 1));
  const Field* f = find_field(section, key);
  if (f == nullptr) throw ContractError("config: unknown key " + section + "." + key);
  f->set(config, trim(assignment.substr(eq + 1)));
}

std::string describe_defaults() { return render(RunConfig{}, true); }

DADF_NAMESPACE_END
