// Copyright (c) 2026 The crowdtag Authors. All Rights Reserved.
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

#include "crowdtag/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <iomanip>
#include <memory>
#include "json.hpp"
#include <sstream>

#include "crowdtag/error.hpp"

namespace crowdtag {

using nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string registry_hash(const AnnotatorRegistry& registry) {
  std::string joined;
  for (const auto& id : registry.ids()) {
    joined += id;
    joined += '\n';
  }
  return sha256_hex(joined);
}

namespace {

ordered_json config_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size},       {"model_dim", c.model_dim},
          {"layers", c.layers},               {"heads", c.heads},
          {"ff_dim", c.ff_dim},               {"adapter_dim", c.adapter_dim},
          {"annotator_dim", c.annotator_dim}, {"pgn_layers", c.pgn_layers},
          {"lstm_hidden", c.lstm_hidden},     {"mlp_hidden", c.mlp_hidden},
          {"tag_count", c.tag_count},         {"dropout", c.dropout},
          {"max_len", c.max_len},             {"annotator_count", c.annotator_count},
          {"annotator_init_std", c.annotator_init_std}};
}

ModelConfig config_from_json(const ordered_json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.model_dim = j.at("model_dim").get<std::size_t>();
  c.layers = j.at("layers").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff_dim = j.at("ff_dim").get<std::size_t>();
  c.adapter_dim = j.at("adapter_dim").get<std::size_t>();
  c.annotator_dim = j.at("annotator_dim").get<std::size_t>();
  c.pgn_layers = j.at("pgn_layers").get<std::size_t>();
  c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
  c.mlp_hidden = j.at("mlp_hidden").get<std::size_t>();
  c.tag_count = j.at("tag_count").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.annotator_count = j.at("annotator_count").get<std::size_t>();
  c.annotator_init_std = j.at("annotator_init_std").get<double>();
  return c;
}

}  // namespace

void write_checkpoint(std::ostream& out, const TaggerModel& model, const std::string& mode) {
  ordered_json params = ordered_json::array();
  for (const Parameter& p : model.parameters()) {
    params.push_back({{"name", p.name},
                      {"shape", p.value.shape()},
                      {"values", std::vector<double>(p.value.values().begin(),
                                                     p.value.values().end())}});
  }
  ordered_json j = {{"format", kCheckpointFormat},
                    {"version", kCheckpointVersion},
                    {"mode", mode},
                    {"config", config_json(model.config())},
                    {"registry", model.registry().ids()},
                    {"registry_sha256", registry_hash(model.registry())},
                    {"vocab", model.vocab().tokens()},
                    {"parameters", std::move(params)}};
  out << j.dump() << '\n';
}

void save_checkpoint(const std::filesystem::path& path, const TaggerModel& model,
                     const std::string& mode) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_checkpoint(out, model, mode);
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != kCheckpointFormat) throw FormatError("not a crowdtag checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion)
      throw FormatError("unsupported checkpoint version " + j.at("version").dump());
    AnnotatorRegistry registry(j.at("registry").get<std::vector<std::string>>());
    if (j.at("registry_sha256").get<std::string>() != registry_hash(registry))
      throw FormatError("checkpoint registry hash mismatch");
    Vocabulary vocab(j.at("vocab").get<std::vector<std::string>>());
    ModelConfig config = config_from_json(j.at("config"));
    if (config.vocab_size != vocab.size() || config.annotator_count != registry.size())
      throw FormatError("checkpoint config disagrees with its vocabulary or registry");
    Checkpoint ck{j.at("mode").get<std::string>(),
                  TaggerModel(config, std::move(vocab), std::move(registry), 0)};
    ParameterSet& params = ck.model.parameters();
    const auto& stored = j.at("parameters");
    if (stored.size() != params.size())
      throw FormatError("checkpoint holds " + std::to_string(stored.size()) +
                        " parameters, config implies " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
      const auto& s = stored[i];
      Parameter& p = params[i];
      if (s.at("name").get<std::string>() != p.name)
        throw FormatError("checkpoint parameter " + std::to_string(i) + " is '" +
                          s.at("name").get<std::string>() + "', expected '" + p.name + "'");
      Shape shape = s.at("shape").get<Shape>();
      if (shape != p.value.shape())
        throw FormatError("parameter '" + p.name + "' has shape " + shape_string(shape) +
                          ", config implies " + shape_string(p.value.shape()));
      auto values = s.at("values").get<std::vector<double>>();
      if (values.size() != p.value.size())
        throw FormatError("parameter '" + p.name + "' has the wrong number of values");
      p.value = Tensor(shape, std::move(values));
    }
    return ck;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config invalid: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return read_checkpoint(in);
}

}  // namespace crowdtag
