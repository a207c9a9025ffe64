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

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "crowdtag/annotation.hpp"
#include "crowdtag/autodiff.hpp"
#include "crowdtag/corpus.hpp"
#include "crowdtag/parameters.hpp"
#include "crowdtag/tags.hpp"

namespace crowdtag {

struct ModelConfig {
  std::size_t vocab_size = 1;  // including the unknown-token row 0
  std::size_t model_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 128;
  std::size_t adapter_dim = 16;
  std::size_t annotator_dim = 8;
  // Top layers whose adapters are generated from the annotator embedding.
  std::size_t pgn_layers = 1;
  std::size_t lstm_hidden = 32;  // per direction
  std::size_t mlp_hidden = 64;
  std::size_t tag_count = kTagCount;
  double dropout = 0.2;
  std::size_t max_len = 128;
  std::size_t annotator_count = 0;
  // Standard deviation of the truncated-normal annotator embedding init.
  // Generated adapter weights scale with |e|, so a small value here leaves
  // annotator conditioning stuck near zero for many epochs.
  double annotator_init_std = 1.0;

  bool operator==(const ModelConfig&) const = default;
};

// Throws ConfigError on zero sizes, pgn_layers > layers, heads not dividing
// model_dim, or a tag count other than 5.
void validate(const ModelConfig& config);

// Token strings to dense ids; id 0 is reserved for unknown tokens.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr const char* kUnknownToken = "<unk>";

  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);
  // Tokens of every sentence, in order of first appearance.
  static Vocabulary from_corpus(const CrowdCorpus& corpus);

  std::size_t id(const std::string& token) const;
  std::vector<std::size_t> ids(const std::vector<std::string>& tokens) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Concrete adapter weights (row-vector convention):
//   out = GELU(h W_down + b_down) W_up + b_up + h
struct AdapterParams {
  Tensor w_down;  // model_dim x bottleneck
  Tensor b_down;  // bottleneck
  Tensor w_up;    // bottleneck x model_dim
  Tensor b_up;    // model_dim
};

// Generator tensors; the last axis has the annotator embedding's size.
struct PgnTensors {
  Tensor w_down;  // model_dim x bottleneck x d
  Tensor b_down;  // bottleneck x d
  Tensor w_up;    // bottleneck x model_dim x d
  Tensor b_up;    // model_dim x d
};

struct AdapterVars {
  Var w_down, b_down, w_up, b_up;
};
struct PgnVars {
  Var w_down, b_down, w_up, b_up;
};

Var adapter_forward(Var h, const AdapterVars& p);
AdapterVars pgn_generate(const PgnVars& t, Var e);

// Graph-free versions of the two operations above.
Tensor adapter_forward(const Tensor& h, const AdapterParams& p);
AdapterParams pgn_generate(const PgnTensors& t, const Tensor& e);

// Mean of the rows of a non-empty |A| x d table.
Tensor expert_embedding(const Tensor& table);

// Which annotator embedding conditions the PGN adapters.
struct AnnotatorCondition {
  enum class Kind { kNone, kAnnotator, kExpert, kMix, kVector };

  Kind kind = Kind::kNone;
  std::size_t first = 0;
  std::size_t second = 0;
  double first_weight = 1.0;
  double second_weight = 0.0;
  Tensor vector;

  // No annotator: PGN adapters are skipped, which equals a zero embedding.
  static AnnotatorCondition none() { return {}; }
  static AnnotatorCondition annotator(std::size_t index);
  static AnnotatorCondition expert();
  // lambda * e[a] + (1 - lambda) * e[b]. Swapping (a, b, lambda) for
  // (b, a, 1 - lambda) yields bit-identical weights.
  static AnnotatorCondition mix(std::size_t a, std::size_t b, double lambda);
  static AnnotatorCondition embedding(Tensor e);
};

// Interpolation weights (w_a, w_b) for lambda. The weight >= 1/2 is computed
// first and the other one as its exact complement, so that
// mix_weights(1 - lambda) is the swap of mix_weights(lambda).
std::pair<double, double> mix_weights(double lambda);

// Random source for training-time sequential dropout; null disables it.
struct DropoutContext {
  double prob = 0.0;
  std::mt19937_64* rng = nullptr;
};

// Zeroes whole rows of an n x d tensor with probability p and rescales the
// rest by 1/(1-p). Identity when `training` is false or p = 0. Throws
// ConfigError unless 0 <= p < 1.
Var sequential_dropout(Var reps, double p, std::mt19937_64& rng, bool training);

// Embedding + transformer (adapters, PGN adapters on top) + BiLSTM + MLP +
// linear-chain CRF.
class TaggerModel {
 public:
  TaggerModel(ModelConfig config, Vocabulary vocab, AnnotatorRegistry registry,
              std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const AnnotatorRegistry& registry() const { return registry_; }
  ParameterSet& parameters() { return params_; }
  const ParameterSet& parameters() const { return params_; }

  // Graph construction. The returned embedding is empty for kNone.
  std::optional<Var> condition_embedding(ParamBinder& bind,
                                         const AnnotatorCondition& cond) const;
  // n x model_dim. Throws ValidationError for sentences longer than max_len
  // or empty ones.
  Var encode(ParamBinder& bind, const std::vector<std::size_t>& token_ids,
             const std::optional<Var>& e) const;
  // n x tag_count emission scores; dropout applies to the encoder output.
  Var emissions(ParamBinder& bind, Var reps, const DropoutContext& dropout = {}) const;
  Var nll(ParamBinder& bind, Var emissions, const std::vector<Tag>& labels) const;

  // Loss of one (sentence, annotator, labels) instance.
  Var instance_loss(ParamBinder& bind, const std::vector<std::size_t>& token_ids,
                    const AnnotatorCondition& cond, const std::vector<Tag>& labels,
                    const DropoutContext& dropout = {}) const;

  // Inference helpers; no gradients are recorded.
  Tensor encode(const std::vector<std::string>& tokens,
                const AnnotatorCondition& cond) const;
  Tensor emission_scores(const std::vector<std::string>& tokens,
                         const AnnotatorCondition& cond) const;
  std::vector<Tag> predict_tags(const std::vector<std::string>& tokens,
                                const AnnotatorCondition& cond) const;
  std::vector<Span> predict(const std::vector<std::string>& tokens,
                            const AnnotatorCondition& cond) const;

  // Centroid of the annotator embedding table. Throws ConfigError when the
  // model has no annotators.
  Tensor expert_embedding() const;
  const Tensor& annotator_table() const;

  // Parameter ids, exposed for tests and checkpoints.
  struct LayerIds {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
    std::size_t ln1_g, ln1_b, w1, b1, w2, b2, ln2_g, ln2_b;
    // Per adapter site (0 = after attention, 1 = after feed-forward): four
    // adapter ids, or four generator ids when `generated`.
    std::size_t site[2][4];
    bool generated;
  };
  const std::vector<LayerIds>& layer_ids() const { return layers_; }
  std::size_t output_weight_id() const { return mlp_w2_; }
  std::size_t output_bias_id() const { return mlp_b2_; }

 private:
  void init(std::uint64_t seed);

  ModelConfig config_;
  Vocabulary vocab_;
  AnnotatorRegistry registry_;
  ParameterSet params_;

  std::size_t tok_emb_, pos_emb_, emb_ln_g_, emb_ln_b_;
  std::vector<LayerIds> layers_;
  std::optional<std::size_t> annotator_table_;
  std::size_t lstm_f_[3], lstm_b_[3];
  std::size_t mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
  std::size_t crf_trans_, crf_start_, crf_end_;
};

std::vector<std::size_t> tag_indices(const std::vector<Tag>& tags);

}  // namespace crowdtag
